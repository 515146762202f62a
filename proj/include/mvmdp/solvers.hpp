#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/mdp.hpp"

namespace mvmdp {

enum class SolverVariant { kPiStandard, kPiOptimistic, kViStandard, kViOptimistic, kDmvvi };
enum class InnerVariant { kStandard, kOptimistic };
enum class TieBreak { kLowestIndex, kHighestIndex };

std::string_view to_string(SolverVariant variant);
/// Accepts "pi-standard", "pi-optimistic", "vi-standard", "vi-optimistic", "dmvvi".
SolverVariant parse_solver_variant(std::string_view name);

/// Relative width of an argmax tie: values within tol * max(1, |best|) count as equal.
inline constexpr double kDefaultTieTolerance = 1e-12;

struct SolverConfig {
  double theta = 1e-5;
  /// Initial pseudo mean; defaults to mu . r under the all-zero-action policy.
  std::optional<double> lambda_init;
  SolverVariant inner = SolverVariant::kDmvvi;
  std::size_t max_outer = 1000;
  std::size_t max_inner = 100000;
  TieBreak tie_break = TieBreak::kLowestIndex;
  double tie_tolerance = kDefaultTieTolerance;
  /// Replace lambda' = mu . v (iterated) by the exact discounted mean of the improved policy.
  bool exact_lambda = false;
  /// Initial mean / second-moment value functions for the value-iteration variants (default 0).
  std::optional<Vector> initial_v;
  std::optional<Vector> initial_w;

  /// Throws std::invalid_argument on theta <= 0 or zero caps.
  void validate() const;
};

/// One outer iteration of the bilevel loop.
struct TraceRecord {
  std::size_t outer = 0;
  double lambda = 0.0;           ///< pseudo mean used by this inner solve
  double lambda_next = 0.0;      ///< pseudo mean handed to the next outer step
  double xi = 0.0;               ///< exact xi of the improved policy
  double eta = 0.0;
  double zeta = 0.0;
  double pseudo_xi = 0.0;        ///< mu . u_lambda held by the iterate at exit
  std::size_t inner_iterations = 0;
  double residual = 0.0;         ///< inner stopping residual at exit
  std::vector<double> sweep_deltas;  ///< ||u_{k+1} - u_k|| per inner sweep (value iteration only)
};

struct SolveResult {
  Policy policy;
  ValueBundle bundle;  ///< exact evaluation of `policy`
  std::vector<double> lambda_trace;
  std::vector<double> xi_trace;
  std::vector<std::size_t> inner_iterations;
  std::vector<TraceRecord> trace;
  double local_residual = 0.0;
  double final_lambda = 0.0;
  double xi_iterate = 0.0;  ///< mu . u_lambda of the final iterate
  bool converged = false;
};

double default_lambda_init(const Mdp& mdp);

/// (1 - alpha) f_lambda(x, a) + alpha sum_y p(y|x,a) u(y)
double pseudo_q_value(const Mdp& mdp, std::size_t x, std::size_t a, const Vector& u, double lambda,
                      double beta);

/// Greedy policy for the lambda-parameterized Bellman optimality equation.
Policy greedy_policy(const Mdp& mdp, const Vector& u_lambda, double lambda, double beta,
                     TieBreak tie_break = TieBreak::kLowestIndex,
                     double tie_tolerance = kDefaultTieTolerance);

/// T_{v,d} v = (1 - alpha) r_d + alpha P_d v
Vector apply_mean_operator(const Mdp& mdp, const Policy& d, const Vector& v);
/// T_{w,d} w = (1 - alpha) r_d^2 + alpha P_d w
Vector apply_second_moment_operator(const Mdp& mdp, const Policy& d, const Vector& w);

struct InnerPolicyResult {
  Policy policy;
  double lambda_next = 0.0;
  std::size_t iterations = 0;
  Vector u_lambda;  ///< exact pseudo value of the last evaluated policy
  double residual = 0.0;
  bool converged = true;
};

/**
 * Policy iteration on the standard MDP with pseudo reward f_lambda.
 *
 * The standard variant alternates exact evaluation and greedy improvement
 * until the policy is stable; the optimistic variant performs a single
 * evaluate-improve step. Either way lambda_next is the exact discounted mean
 * of the returned policy.
 */
InnerPolicyResult inner_policy_iteration(const Mdp& mdp, double lambda, double beta,
                                         InnerVariant variant, const Policy& warm_start,
                                         const SolverConfig& config = {});

struct InnerValueResult {
  Policy policy;
  double lambda_next = 0.0;
  Vector v;
  Vector u_lambda;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> sweep_deltas;
  bool converged = true;
};

/**
 * Value iteration on the standard MDP with pseudo reward f_lambda, advancing
 * the companion mean value function v with the same greedy policy each sweep.
 * The standard variant sweeps until ||u' - u|| <= theta, the optimistic
 * variant sweeps once; lambda_next = mu . v at exit.
 */
InnerValueResult inner_value_iteration(const Mdp& mdp, double lambda, double beta,
                                       InnerVariant variant, const Vector& warm_v,
                                       const Vector& warm_u, const SolverConfig& config = {});

/// Outer pseudo-mean loop dispatching to the configured inner solver.
SolveResult bilevel_solve(const Mdp& mdp, double beta, const SolverConfig& config = {});

/// Discounted mean-variance value iteration maintaining v and w.
SolveResult dmvvi(const Mdp& mdp, double beta, const SolverConfig& config = {});

/// Optimal policy and value of the risk-neutral problem by value iteration.
struct RiskNeutralSolution {
  Policy policy;
  Vector value;
  double eta = 0.0;
  std::size_t iterations = 0;
};
RiskNeutralSolution risk_neutral_value_iteration(const Mdp& mdp, double theta = 1e-12,
                                                 std::size_t max_iterations = 10'000'000);

/// Optimal policy of the pseudo MDP at fixed lambda by exact policy iteration.
InnerPolicyResult solve_pseudo_mdp(const Mdp& mdp, double lambda, double beta,
                                   const Policy& warm_start = {},
                                   std::size_t max_iterations = 100000);

/**
 * Smallest n with 2 alpha^{n-1} / (1 - alpha) * ||T u_1 - u_1|| <= epsilon,
 * where T is the lambda-parameterized Bellman optimality operator.
 * Returns 1 when u_1 is already a fixed point. Throws std::invalid_argument
 * on epsilon <= 0.
 */
std::size_t iteration_lower_bound(const Mdp& mdp, double lambda, double beta, double epsilon,
                                  const Vector& initial_u);

/// Columns: outer,lambda,xi,eta,zeta,inner_iters,residual
void write_trace_csv(std::ostream& out, const SolveResult& result);

}  // namespace mvmdp
