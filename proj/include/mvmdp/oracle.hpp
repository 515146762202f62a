#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/mdp.hpp"

namespace mvmdp {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// Number of deterministic policies, or nullopt when it exceeds `cap`.
std::optional<std::size_t> policy_count(const Mdp& mdp, std::size_t cap = kDefaultEnumerationCap);

struct PolicyRecord {
  Policy policy;
  double eta = 0.0;
  double zeta = 0.0;
  double xi = 0.0;
};

/// Evaluates every deterministic policy. Throws CapacityError above `cap`.
std::vector<PolicyRecord> enumerate_policies(const Mdp& mdp, double beta,
                                             std::size_t cap = kDefaultEnumerationCap);

struct GlobalOptimum {
  double xi_star = 0.0;
  std::vector<PolicyRecord> optimal;  ///< maximizers found (all of D* when exhaustive)
  bool exhaustive = false;

  /// eta of the optimal policy whose discounted mean is closest to `eta_ref`.
  double eta_star_nearest(double eta_ref) const;
};

/// Tolerance within which a policy counts as attaining xi*.
inline constexpr double kOptimumTolerance = 1e-10;

/**
 * Exact global maximum of xi by exhaustive enumeration of deterministic
 * policies. Refuses with CapacityError when the policy count exceeds `cap`.
 */
GlobalOptimum enumerate_global_optimum(const Mdp& mdp, double beta,
                                       std::size_t cap = kDefaultEnumerationCap);

/**
 * Exact global maximum of xi without enumeration.
 *
 * For fixed beta, xi_lambda(d) + beta lambda^2 is affine in lambda with slope
 * 2 beta eta_d, so max_d xi_lambda + beta lambda^2 is a convex piecewise-linear
 * function of lambda whose pieces are optimal policies of ordinary MDPs. Every
 * global maximizer d* owns the piece around lambda = eta_{d*}, so walking all
 * pieces (solving each breakpoint MDP exactly by policy iteration) and
 * re-scoring the collected policies by their true xi yields xi*. The optimal
 * list is not exhaustive: policies that differ only off the reachable set are
 * reported once.
 */
GlobalOptimum parametric_global_optimum(const Mdp& mdp, double beta);

/// Enumeration within cap, the parametric walk otherwise.
GlobalOptimum global_optimum(const Mdp& mdp, double beta, std::size_t cap = kDefaultEnumerationCap);

struct MonteCarloOptions {
  std::size_t trajectories = 10000;
  std::size_t horizon = 0;  ///< 0 selects default_horizon()
  std::uint64_t seed = 1;
  unsigned threads = 0;  ///< 0 reads MVMDP_THREADS, else hardware concurrency
};

struct MonteCarloEstimate {
  double eta = 0.0;
  double zeta = 0.0;
  double xi = 0.0;
  double eta_se = 0.0;
  double zeta_se = 0.0;
  double xi_se = 0.0;
  std::size_t horizon = 0;
  std::size_t trajectories = 0;
};

/// Horizon T with alpha^T * max(R, R^2) <= 1e-8 (1 - alpha): truncation bias below 1e-8.
std::size_t default_horizon(const Mdp& mdp);

/**
 * Simulates `trajectories` paths of length T from mu under `policy`.
 *
 * Each trajectory draws from its own generator seeded by (seed, index), so the
 * result is bit-identical for any thread count. zeta uses the plug-in eta.
 */
MonteCarloEstimate monte_carlo_estimate(const Mdp& mdp, const Policy& policy, double beta,
                                        const MonteCarloOptions& options = {});

struct CertifyOptions {
  std::size_t cap = kDefaultEnumerationCap;
  /// Above the cap, check every single-state deviation instead of refusing.
  bool allow_single_deviation = true;
  double tolerance = 1e-8;
};

struct LocalCertificate {
  bool is_local = false;
  Policy worst_direction;
  double worst_derivative = 0.0;
  std::size_t directions_checked = 0;
  bool single_deviation = false;
};

/// Signs d xi / d delta (lambda = eta) toward every alternative deterministic policy.
LocalCertificate certify_local_optimum(const Mdp& mdp, const Policy& policy, double beta,
                                       const CertifyOptions& options = {});

/// Columns: policy,xi,eta,zeta
void write_oracle_csv(std::ostream& out, const std::vector<PolicyRecord>& records);

}  // namespace mvmdp
