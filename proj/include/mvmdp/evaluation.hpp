#pragma once

#include <cstddef>

#include "mvmdp/mdp.hpp"

namespace mvmdp {

/// Above this many states `EvalMethod::kAuto` switches from LU to fixed-point iteration.
inline constexpr std::size_t kDirectSolveLimit = 2000;

struct EvalMethod {
  enum class Kind { kAuto, kDirect, kFixedPoint };

  Kind kind = Kind::kAuto;
  double tolerance = 1e-10;
  std::size_t max_iterations = 1'000'000;

  static EvalMethod direct() { return {Kind::kDirect}; }
  static EvalMethod fixed_point(double tol = 1e-10) { return {Kind::kFixedPoint, tol}; }
};

/**
 * Solves v = (1 - alpha) r + alpha P v, i.e. v = (1 - alpha)(I - alpha P)^{-1} r.
 *
 * The fixed-point route stops once successive iterates are within
 * tolerance * (1 - alpha) / alpha of each other, which bounds both the Bellman
 * residual and the distance to the exact solution by `tolerance`.
 * Throws ConvergenceError if the iteration cap is reached.
 */
Vector discounted_value(const SparseMatrix& transition, const Vector& reward, double alpha,
                        EvalMethod method = {});

/// Occupancy row vector mu (I - alpha P)^{-1} (not normalized by 1 - alpha).
Vector discounted_occupancy(const SparseMatrix& transition, const Vector& mu, double alpha);

Vector eval_mean(const MarkovRewardProcess& mrp, double alpha, EvalMethod method = {});
Vector eval_second_moment(const MarkovRewardProcess& mrp, double alpha, EvalMethod method = {});

/// eta = mu . v
double discounted_mean(const Vector& mu, const Vector& v);
/// zeta = mu . (w - 2 eta v + eta^2 e), floored at 0 against rounding
double discounted_variance(const Vector& mu, const Vector& w, const Vector& v, double eta);

/// Value functions and scalar performances of one policy.
struct ValueBundle {
  Vector v;  ///< normalized discounted mean value function
  Vector w;  ///< normalized discounted second-moment value function
  Vector u;  ///< discounted mean-variance value function v - beta (w - 2 eta v + eta^2)
  double eta = 0.0;
  double zeta = 0.0;
  double xi = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
};

ValueBundle mean_variance_bundle(const MarkovRewardProcess& mrp, const Vector& mu, double alpha,
                                 double beta, EvalMethod method = {});
ValueBundle mean_variance_bundle(const Mdp& mdp, const Policy& policy, double beta,
                                 EvalMethod method = {});
ValueBundle mean_variance_bundle(const Mdp& mdp, const MixedPolicy& mix, double beta,
                                 EvalMethod method = {});

/// f(x) = r(x) - beta (r(x) - lambda)^2, element-wise.
Vector pseudo_reward(const Vector& reward, double lambda, double beta);
/// Pseudo reward of a reward process; uses E[r^2] so mixed policies blend correctly.
Vector pseudo_reward(const MarkovRewardProcess& mrp, double lambda, double beta);
/// Scalar form for a single state-action reward.
inline double pseudo_reward(double r, double lambda, double beta) {
  const double dev = r - lambda;
  return r - beta * dev * dev;
}

struct PseudoBundle {
  double lambda = 0.0;
  Vector f_lambda;
  Vector u_lambda;
  double xi_lambda = 0.0;
};

PseudoBundle pseudo_bundle(const Mdp& mdp, const Policy& policy, double lambda, double beta,
                           EvalMethod method = {});

/// Closed-form xi(d') - xi(d) through the pseudo mean lambda.
double performance_difference(const Mdp& mdp, const Policy& d, const Policy& d_prime, double lambda,
                              double beta);

/// d eta / d delta at delta = 0 along the mixed policy d^{delta, d'}.
double mean_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime);

/// d xi / d delta at delta = 0 along d^{delta, d'}, with a caller-supplied d eta / d delta.
double performance_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime,
                              double lambda, double beta, double d_eta_d_delta);
/// As above, computing d eta / d delta with mean_derivative().
double performance_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime,
                              double lambda, double beta);

/// Per-state max_a {(1-alpha)[r - beta (r - eta)^2] + alpha E u} - u(x), with eta, u of `policy`.
Vector local_optimality_gaps(const Mdp& mdp, const Policy& policy, double beta);
/// Largest entry of local_optimality_gaps().
double local_optimality_residual(const Mdp& mdp, const Policy& policy, double beta);

}  // namespace mvmdp
