#include "mvmdp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SparseLU>

namespace mvmdp {

namespace {

using ColMajor = Eigen::SparseMatrix<double>;

ColMajor resolvent(const SparseMatrix& transition, double alpha) {
  ColMajor a = -alpha * ColMajor(transition);
  ColMajor eye(transition.rows(), transition.cols());
  eye.setIdentity();
  a += eye;
  a.makeCompressed();
  return a;
}

// Solves (I - alpha P) X = rhs column by column.
Eigen::MatrixXd solve_direct(const ColMajor& a, const Eigen::MatrixXd& rhs) {
  Eigen::SparseLU<ColMajor> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error("singular policy-evaluation system");
  Eigen::MatrixXd out = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw Error("policy-evaluation solve failed");
  return out;
}

bool use_direct(const EvalMethod& method, Eigen::Index n) {
  switch (method.kind) {
    case EvalMethod::Kind::kDirect:
      return true;
    case EvalMethod::Kind::kFixedPoint:
      return false;
    case EvalMethod::Kind::kAuto:
      break;
  }
  return static_cast<std::size_t>(n) <= kDirectSolveLimit;
}

Vector fixed_point(const SparseMatrix& transition, const Vector& reward, double alpha,
                   const EvalMethod& method) {
  const Vector base = (1.0 - alpha) * reward;
  const double stop = method.tolerance * (1.0 - alpha) / alpha;
  Vector v = reward;
  for (std::size_t k = 0; k < method.max_iterations; ++k) {
    Vector next = base + alpha * (transition * v);
    const double delta = (next - v).lpNorm<Eigen::Infinity>();
    v.swap(next);
    if (delta <= stop) return v;
  }
  throw ConvergenceError("fixed-point policy evaluation hit " +
                         std::to_string(method.max_iterations) + " iterations");
}

Eigen::MatrixXd evaluate_columns(const SparseMatrix& transition, const Eigen::MatrixXd& rewards,
                                 double alpha, const EvalMethod& method) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("discount outside (0,1)");
  if (use_direct(method, transition.rows())) {
    return solve_direct(resolvent(transition, alpha), (1.0 - alpha) * rewards);
  }
  Eigen::MatrixXd out(rewards.rows(), rewards.cols());
  for (Eigen::Index c = 0; c < rewards.cols(); ++c) {
    out.col(c) = fixed_point(transition, rewards.col(c), alpha, method);
  }
  return out;
}

void require_same_size(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

Vector discounted_value(const SparseMatrix& transition, const Vector& reward, double alpha,
                        EvalMethod method) {
  return evaluate_columns(transition, reward, alpha, method).col(0);
}

Vector discounted_occupancy(const SparseMatrix& transition, const Vector& mu, double alpha) {
  ColMajor at = ColMajor(resolvent(transition, alpha).transpose());
  return solve_direct(at, mu).col(0);
}

Vector eval_mean(const MarkovRewardProcess& mrp, double alpha, EvalMethod method) {
  return discounted_value(mrp.transition, mrp.reward, alpha, method);
}

Vector eval_second_moment(const MarkovRewardProcess& mrp, double alpha, EvalMethod method) {
  return discounted_value(mrp.transition, mrp.reward_sq, alpha, method);
}

double discounted_mean(const Vector& mu, const Vector& v) {
  require_same_size(mu, v);
  return mu.dot(v);
}

double discounted_variance(const Vector& mu, const Vector& w, const Vector& v, double eta) {
  require_same_size(mu, w);
  require_same_size(mu, v);
  return std::max(0.0, mu.dot(w) - 2.0 * eta * mu.dot(v) + eta * eta * mu.sum());
}

ValueBundle mean_variance_bundle(const MarkovRewardProcess& mrp, const Vector& mu, double alpha,
                                 double beta, EvalMethod method) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
  Eigen::MatrixXd rhs(mrp.reward.size(), 2);
  rhs.col(0) = mrp.reward;
  rhs.col(1) = mrp.reward_sq;
  const Eigen::MatrixXd values = evaluate_columns(mrp.transition, rhs, alpha, method);

  ValueBundle b;
  b.alpha = alpha;
  b.beta = beta;
  b.v = values.col(0);
  b.w = values.col(1);
  b.eta = discounted_mean(mu, b.v);
  b.zeta = discounted_variance(mu, b.w, b.v, b.eta);
  b.u = b.v - beta * (b.w - 2.0 * b.eta * b.v + Vector::Constant(b.v.size(), b.eta * b.eta));
  b.xi = b.eta - beta * b.zeta;
  return b;
}

ValueBundle mean_variance_bundle(const Mdp& mdp, const Policy& policy, double beta,
                                 EvalMethod method) {
  return mean_variance_bundle(induce(mdp, policy), mdp.initial_distribution(), mdp.discount(), beta,
                              method);
}

ValueBundle mean_variance_bundle(const Mdp& mdp, const MixedPolicy& mix, double beta,
                                 EvalMethod method) {
  return mean_variance_bundle(induce_mixed(mdp, mix), mdp.initial_distribution(), mdp.discount(),
                              beta, method);
}

Vector pseudo_reward(const Vector& reward, double lambda, double beta) {
  return reward.unaryExpr([&](double r) { return pseudo_reward(r, lambda, beta); });
}

Vector pseudo_reward(const MarkovRewardProcess& mrp, double lambda, double beta) {
  // E[r - beta (r - lambda)^2] = E r - beta (E r^2 - 2 lambda E r + lambda^2)
  return mrp.reward -
         beta * (mrp.reward_sq - 2.0 * lambda * mrp.reward +
                 Vector::Constant(mrp.reward.size(), lambda * lambda));
}

PseudoBundle pseudo_bundle(const Mdp& mdp, const Policy& policy, double lambda, double beta,
                           EvalMethod method) {
  const auto mrp = induce(mdp, policy);
  PseudoBundle b;
  b.lambda = lambda;
  b.f_lambda = pseudo_reward(mrp.reward, lambda, beta);
  b.u_lambda = discounted_value(mrp.transition, b.f_lambda, mdp.discount(), method);
  b.xi_lambda = mdp.initial_distribution().dot(b.u_lambda);
  return b;
}

namespace {

// (1 - alpha)(f' - f) + alpha (P' - P) u
Vector difference_bracket(const MarkovRewardProcess& mrp, const MarkovRewardProcess& mrp_prime,
                          const Vector& f, const Vector& f_prime, const Vector& u, double alpha) {
  return (1.0 - alpha) * (f_prime - f) + alpha * (mrp_prime.transition * u - mrp.transition * u);
}

}  // namespace

double performance_difference(const Mdp& mdp, const Policy& d, const Policy& d_prime, double lambda,
                              double beta) {
  const double alpha = mdp.discount();
  const auto mrp = induce(mdp, d);
  const auto mrp_prime = induce(mdp, d_prime);
  const Vector f = pseudo_reward(mrp, lambda, beta);
  const Vector f_prime = pseudo_reward(mrp_prime, lambda, beta);
  const Vector u = discounted_value(mrp.transition, f, alpha, EvalMethod::direct());
  const Vector& mu = mdp.initial_distribution();

  const double eta = mu.dot(discounted_value(mrp.transition, mrp.reward, alpha, EvalMethod::direct()));
  const double eta_prime =
      mu.dot(discounted_value(mrp_prime.transition, mrp_prime.reward, alpha, EvalMethod::direct()));

  const Vector occupancy = discounted_occupancy(mrp_prime.transition, mu, alpha);
  const double pseudo_gap = occupancy.dot(difference_bracket(mrp, mrp_prime, f, f_prime, u, alpha));
  return pseudo_gap + beta * (eta_prime - lambda) * (eta_prime - lambda) -
         beta * (eta - lambda) * (eta - lambda);
}

double mean_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime) {
  const double alpha = mdp.discount();
  const auto mrp = induce(mdp, d);
  const auto mrp_prime = induce(mdp, d_prime);
  const Vector v = discounted_value(mrp.transition, mrp.reward, alpha, EvalMethod::direct());
  const Vector occupancy = discounted_occupancy(mrp.transition, mdp.initial_distribution(), alpha);
  return occupancy.dot(difference_bracket(mrp, mrp_prime, mrp.reward, mrp_prime.reward, v, alpha));
}

double performance_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime,
                              double lambda, double beta, double d_eta_d_delta) {
  const double alpha = mdp.discount();
  const auto mrp = induce(mdp, d);
  const auto mrp_prime = induce(mdp, d_prime);
  const Vector f = pseudo_reward(mrp, lambda, beta);
  const Vector f_prime = pseudo_reward(mrp_prime, lambda, beta);
  const Vector u = discounted_value(mrp.transition, f, alpha, EvalMethod::direct());
  const Vector& mu = mdp.initial_distribution();
  const double eta = mu.dot(discounted_value(mrp.transition, mrp.reward, alpha, EvalMethod::direct()));
  const Vector occupancy = discounted_occupancy(mrp.transition, mu, alpha);
  return occupancy.dot(difference_bracket(mrp, mrp_prime, f, f_prime, u, alpha)) +
         2.0 * beta * (eta - lambda) * d_eta_d_delta;
}

double performance_derivative(const Mdp& mdp, const Policy& d, const Policy& d_prime,
                              double lambda, double beta) {
  return performance_derivative(mdp, d, d_prime, lambda, beta, mean_derivative(mdp, d, d_prime));
}

Vector local_optimality_gaps(const Mdp& mdp, const Policy& policy, double beta) {
  const auto bundle = mean_variance_bundle(mdp, policy, beta);
  const double alpha = mdp.discount();
  Vector gaps(bundle.u.size());
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.num_actions(x); ++a) {
      const double q = (1.0 - alpha) * pseudo_reward(mdp.reward(x, a), bundle.eta, beta) +
                       alpha * mdp.expect(x, a, bundle.u);
      best = std::max(best, q);
    }
    gaps[static_cast<Eigen::Index>(x)] = best - bundle.u[static_cast<Eigen::Index>(x)];
  }
  return gaps;
}

double local_optimality_residual(const Mdp& mdp, const Policy& policy, double beta) {
  return local_optimality_gaps(mdp, policy, beta).maxCoeff();
}

}  // namespace mvmdp
