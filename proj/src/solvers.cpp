#include "mvmdp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvmdp/format.hpp"

namespace mvmdp {

std::string_view to_string(SolverVariant variant) {
  switch (variant) {
    case SolverVariant::kPiStandard:
      return "pi-standard";
    case SolverVariant::kPiOptimistic:
      return "pi-optimistic";
    case SolverVariant::kViStandard:
      return "vi-standard";
    case SolverVariant::kViOptimistic:
      return "vi-optimistic";
    case SolverVariant::kDmvvi:
      return "dmvvi";
  }
  return "unknown";
}

SolverVariant parse_solver_variant(std::string_view name) {
  for (auto v : {SolverVariant::kPiStandard, SolverVariant::kPiOptimistic, SolverVariant::kViStandard,
                 SolverVariant::kViOptimistic, SolverVariant::kDmvvi}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown solver variant '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (max_outer < 1 || max_inner < 1) throw std::invalid_argument("iteration caps must be >= 1");
  if (!(tie_tolerance >= 0.0)) throw std::invalid_argument("tie tolerance must be >= 0");
  if (lambda_init && !std::isfinite(*lambda_init)) throw std::invalid_argument("lambda_init not finite");
}

namespace {

double inf_norm(const Vector& x) { return x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0; }

void require_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
}

void require_size(const Mdp& mdp, const Vector& x, const char* what) {
  if (static_cast<std::size_t>(x.size()) != mdp.num_states()) {
    throw std::invalid_argument(std::string(what) + " has wrong dimension");
  }
}

std::size_t pick_action(const std::vector<double>& q, TieBreak tie_break, double tie_tolerance) {
  const double best = *std::max_element(q.begin(), q.end());
  const double cut = best - tie_tolerance * std::max(1.0, std::abs(best));
  if (tie_break == TieBreak::kLowestIndex) {
    for (std::size_t a = 0; a < q.size(); ++a) {
      if (q[a] >= cut) return a;
    }
  } else {
    for (std::size_t a = q.size(); a-- > 0;) {
      if (q[a] >= cut) return a;
    }
  }
  return 0;
}

// max_a Q(x, a) - u(x) in the infinity norm.
double bellman_residual(const Mdp& mdp, const Vector& u, double lambda, double beta) {
  double worst = 0.0;
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.num_actions(x); ++a) {
      best = std::max(best, pseudo_q_value(mdp, x, a, u, lambda, beta));
    }
    worst = std::max(worst, std::abs(best - u[static_cast<Eigen::Index>(x)]));
  }
  return worst;
}

// u' = (1 - alpha) f_{lambda,d} + alpha P_d u
Vector apply_pseudo_operator(const Mdp& mdp, const Policy& d, const Vector& u, double lambda,
                             double beta) {
  Vector out(u.size());
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    out[static_cast<Eigen::Index>(x)] = pseudo_q_value(mdp, x, d[x], u, lambda, beta);
  }
  return out;
}

Vector exact_pseudo_value(const Mdp& mdp, const Policy& d, double lambda, double beta) {
  const auto mrp = induce(mdp, d);
  return discounted_value(mrp.transition, pseudo_reward(mrp, lambda, beta), mdp.discount());
}

double exact_mean(const Mdp& mdp, const Policy& d) {
  const auto mrp = induce(mdp, d);
  return mdp.initial_distribution().dot(eval_mean(mrp, mdp.discount()));
}

void record_outer(SolveResult& res, TraceRecord rec, const Mdp& mdp, const Policy& d, double beta) {
  const auto bundle = mean_variance_bundle(mdp, d, beta);
  rec.xi = bundle.xi;
  rec.eta = bundle.eta;
  rec.zeta = bundle.zeta;
  res.lambda_trace.push_back(rec.lambda);
  res.xi_trace.push_back(rec.xi);
  res.inner_iterations.push_back(rec.inner_iterations);
  res.trace.push_back(std::move(rec));
}

void finalize(SolveResult& res, const Mdp& mdp, const Policy& d, double beta, double lambda_final,
              double xi_iterate) {
  res.policy = d;
  res.bundle = mean_variance_bundle(mdp, d, beta);
  res.local_residual = local_optimality_residual(mdp, d, beta);
  res.final_lambda = lambda_final;
  res.xi_iterate = xi_iterate;
}

}  // namespace

double default_lambda_init(const Mdp& mdp) {
  double acc = 0.0;
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    acc += mdp.initial_distribution()[static_cast<Eigen::Index>(x)] * mdp.reward(x, 0);
  }
  return acc;
}

double pseudo_q_value(const Mdp& mdp, std::size_t x, std::size_t a, const Vector& u, double lambda,
                      double beta) {
  const double alpha = mdp.discount();
  return (1.0 - alpha) * pseudo_reward(mdp.reward(x, a), lambda, beta) + alpha * mdp.expect(x, a, u);
}

Policy greedy_policy(const Mdp& mdp, const Vector& u_lambda, double lambda, double beta,
                     TieBreak tie_break, double tie_tolerance) {
  require_size(mdp, u_lambda, "u_lambda");
  std::vector<std::size_t> actions(mdp.num_states());
  std::vector<double> q;
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    q.resize(mdp.num_actions(x));
    for (std::size_t a = 0; a < q.size(); ++a) q[a] = pseudo_q_value(mdp, x, a, u_lambda, lambda, beta);
    actions[x] = pick_action(q, tie_break, tie_tolerance);
  }
  return Policy(std::move(actions));
}

Vector apply_mean_operator(const Mdp& mdp, const Policy& d, const Vector& v) {
  const double alpha = mdp.discount();
  Vector out(v.size());
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    out[static_cast<Eigen::Index>(x)] =
        (1.0 - alpha) * mdp.reward(x, d[x]) + alpha * mdp.expect(x, d[x], v);
  }
  return out;
}

Vector apply_second_moment_operator(const Mdp& mdp, const Policy& d, const Vector& w) {
  const double alpha = mdp.discount();
  Vector out(w.size());
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    const double r = mdp.reward(x, d[x]);
    out[static_cast<Eigen::Index>(x)] = (1.0 - alpha) * r * r + alpha * mdp.expect(x, d[x], w);
  }
  return out;
}

InnerPolicyResult solve_pseudo_mdp(const Mdp& mdp, double lambda, double beta,
                                   const Policy& warm_start, std::size_t max_iterations) {
  SolverConfig config;
  config.max_inner = max_iterations;
  const Policy start =
      warm_start.size() == mdp.num_states() ? warm_start : Policy::constant(mdp.num_states());
  return inner_policy_iteration(mdp, lambda, beta, InnerVariant::kStandard, start, config);
}

InnerPolicyResult inner_policy_iteration(const Mdp& mdp, double lambda, double beta,
                                         InnerVariant variant, const Policy& warm_start,
                                         const SolverConfig& config) {
  require_beta(beta);
  check_admissible(mdp, warm_start);
  InnerPolicyResult out;
  Policy d = warm_start;
  for (;;) {
    out.u_lambda = exact_pseudo_value(mdp, d, lambda, beta);
    ++out.iterations;
    Policy improved = greedy_policy(mdp, out.u_lambda, lambda, beta, config.tie_break,
                                    config.tie_tolerance);
    const bool stable = improved == d;
    d = std::move(improved);
    if (variant == InnerVariant::kOptimistic || stable) break;
    if (out.iterations >= config.max_inner) {
      out.converged = false;
      break;
    }
  }
  out.residual = bellman_residual(mdp, out.u_lambda, lambda, beta);
  out.lambda_next = exact_mean(mdp, d);
  out.policy = std::move(d);
  return out;
}

InnerValueResult inner_value_iteration(const Mdp& mdp, double lambda, double beta,
                                       InnerVariant variant, const Vector& warm_v,
                                       const Vector& warm_u, const SolverConfig& config) {
  require_beta(beta);
  require_size(mdp, warm_v, "warm v");
  require_size(mdp, warm_u, "warm u_lambda");
  InnerValueResult out;
  out.v = warm_v;
  out.u_lambda = warm_u;
  for (;;) {
    out.policy = greedy_policy(mdp, out.u_lambda, lambda, beta, config.tie_break, config.tie_tolerance);
    Vector next = apply_pseudo_operator(mdp, out.policy, out.u_lambda, lambda, beta);
    out.v = apply_mean_operator(mdp, out.policy, out.v);
    out.residual = inf_norm(next - out.u_lambda);
    out.sweep_deltas.push_back(out.residual);
    out.u_lambda.swap(next);
    ++out.iterations;
    if (variant == InnerVariant::kOptimistic || out.residual <= config.theta) break;
    if (out.iterations >= config.max_inner) {
      out.converged = false;
      break;
    }
  }
  out.lambda_next = config.exact_lambda ? exact_mean(mdp, out.policy)
                                        : mdp.initial_distribution().dot(out.v);
  return out;
}

SolveResult bilevel_solve(const Mdp& mdp, double beta, const SolverConfig& config) {
  if (config.inner == SolverVariant::kDmvvi) return dmvvi(mdp, beta, config);
  config.validate();
  require_beta(beta);

  const std::size_t n = mdp.num_states();
  const auto size = static_cast<Eigen::Index>(n);
  const bool policy_based =
      config.inner == SolverVariant::kPiStandard || config.inner == SolverVariant::kPiOptimistic;
  const bool optimistic =
      config.inner == SolverVariant::kPiOptimistic || config.inner == SolverVariant::kViOptimistic;
  const InnerVariant inner = optimistic ? InnerVariant::kOptimistic : InnerVariant::kStandard;

  SolveResult res;
  Policy d = Policy::constant(n);
  Vector v = config.initial_v.value_or(Vector::Zero(size));
  Vector u = Vector::Zero(size);
  require_size(mdp, v, "initial v");
  double lambda_next = config.lambda_init.value_or(default_lambda_init(mdp));
  double lambda = lambda_next;

  for (std::size_t outer = 1; outer <= config.max_outer; ++outer) {
    lambda = lambda_next;
    TraceRecord rec;
    rec.outer = outer;
    rec.lambda = lambda;
    bool inner_ok = true;
    if (policy_based) {
      auto step = inner_policy_iteration(mdp, lambda, beta, inner, d, config);
      d = std::move(step.policy);
      u = std::move(step.u_lambda);
      lambda_next = step.lambda_next;
      rec.inner_iterations = step.iterations;
      rec.residual = step.residual;
      inner_ok = step.converged;
    } else {
      auto step = inner_value_iteration(mdp, lambda, beta, inner, v, u, config);
      d = std::move(step.policy);
      v = std::move(step.v);
      u = std::move(step.u_lambda);
      lambda_next = step.lambda_next;
      rec.inner_iterations = step.iterations;
      rec.residual = step.residual;
      rec.sweep_deltas = std::move(step.sweep_deltas);
      inner_ok = step.converged;
    }
    rec.lambda_next = lambda_next;
    rec.pseudo_xi = mdp.initial_distribution().dot(u);
    record_outer(res, std::move(rec), mdp, d, beta);
    if (!inner_ok) break;
    if (std::abs(lambda_next - lambda) <= config.theta) {
      res.converged = true;
      break;
    }
  }
  finalize(res, mdp, d, beta, lambda_next, mdp.initial_distribution().dot(u));
  return res;
}

SolveResult dmvvi(const Mdp& mdp, double beta, const SolverConfig& config) {
  config.validate();
  require_beta(beta);
  const std::size_t n = mdp.num_states();
  const auto size = static_cast<Eigen::Index>(n);
  const Vector& mu = mdp.initial_distribution();
  const Vector ones = Vector::Ones(size);

  Vector v = config.initial_v.value_or(Vector::Zero(size));
  Vector w = config.initial_w.value_or(Vector::Zero(size));
  require_size(mdp, v, "initial v");
  require_size(mdp, w, "initial w");
  Vector v_next = v;
  Vector w_next = w;
  Vector u = Vector::Zero(size);
  bool have_u = false;

  double lambda_next = config.lambda_init.value_or(default_lambda_init(mdp));
  double lambda = lambda_next;
  Policy d = Policy::constant(n);
  SolveResult res;

  for (std::size_t outer = 1; outer <= config.max_outer; ++outer) {
    lambda = lambda_next;
    const auto compose = [&](const Vector& vv, const Vector& ww) -> Vector {
      return vv - beta * (ww - 2.0 * lambda * vv + lambda * lambda * ones);
    };
    TraceRecord rec;
    rec.outer = outer;
    rec.lambda = lambda;
    bool inner_ok = true;
    std::size_t k = 0;
    for (;;) {
      const double composed_gap =
          have_u ? inf_norm(u - compose(v_next, w_next)) : std::numeric_limits<double>::infinity();
      const double mean_gap = inf_norm(v_next - v);
      rec.residual = std::max(composed_gap, mean_gap);
      if (composed_gap <= config.theta && mean_gap <= config.theta) break;
      if (k >= config.max_inner) {
        inner_ok = false;
        break;
      }
      v = v_next;
      w = w_next;
      u = compose(v, w);
      have_u = true;
      d = greedy_policy(mdp, u, lambda, beta, config.tie_break, config.tie_tolerance);
      v_next = apply_mean_operator(mdp, d, v);
      w_next = apply_second_moment_operator(mdp, d, w);
      rec.sweep_deltas.push_back(inf_norm(compose(v_next, w_next) - u));
      ++k;
    }
    lambda_next = config.exact_lambda ? exact_mean(mdp, d) : mu.dot(v_next);
    rec.lambda_next = lambda_next;
    rec.inner_iterations = k;
    rec.pseudo_xi = mu.dot(u);
    record_outer(res, std::move(rec), mdp, d, beta);
    if (!inner_ok) break;
    if (std::abs(lambda_next - lambda) <= config.theta) {
      res.converged = true;
      break;
    }
  }
  finalize(res, mdp, d, beta, lambda_next, mu.dot(u));
  return res;
}

RiskNeutralSolution risk_neutral_value_iteration(const Mdp& mdp, double theta,
                                                 std::size_t max_iterations) {
  // Plain Bellman optimality iteration on r; identical to the pseudo operator at beta = 0.
  const double alpha = mdp.discount();
  const auto size = static_cast<Eigen::Index>(mdp.num_states());
  RiskNeutralSolution out;
  out.value = Vector::Zero(size);
  const double stop = theta * (1.0 - alpha) / alpha;
  for (;;) {
    Vector next(size);
    for (std::size_t x = 0; x < mdp.num_states(); ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.num_actions(x); ++a) {
        best = std::max(best, (1.0 - alpha) * mdp.reward(x, a) + alpha * mdp.expect(x, a, out.value));
      }
      next[static_cast<Eigen::Index>(x)] = best;
    }
    const double delta = inf_norm(next - out.value);
    out.value.swap(next);
    ++out.iterations;
    if (delta <= stop) break;
    if (out.iterations >= max_iterations) throw ConvergenceError("risk-neutral value iteration cap hit");
  }
  out.policy = greedy_policy(mdp, out.value, 0.0, 0.0);
  out.eta = exact_mean(mdp, out.policy);
  return out;
}

std::size_t iteration_lower_bound(const Mdp& mdp, double lambda, double beta, double epsilon,
                                  const Vector& initial_u) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  require_beta(beta);
  require_size(mdp, initial_u, "initial u");
  const double alpha = mdp.discount();
  const double residual = bellman_residual(mdp, initial_u, lambda, beta);
  if (residual == 0.0) return 1;
  const double exponent = std::log(epsilon * (1.0 - alpha) / (2.0 * residual)) / std::log(alpha);
  const double n = std::ceil(exponent) + 1.0;
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

void write_trace_csv(std::ostream& out, const SolveResult& result) {
  out << "outer,lambda,xi,eta,zeta,inner_iters,residual\n";
  for (const auto& r : result.trace) {
    out << r.outer << ',' << fmt10(r.lambda) << ',' << fmt10(r.xi) << ',' << fmt10(r.eta) << ','
        << fmt10(r.zeta) << ',' << r.inner_iterations << ',' << fmt10(r.residual) << '\n';
  }
}

}  // namespace mvmdp
