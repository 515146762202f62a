#include "mvmdp/check.hpp"

#include <algorithm>
#include <cmath>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/format.hpp"
#include "mvmdp/solvers.hpp"

namespace mvmdp {

double xi_along_blend(const Mdp& mdp, const Policy& d, const Policy& d_prime, double delta, double beta) {
  const auto a = induce(mdp, d);
  const auto b = induce(mdp, d_prime);
  MarkovRewardProcess m;
  m.transition = (1.0 - delta) * a.transition + delta * b.transition;
  m.reward = (1.0 - delta) * a.reward + delta * b.reward;
  m.reward_sq = (1.0 - delta) * a.reward_sq + delta * b.reward_sq;
  return mean_variance_bundle(m, mdp.initial_distribution(), mdp.discount(), beta, EvalMethod::direct()).xi;
}

namespace {

// Greedy improvement at lambda = eta plus single-state deviations, capped.
std::vector<Policy> alternatives(const Mdp& mdp, const Policy& d, double eta, const Vector& u, double beta) {
  constexpr std::size_t kMaxDirections = 40;
  std::vector<Policy> out;
  const Policy g = greedy_policy(mdp, u, eta, beta);
  if (!(g == d)) out.push_back(g);
  for (std::size_t x = 0; x < mdp.num_states() && out.size() < kMaxDirections; ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(x) && out.size() < kMaxDirections; ++a) {
      if (a == d[x]) continue;
      auto acts = d.actions();
      acts[x] = a;
      out.emplace_back(std::move(acts));
    }
  }
  return out;
}

IdentityResult make(std::string name, double residual, double tol, std::string detail = {}) {
  return {std::move(name), residual, tol, residual <= tol, false, std::move(detail)};
}

}  // namespace

std::vector<IdentityResult> run_identity_suite(const Mdp& mdp, const Policy& policy, double beta,
                                               const MonteCarloOptions& mc) {
  check_admissible(mdp, policy);
  const auto b = mean_variance_bundle(mdp, policy, beta);
  std::vector<IdentityResult> out;

  const std::vector<double> lambdas{b.eta, 0.0, mdp.min_reward(), mdp.max_reward(), b.eta + 1.0};
  {
    double worst = 0.0;
    for (double lambda : lambdas) {
      const auto pb = pseudo_bundle(mdp, policy, lambda, beta);
      const double expect = b.xi - beta * (b.eta - lambda) * (b.eta - lambda);
      worst = std::max(worst, std::abs(pb.xi_lambda - expect) / std::max(1.0, std::abs(expect)));
    }
    out.push_back(make("pseudo-mean-shift", worst, 1e-9));
  }

  const double self = performance_difference(mdp, policy, policy, b.eta, beta);
  out.push_back(make("difference-self", std::abs(self), 0.0));

  const auto alts = alternatives(mdp, policy, b.eta, b.u, beta);
  {
    double worst = 0.0;
    for (const auto& alt : alts) {
      const double direct = mean_variance_bundle(mdp, alt, beta).xi - b.xi;
      for (double lambda : {b.eta, 0.0}) {
        const double pdf = performance_difference(mdp, policy, alt, lambda, beta);
        worst = std::max(worst, std::abs(pdf - direct) / std::max(1.0, std::abs(direct)));
      }
    }
    out.push_back(make("performance-difference", worst, 1e-8, std::to_string(alts.size()) + " directions"));
  }
  {
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (const auto& alt : alts) {
      const double fd = (xi_along_blend(mdp, policy, alt, h, beta) - xi_along_blend(mdp, policy, alt, -h, beta)) / (2 * h);
      for (double lambda : {b.eta, 0.0}) {
        const double der = performance_derivative(mdp, policy, alt, lambda, beta);
        worst = std::max(worst, std::abs(der - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    out.push_back(make("derivative-vs-finite-difference", worst, 1e-4, std::to_string(alts.size()) + " directions"));
  }
  {
    auto r = make("local-optimality-residual", local_optimality_residual(mdp, policy, beta), 1e-8);
    r.informational = true;
    r.detail = r.passed ? "local optimum" : "improvable";
    out.push_back(r);
  }
  {
    const auto est = monte_carlo_estimate(mdp, policy, beta, mc);
    const auto z = [](double diff, double se) { return se > 0.0 ? std::abs(diff) / se : (std::abs(diff) <= 1e-9 ? 0.0 : INFINITY); };
    const double worst = std::max(z(est.eta - b.eta, est.eta_se), z(est.zeta - b.zeta, est.zeta_se));
    out.push_back(make("monte-carlo", worst, 3.0,
                       "eta " + fmt10(est.eta) + " vs " + fmt10(b.eta) + ", zeta " + fmt10(est.zeta) + " vs " + fmt10(b.zeta)));
  }
  return out;
}

bool suite_passed(const std::vector<IdentityResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.informational || r.passed; });
}

}  // namespace mvmdp
