#include "mvmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "mvmdp/format.hpp"
#include "mvmdp/parallel.hpp"
#include "mvmdp/solvers.hpp"

namespace mvmdp {

std::optional<std::size_t> policy_count(const Mdp& mdp, std::size_t cap) {
  std::size_t count = 1;
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    const std::size_t k = mdp.num_actions(x);
    if (count > cap / k) return std::nullopt;
    count *= k;
  }
  if (count > cap) return std::nullopt;
  return count;
}

std::vector<PolicyRecord> enumerate_policies(const Mdp& mdp, double beta, std::size_t cap) {
  const auto count = policy_count(mdp, cap);
  if (!count) {
    throw CapacityError("policy space exceeds the enumeration cap of " + std::to_string(cap));
  }
  std::vector<PolicyRecord> out;
  out.reserve(*count);
  std::vector<std::size_t> actions(mdp.num_states(), 0);
  for (;;) {
    Policy d(actions);
    const auto b = mean_variance_bundle(mdp, d, beta);
    out.push_back({std::move(d), b.eta, b.zeta, b.xi});
    // Odometer over action indices, state 0 fastest.
    std::size_t x = 0;
    while (x < actions.size() && ++actions[x] == mdp.num_actions(x)) actions[x++] = 0;
    if (x == actions.size()) break;
  }
  return out;
}

double GlobalOptimum::eta_star_nearest(double eta_ref) const {
  double best = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& r : optimal) {
    if (std::abs(r.eta - eta_ref) < gap) {
      gap = std::abs(r.eta - eta_ref);
      best = r.eta;
    }
  }
  return best;
}

namespace {

GlobalOptimum collect_optimum(std::vector<PolicyRecord> records, bool exhaustive) {
  GlobalOptimum g;
  g.exhaustive = exhaustive;
  g.xi_star = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) g.xi_star = std::max(g.xi_star, r.xi);
  for (auto& r : records) {
    if (r.xi >= g.xi_star - kOptimumTolerance) g.optimal.push_back(std::move(r));
  }
  return g;
}

PolicyRecord score(const Mdp& mdp, Policy d, double beta) {
  const auto b = mean_variance_bundle(mdp, d, beta);
  return {std::move(d), b.eta, b.zeta, b.xi};
}

}  // namespace

GlobalOptimum enumerate_global_optimum(const Mdp& mdp, double beta, std::size_t cap) {
  return collect_optimum(enumerate_policies(mdp, beta, cap), true);
}

GlobalOptimum parametric_global_optimum(const Mdp& mdp, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (beta == 0.0) {
    auto sol = solve_pseudo_mdp(mdp, 0.0, 0.0);
    return collect_optimum({score(mdp, std::move(sol.policy), beta)}, false);
  }

  // Line of policy d in lambda: xi_d - beta eta_d^2 + 2 beta eta_d lambda.
  const auto line = [beta](const PolicyRecord& r, double lambda) {
    return r.xi - beta * r.eta * r.eta + 2.0 * beta * r.eta * lambda;
  };
  std::vector<PolicyRecord> found;
  std::set<std::string> seen;
  const auto solve_at = [&](double lambda, const Policy& warm) {
    auto sol = solve_pseudo_mdp(mdp, lambda, beta, warm);
    auto rec = score(mdp, sol.policy, beta);
    if (seen.insert(rec.policy.encode()).second) found.push_back(rec);
    return rec;
  };

  const double lo = mdp.min_reward();
  const double hi = mdp.max_reward();
  const PolicyRecord left = solve_at(lo, {});
  const PolicyRecord right = solve_at(hi, left.policy);

  struct Segment {
    PolicyRecord a, b;
    double lo, hi;
  };
  std::vector<Segment> stack{{left, right, lo, hi}};
  constexpr std::size_t kMaxPieces = 100000;
  std::size_t solves = 0;
  while (!stack.empty() && solves < kMaxPieces) {
    Segment s = std::move(stack.back());
    stack.pop_back();
    const double slope_gap = s.a.eta - s.b.eta;
    if (std::abs(slope_gap) <= 1e-13) continue;
    double mid = (s.b.xi - beta * s.b.eta * s.b.eta - s.a.xi + beta * s.a.eta * s.a.eta) /
                 (2.0 * beta * slope_gap);
    if (!(mid > s.lo && mid < s.hi)) mid = std::clamp(mid, s.lo, s.hi);
    const PolicyRecord c = solve_at(mid, s.a.policy);
    ++solves;
    const double above = line(c, mid) - std::max(line(s.a, mid), line(s.b, mid));
    if (above > 1e-11 * std::max(1.0, std::abs(line(c, mid)))) {
      stack.push_back({s.a, c, s.lo, mid});
      stack.push_back({c, s.b, mid, s.hi});
    }
  }
  return collect_optimum(std::move(found), false);
}

GlobalOptimum global_optimum(const Mdp& mdp, double beta, std::size_t cap) {
  if (policy_count(mdp, cap)) return enumerate_global_optimum(mdp, beta, cap);
  return parametric_global_optimum(mdp, beta);
}

std::size_t default_horizon(const Mdp& mdp) {
  const double alpha = mdp.discount();
  const double r = mdp.max_abs_reward();
  const double scale = std::max(r, r * r);
  if (scale == 0.0) return 1;
  const double t = std::log(1e-8 * (1.0 - alpha) / scale) / std::log(alpha);
  return t < 1.0 ? 1 : static_cast<std::size_t>(std::ceil(t));
}

namespace {

// 53-bit uniform in [0, 1); defined bit-exactly, unlike std::uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Cumulative {
  std::vector<double> cum;
  std::vector<std::size_t> target;

  std::size_t sample(double u) const {
    for (std::size_t i = 0; i + 1 < cum.size(); ++i) {
      if (u < cum[i]) return target[i];
    }
    return target.back();
  }
};

}  // namespace

MonteCarloEstimate monte_carlo_estimate(const Mdp& mdp, const Policy& policy, double beta,
                                        const MonteCarloOptions& options) {
  check_admissible(mdp, policy);
  if (options.trajectories < 2) throw std::invalid_argument("need at least two trajectories");
  const std::size_t horizon = options.horizon ? options.horizon : default_horizon(mdp);
  const std::size_t n = mdp.num_states();
  const double alpha = mdp.discount();

  std::vector<Cumulative> rows(n);
  std::vector<double> reward(n);
  for (std::size_t x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const auto& s : mdp.successors(x, policy[x])) {
      acc += s.prob;
      rows[x].cum.push_back(acc);
      rows[x].target.push_back(s.state);
    }
    reward[x] = mdp.reward(x, policy[x]);
  }
  Cumulative start;
  {
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double m = mdp.initial_distribution()[static_cast<Eigen::Index>(x)];
      if (m <= 0.0) continue;
      acc += m;
      start.cum.push_back(acc);
      start.target.push_back(x);
    }
  }

  const std::size_t count = options.trajectories;
  std::vector<double> mean_sum(count), square_sum(count);
  const auto simulate = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
      std::mt19937_64 rng(seq);
      std::size_t x = start.sample(unit_uniform(rng));
      double weight = 1.0 - alpha;
      double g = 0.0, s = 0.0;
      for (std::size_t t = 0; t < horizon; ++t) {
        const double r = reward[x];
        g += weight * r;
        s += weight * r * r;
        weight *= alpha;
        x = rows[x].sample(unit_uniform(rng));
      }
      mean_sum[i] = g;
      square_sum[i] = s;
    }
  };

  parallel_chunks(count, thread_count(options.threads), simulate);

  // Fixed-order reductions keep the result independent of the thread count.
  const double nd = static_cast<double>(count);
  const double mass = 1.0 - std::pow(alpha, static_cast<double>(horizon));
  double eta = 0.0;
  for (double g : mean_sum) eta += g;
  eta /= nd;

  const auto zeta_of = [&](std::size_t i) {
    return square_sum[i] - 2.0 * eta * mean_sum[i] + eta * eta * mass;
  };
  double zeta = 0.0;
  for (std::size_t i = 0; i < count; ++i) zeta += zeta_of(i);
  zeta /= nd;

  double var_eta = 0.0, var_zeta = 0.0, var_xi = 0.0;
  const double xi = eta - beta * zeta;
  for (std::size_t i = 0; i < count; ++i) {
    const double z = zeta_of(i);
    var_eta += (mean_sum[i] - eta) * (mean_sum[i] - eta);
    var_zeta += (z - zeta) * (z - zeta);
    const double xi_i = mean_sum[i] - beta * z;
    var_xi += (xi_i - xi) * (xi_i - xi);
  }
  const double denom = (nd - 1.0) * nd;

  MonteCarloEstimate est;
  est.eta = eta;
  est.zeta = zeta;
  est.xi = xi;
  est.eta_se = std::sqrt(var_eta / denom);
  est.zeta_se = std::sqrt(var_zeta / denom);
  est.xi_se = std::sqrt(var_xi / denom);
  est.horizon = horizon;
  est.trajectories = count;
  return est;
}

LocalCertificate certify_local_optimum(const Mdp& mdp, const Policy& policy, double beta,
                                       const CertifyOptions& options) {
  check_admissible(mdp, policy);
  const auto mrp = induce(mdp, policy);
  const auto bundle = mean_variance_bundle(mrp, mdp.initial_distribution(), mdp.discount(), beta);
  const Vector occupancy = discounted_occupancy(mrp.transition, mdp.initial_distribution(), mdp.discount());

  // With lambda = eta the derivative toward d' separates over states:
  // sum_x occupancy(x) [Q(x, d'(x)) - u(x)].
  const std::size_t n = mdp.num_states();
  std::vector<std::vector<double>> gain(n);
  for (std::size_t x = 0; x < n; ++x) {
    gain[x].resize(mdp.num_actions(x));
    const double ux = bundle.u[static_cast<Eigen::Index>(x)];
    const double ox = occupancy[static_cast<Eigen::Index>(x)];
    for (std::size_t a = 0; a < gain[x].size(); ++a) {
      gain[x][a] = a == policy[x] ? 0.0
                                  : ox * (pseudo_q_value(mdp, x, a, bundle.u, bundle.eta, beta) - ux);
    }
  }

  LocalCertificate cert;
  cert.worst_derivative = -std::numeric_limits<double>::infinity();
  const auto consider = [&](const std::vector<std::size_t>& actions, double derivative) {
    ++cert.directions_checked;
    if (derivative > cert.worst_derivative) {
      cert.worst_derivative = derivative;
      cert.worst_direction = Policy(actions);
    }
  };

  if (policy_count(mdp, options.cap)) {
    std::vector<std::size_t> actions(n, 0);
    for (;;) {
      if (actions != policy.actions()) {
        double derivative = 0.0;
        for (std::size_t x = 0; x < n; ++x) derivative += gain[x][actions[x]];
        consider(actions, derivative);
      }
      std::size_t x = 0;
      while (x < n && ++actions[x] == mdp.num_actions(x)) actions[x++] = 0;
      if (x == n) break;
    }
  } else if (options.allow_single_deviation) {
    cert.single_deviation = true;
    std::vector<std::size_t> actions = policy.actions();
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t a = 0; a < mdp.num_actions(x); ++a) {
        if (a == policy[x]) continue;
        actions[x] = a;
        consider(actions, gain[x][a]);
      }
      actions[x] = policy[x];
    }
  } else {
    throw CapacityError("direction space exceeds the enumeration cap of " + std::to_string(options.cap));
  }

  if (cert.directions_checked == 0) {
    cert.worst_derivative = 0.0;
    cert.worst_direction = policy;
  }
  cert.is_local = cert.worst_derivative <= options.tolerance;
  return cert;
}

void write_oracle_csv(std::ostream& out, const std::vector<PolicyRecord>& records) {
  out << "policy,xi,eta,zeta\n";
  for (const auto& r : records) {
    out << r.policy.encode() << ',' << fmt10(r.xi) << ',' << fmt10(r.eta) << ',' << fmt10(r.zeta)
        << '\n';
  }
}

}  // namespace mvmdp
