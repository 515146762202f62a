#include "mvmdp/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mvmdp/format.hpp"
#include "mvmdp/parallel.hpp"

namespace mvmdp {

std::string_view to_string(PointSource source) {
  return source == PointSource::kOracle ? "oracle" : "solver";
}

std::vector<double> default_beta_grid() { return {0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}; }

std::vector<std::size_t> convex_efficient_frontier(const std::vector<MeanVariance>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (points[i].zeta != points[j].zeta) return points[i].zeta < points[j].zeta;
    return points[i].eta > points[j].eta;
  });
  // Keep the highest eta per zeta.
  std::vector<std::size_t> candidates;
  for (std::size_t i : order) {
    if (!candidates.empty() && points[candidates.back()].zeta == points[i].zeta) continue;
    candidates.push_back(i);
  }

  const auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    const double ax = points[a].zeta - points[o].zeta, ay = points[a].eta - points[o].eta;
    const double bx = points[b].zeta - points[o].zeta, by = points[b].eta - points[o].eta;
    return ax * by - ay * bx;
  };
  std::vector<std::size_t> chain;
  for (std::size_t i : candidates) {
    while (chain.size() >= 2 && cross(chain[chain.size() - 2], chain.back(), i) >= -kHullTolerance) {
      chain.pop_back();
    }
    chain.push_back(i);
  }
  // Cut the upper chain at its highest-eta point.
  std::size_t top = 0;
  for (std::size_t k = 1; k < chain.size(); ++k) {
    if (points[chain[k]].eta > points[chain[top]].eta) top = k;
  }
  if (!chain.empty()) chain.resize(top + 1);
  return chain;
}

std::vector<std::size_t> convex_efficient_frontier(const std::vector<FrontierPoint>& points) {
  std::vector<MeanVariance> mv;
  mv.reserve(points.size());
  for (const auto& p : points) mv.push_back({p.eta, p.zeta});
  return convex_efficient_frontier(mv);
}

namespace {

const PolicyRecord& pick(const GlobalOptimum& g, bool high_eta) {
  const PolicyRecord* best = &g.optimal.front();
  for (const auto& r : g.optimal) {
    if (high_eta ? r.eta > best->eta : r.zeta < best->zeta) best = &r;
  }
  return *best;
}

void mark_vertices(std::vector<FrontierPoint>& points) {
  std::vector<std::size_t> live;
  std::vector<MeanVariance> mv;
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].is_vertex = false;
    if (!points[i].ok) continue;
    live.push_back(i);
    mv.push_back({points[i].eta, points[i].zeta});
  }
  for (std::size_t v : convex_efficient_frontier(mv)) {
    for (std::size_t i : live) {
      if (std::abs(points[i].eta - mv[v].eta) <= 1e-12 && std::abs(points[i].zeta - mv[v].zeta) <= 1e-12) {
        points[i].is_vertex = true;
      }
    }
  }
}

}  // namespace

std::vector<FrontierPoint> beta_sweep(const Mdp& mdp, const std::vector<double>& betas,
                                      const SweepOptions& options) {
  if (betas.empty()) throw std::invalid_argument("beta grid is empty");
  for (double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("beta must be finite and >= 0");
  }
  options.config.validate();

  std::vector<FrontierPoint> points(betas.size());
  const auto run = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      FrontierPoint& p = points[i];
      p.beta = betas[i];
      try {
        if (options.oracle) {
          const auto g = global_optimum(mdp, p.beta, options.cap);
          const auto& r = pick(g, true);
          p.policy = r.policy;
          p.eta = r.eta;
          p.zeta = r.zeta;
          p.xi = r.xi;
          p.source = PointSource::kOracle;
        } else {
          const auto res = bilevel_solve(mdp, p.beta, options.config);
          p.policy = res.policy;
          p.eta = res.bundle.eta;
          p.zeta = res.bundle.zeta;
          p.xi = res.bundle.xi;
          if (!res.converged) {
            p.ok = false;
            p.error = "solver did not converge";
          }
        }
      } catch (const std::exception& e) {
        p.ok = false;
        p.error = e.what();
      }
    }
  };
  parallel_chunks(points.size(), options.parallel ? thread_count(options.threads) : 1u, run);
  mark_vertices(points);
  return points;
}

std::vector<FrontierPoint> oracle_frontier(const Mdp& mdp, std::size_t cap) {
  std::vector<PolicyRecord> cloud;
  if (policy_count(mdp, cap)) {
    cloud = enumerate_policies(mdp, 0.0, cap);
  } else {
    constexpr double kLargeBeta = 1e6;
    const auto add = [&](const GlobalOptimum& g) {
      for (const auto& r : g.optimal) cloud.push_back(r);
    };
    const auto low = parametric_global_optimum(mdp, 0.0);
    const auto high = parametric_global_optimum(mdp, kLargeBeta);
    add(low);
    add(high);
    struct Pair {
      PolicyRecord a, b;  // a: larger eta and zeta
    };
    std::vector<Pair> stack{{pick(low, false), pick(high, true)}};
    while (!stack.empty()) {
      Pair s = std::move(stack.back());
      stack.pop_back();
      const double dz = s.a.zeta - s.b.zeta;
      const double de = s.a.eta - s.b.eta;
      if (dz <= 1e-14 || de <= 1e-14) continue;
      const double beta = de / dz;
      const auto g = parametric_global_optimum(mdp, beta);
      add(g);
      const double tied = s.a.eta - beta * s.a.zeta;
      if (g.xi_star > tied + 1e-10 * std::max(1.0, std::abs(tied))) {
        stack.push_back({s.a, pick(g, true)});
        stack.push_back({pick(g, false), s.b});
      }
    }
  }

  std::vector<MeanVariance> mv;
  mv.reserve(cloud.size());
  for (const auto& r : cloud) mv.push_back({r.eta, r.zeta});
  const auto idx = convex_efficient_frontier(mv);

  std::vector<FrontierPoint> out;
  const std::size_t k = idx.size();
  const auto slope = [&](std::size_t i) {  // between vertex i-1 and i
    return (mv[idx[i]].eta - mv[idx[i - 1]].eta) / (mv[idx[i]].zeta - mv[idx[i - 1]].zeta);
  };
  for (std::size_t i = 0; i < k; ++i) {
    double beta = 0.0;
    if (k > 1 && i == 0) {
      beta = 2.0 * slope(1);
    } else if (i + 1 < k) {
      beta = 0.5 * (slope(i) + slope(i + 1));
    }
    const auto& r = cloud[idx[i]];
    FrontierPoint p;
    p.beta = beta;
    p.eta = r.eta;
    p.zeta = r.zeta;
    p.xi = r.eta - beta * r.zeta;
    p.policy = r.policy;
    p.source = PointSource::kOracle;
    p.is_vertex = true;
    out.push_back(std::move(p));
  }
  return out;
}

void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& points) {
  out << "beta,eta,zeta,xi,policy,source,is_vertex\n";
  for (const auto& p : points) {
    if (!p.ok) continue;
    out << fmt10(p.beta) << ',' << fmt10(p.eta) << ',' << fmt10(p.zeta) << ',' << fmt10(p.xi) << ','
        << p.policy.encode() << ',' << to_string(p.source) << ',' << (p.is_vertex ? 1 : 0) << '\n';
  }
}

void write_plot_data(std::ostream& out, const std::vector<FrontierPoint>& points) {
  out << "zeta,eta,is_vertex\n";
  for (const auto& p : points) {
    if (!p.ok) continue;
    out << fmt10(p.zeta) << ',' << fmt10(p.eta) << ',' << (p.is_vertex ? 1 : 0) << '\n';
  }
}

}  // namespace mvmdp
