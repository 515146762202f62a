#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mvmdp/frontier.hpp"
#include "mvmdp/portfolio.hpp"
#include "support/oracles.hpp"

using namespace mvmdp;

namespace {

// Every vertex must be the argmax of eta - beta zeta for some beta >= 0.
bool supporting(const std::vector<MeanVariance>& pts, const std::vector<std::size_t>& idx) {
  std::vector<double> betas{0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double dz = pts[i].zeta - pts[j].zeta;
      if (dz > 0) {
        const double b = (pts[i].eta - pts[j].eta) / dz;
        if (b >= 0) betas.push_back(b);
      }
    }
  }
  std::vector<double> probes;
  std::sort(betas.begin(), betas.end());
  for (std::size_t k = 0; k < betas.size(); ++k) {
    probes.push_back(betas[k]);
    probes.push_back(k + 1 < betas.size() ? 0.5 * (betas[k] + betas[k + 1]) : 2 * betas[k] + 1);
  }
  for (std::size_t v : idx) {
    bool ok = false;
    for (double b : probes) {
      double best = -1e300;
      for (const auto& p : pts) best = std::max(best, p.eta - b * p.zeta);
      if (pts[v].eta - b * pts[v].zeta >= best - 1e-9) ok = true;
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hull degenerate cases") {
  CHECK(convex_efficient_frontier(std::vector<MeanVariance>{{0.3, 0.1}}) == std::vector<std::size_t>{0});
  CHECK(convex_efficient_frontier(std::vector<MeanVariance>{{0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}}) ==
        std::vector<std::size_t>{0, 2});
  CHECK(convex_efficient_frontier(std::vector<MeanVariance>{}).empty());
  // Dominated and duplicate points.
  const std::vector<MeanVariance> pts{{1.0, 1.0}, {0.5, 2.0}, {1.0, 1.0}, {0.2, 0.0}, {0.9, 0.5}};
  const auto v = convex_efficient_frontier(pts);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 3);
  CHECK(v[1] == 4);
  CHECK(v[2] == 0);
}

TEST_CASE("hull on random clouds is monotone and supported") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<MeanVariance> pts(1 + rng() % 30);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const auto v = convex_efficient_frontier(pts);
    REQUIRE_FALSE(v.empty());
    for (std::size_t k = 1; k < v.size(); ++k) {
      CHECK(pts[v[k]].zeta > pts[v[k - 1]].zeta);
      CHECK(pts[v[k]].eta > pts[v[k - 1]].eta);
    }
    CHECK(supporting(pts, v));
    // Pareto: no point has both higher eta and lower zeta than a vertex.
    for (std::size_t k : v) {
      for (const auto& p : pts) CHECK_FALSE((p.eta > pts[k].eta + 1e-12 && p.zeta < pts[k].zeta - 1e-12));
    }
  }
}

TEST_CASE("beta sweep on random models stays inside the oracle cloud") {
  std::mt19937_64 rng(103);
  testsupport::RandomMdpOptions opt;
  opt.max_states = 5;
  for (int rep = 0; rep < 10; ++rep) {
    const Mdp m = testsupport::random_mdp(rng, opt);
    SweepOptions so;
    so.threads = 2;
    const auto pts = beta_sweep(m, default_beta_grid(), so);
    REQUIRE(pts.size() == default_beta_grid().size());
    const auto bf = testsupport::brute_force(m, 0.0);
    std::vector<MeanVariance> cloud;
    for (const auto& v : bf.all) cloud.push_back({v.eta, v.zeta});
    const auto hull = convex_efficient_frontier(cloud);
    for (const auto& p : pts) {
      REQUIRE(p.ok);
      CHECK(std::abs(p.xi - (p.eta - p.beta * p.zeta)) <= 1e-10);
      // No point beats the oracle frontier at its own beta.
      double best = -1e300;
      for (std::size_t k : hull) best = std::max(best, cloud[k].eta - p.beta * cloud[k].zeta);
      CHECK(p.xi <= best + 1e-9);
    }
    so.parallel = false;
    const auto serial = beta_sweep(m, default_beta_grid(), so);
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK(serial[k].policy == pts[k].policy);
  }
}

TEST_CASE("large beta finds the deterministic-reward policy") {
  // Action 0 at the start is a fixed reward; action 1 is a coin flip.
  MdpSpec s;
  s.discount = 0.9;
  s.initial_distribution = {1, 0, 0, 0};
  s.states = {{"start", {{"fixed", 0.1, {{1, 1.0}}}, {"gamble", 0.1, {{2, 0.5}, {3, 0.5}}}}},
              {"flat", {{"a", 0.1, {{1, 1.0}}}}},
              {"up", {{"a", 1.0, {{2, 1.0}}}}},
              {"down", {{"a", -0.5, {{3, 1.0}}}}}};
  const Mdp m(s);
  SweepOptions so;
  so.oracle = true;
  const auto pts = beta_sweep(m, {0.0, 1e6}, so);
  CHECK(pts[1].zeta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pts[0].source == PointSource::kOracle);
  const auto solver = beta_sweep(m, {1e6});
  CHECK(std::abs(solver[0].zeta) <= 1e-12);
}

TEST_CASE("sweep input validation and failure capture") {
  std::mt19937_64 rng(107);
  const Mdp m = testsupport::random_mdp(rng);
  CHECK_THROWS(beta_sweep(m, {}));
  CHECK_THROWS(beta_sweep(m, {-1.0}));
  SweepOptions so;
  so.config.max_outer = 1;
  so.config.lambda_init = -50.0;
  const auto pts = beta_sweep(m, {0.5}, so);
  REQUIRE(pts.size() == 1);
  if (!pts[0].ok) CHECK_FALSE(pts[0].error.empty());
}

TEST_CASE("portfolio oracle frontier has five vertices") {
  const Mdp m = build_portfolio_mdp(reference_params());
  const auto f = oracle_frontier(m);
  REQUIRE(f.size() == 5);
  CHECK(std::abs(f.front().eta - 0.09) <= 1e-9);
  CHECK(std::abs(f.front().zeta) <= 1e-9);
  CHECK(std::abs(f.back().eta - 0.4507) <= 5e-5);
  CHECK(std::abs(f.back().zeta - 1.3468) <= 5e-5);
  for (const auto& p : f) CHECK(p.is_vertex);

  std::ostringstream csv, plot;
  write_frontier_csv(csv, f);
  write_plot_data(plot, f);
  CHECK(csv.str().rfind("beta,eta,zeta,xi,policy,source,is_vertex\n", 0) == 0);
  CHECK(plot.str().rfind("zeta,eta,is_vertex\n", 0) == 0);
}

TEST_CASE("oracle frontier by enumeration equals the beta recursion") {
  std::mt19937_64 rng(109);
  testsupport::RandomMdpOptions opt;
  opt.max_states = 5;
  for (int rep = 0; rep < 15; ++rep) {
    const Mdp m = testsupport::random_mdp(rng, opt);
    const auto a = oracle_frontier(m);
    const auto b = oracle_frontier(m, 0);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(std::abs(a[k].eta - b[k].eta) <= 1e-9);
      CHECK(std::abs(a[k].zeta - b[k].zeta) <= 1e-9);
    }
  }
}
