#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/oracle.hpp"
#include "mvmdp/portfolio.hpp"
#include "mvmdp/solvers.hpp"
#include "support/oracles.hpp"

using namespace mvmdp;

TEST_CASE("single-action model has one optimal policy") {
  MdpSpec s;
  s.discount = 0.5;
  s.initial_distribution = {1};
  s.states = {{"x", {{"a", 0.4, {{0, 1.0}}}}}};
  const Mdp m(s);
  const auto g = enumerate_global_optimum(m, 1.0);
  REQUIRE(g.optimal.size() == 1);
  CHECK(g.xi_star == doctest::Approx(0.4));
  CHECK(g.exhaustive);
}

TEST_CASE("two-state, two-action table") {
  // Hand table: x0 chooses reward 1 (stay) or 0 (move); x1 chooses 0.5 or a coin flip back.
  MdpSpec s;
  s.discount = 0.5;
  s.initial_distribution = {1, 0};
  s.states = {{"x0", {{"stay", 1.0, {{0, 1.0}}}, {"move", 0.0, {{1, 1.0}}}}},
              {"x1", {{"a", 0.5, {{1, 1.0}}}, {"b", 2.0, {{0, 0.5}, {1, 0.5}}}}}};
  const Mdp m(s);
  const auto all = enumerate_policies(m, 1.0);
  CHECK(all.size() == 4);
  const auto bf = testsupport::brute_force(m, 1.0);
  const auto g = enumerate_global_optimum(m, 1.0);
  CHECK(std::abs(g.xi_star - bf.xi_star) <= 1e-12);
  CHECK(g.optimal.size() == bf.argmax.size());
  // Policies that stay at x0 never see x1, so both of them attain eta = 1, zeta = 0.
  CHECK(g.xi_star == doctest::Approx(1.0));
}

TEST_CASE("enumeration refuses above the cap") {
  const Mdp m = build_portfolio_mdp(reference_params());
  CHECK_FALSE(policy_count(m).has_value());
  CHECK_THROWS_AS(enumerate_global_optimum(m, 1.0), CapacityError);
  CHECK_THROWS_AS(enumerate_policies(m, 1.0, 10), CapacityError);
}

TEST_CASE("parametric optimum matches enumeration") {
  std::mt19937_64 rng(61);
  testsupport::RandomMdpOptions opt;
  opt.max_states = 6;
  for (int rep = 0; rep < 40; ++rep) {
    const Mdp m = testsupport::random_mdp(rng, opt);
    const double beta = 5.0 * (rng() % 1000) / 1000.0;
    const auto e = enumerate_global_optimum(m, beta);
    const auto p = parametric_global_optimum(m, beta);
    CHECK(std::abs(e.xi_star - p.xi_star) <= 1e-10);
  }
}

TEST_CASE("risk-neutral optimum agrees with value iteration") {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 20; ++rep) {
    const Mdp m = testsupport::random_mdp(rng);
    const auto g = enumerate_global_optimum(m, 0.0);
    CHECK(std::abs(g.xi_star - risk_neutral_value_iteration(m).eta) <= 1e-9);
  }
}

TEST_CASE("portfolio global optimum via the parametric walk") {
  const Mdp m = build_portfolio_mdp(reference_params());
  const auto g = global_optimum(m, 1.0);
  CHECK_FALSE(g.exhaustive);
  CHECK(std::abs(g.xi_star - 0.1313) <= 5e-5);
  bool ladder = false;
  for (const auto& r : g.optimal) ladder = ladder || is_laddered(r.policy, m);
  CHECK(ladder);
  CHECK(std::abs(g.eta_star_nearest(0.0) - 0.4384) <= 5e-5);
}

TEST_CASE("monte carlo") {
  SUBCASE("constant reward") {
    std::mt19937_64 r(3);
    MdpSpec s = testsupport::random_mdp(r).spec();
    for (auto& st : s.states) {
      for (auto& a : st.actions) a.reward = 0.5;
    }
    const Mdp m(s);
    const auto e = monte_carlo_estimate(m, Policy::constant(m.num_states()), 1.0, {200, 0, 9, 1});
    const double mass = 1.0 - std::pow(m.discount(), static_cast<double>(e.horizon));
    CHECK(std::abs(e.eta - 0.5 * mass) <= 1e-12);
    CHECK(e.eta_se <= 1e-15);
    CHECK(std::abs(e.zeta) <= 1e-12);
  }
  SUBCASE("two-cycle mean within 3 standard errors") {
    MdpSpec s;
    s.discount = 0.5;
    s.initial_distribution = {1, 0};
    s.states = {{"s1", {{"a", 0.0, {{1, 1.0}}}}}, {"s2", {{"a", 1.0, {{0, 1.0}}}}}};
    const Mdp m(s);
    const auto e = monte_carlo_estimate(m, Policy::constant(2), 1.0, {1000, 0, 1, 1});
    // Deterministic chain: every path is identical.
    CHECK(std::abs(e.eta - 1.0 / 3) <= 1e-8);
  }
  SUBCASE("random chain, bias budget and thread independence") {
    std::mt19937_64 rng(71);
    testsupport::RandomMdpOptions opt;
    opt.min_states = opt.max_states = 3;
    const Mdp m = testsupport::random_mdp(rng, opt);
    const Policy d = Policy::constant(3);
    const auto ref = testsupport::dense_values(m, d, 1.0);
    const auto a = monte_carlo_estimate(m, d, 1.0, {20000, 0, 5, 1});
    const auto b = monte_carlo_estimate(m, d, 1.0, {20000, 0, 5, 4});
    CHECK(a.eta == b.eta);
    CHECK(a.zeta == b.zeta);
    CHECK(std::abs(a.eta - ref.eta) <= 3 * a.eta_se);
    CHECK(std::abs(a.xi - ref.xi) <= 3 * a.xi_se);
    CHECK(std::pow(m.discount(), static_cast<double>(a.horizon)) * std::max(m.max_abs_reward(), m.max_abs_reward() * m.max_abs_reward()) <=
          1e-8 * (1 - m.discount()) * 1.0000001);
  }
  SUBCASE("tripling n shrinks errors by about sqrt(3)") {
    std::mt19937_64 rng(73);
    const Mdp m = testsupport::random_mdp(rng);
    const Policy d = Policy::constant(m.num_states());
    double ratio = 0;
    const int seeds = 5;
    for (int sd = 0; sd < seeds; ++sd) {
      const auto a = monte_carlo_estimate(m, d, 1.0, {3000, 0, static_cast<std::uint64_t>(100 + sd), 1});
      const auto b = monte_carlo_estimate(m, d, 1.0, {9000, 0, static_cast<std::uint64_t>(200 + sd), 1});
      ratio += a.eta_se / b.eta_se;
    }
    ratio /= seeds;
    CHECK(std::abs(ratio - std::sqrt(3.0)) <= 0.2 * std::sqrt(3.0));
  }
  SUBCASE("rejects fewer than two trajectories") {
    std::mt19937_64 rng(1);
    const Mdp m = testsupport::random_mdp(rng);
    CHECK_THROWS(monte_carlo_estimate(m, Policy::constant(m.num_states()), 1.0, {1, 0, 1, 1}));
  }
}

TEST_CASE("local certificates") {
  const Mdp port = build_portfolio_mdp(reference_params());
  SUBCASE("portfolio all-zero policy") {
    const auto c = certify_local_optimum(port, Policy::constant(port.num_states()), 1.0);
    CHECK(c.single_deviation);
    CHECK(c.is_local);
  }
  SUBCASE("global optima are local") {
    std::mt19937_64 rng(79);
    for (int rep = 0; rep < 20; ++rep) {
      const Mdp m = testsupport::random_mdp(rng);
      const double beta = 3.0 * (rng() % 1000) / 1000.0;
      const auto g = enumerate_global_optimum(m, beta);
      for (const auto& r : g.optimal) CHECK(certify_local_optimum(m, r.policy, beta).is_local);
    }
  }
  SUBCASE("an improvable policy yields a positive direction matching the derivative formula") {
    std::mt19937_64 rng(83);
    int checked = 0;
    for (int rep = 0; rep < 30; ++rep) {
      const Mdp m = testsupport::random_mdp(rng);
      const Policy d = Policy::constant(m.num_states());
      const auto b = mean_variance_bundle(m, d, 1.0);
      if (greedy_policy(m, b.u, b.eta, 1.0) == d) continue;
      const auto c = certify_local_optimum(m, d, 1.0);
      CHECK_FALSE(c.is_local);
      CHECK(c.worst_derivative > 0);
      CHECK(std::abs(c.worst_derivative - performance_derivative(m, d, c.worst_direction, b.eta, 1.0)) <= 1e-10);
      ++checked;
    }
    CHECK(checked > 0);
  }
  SUBCASE("single-deviation mode agrees with full enumeration on the sign") {
    std::mt19937_64 rng(89);
    for (int rep = 0; rep < 20; ++rep) {
      const Mdp m = testsupport::random_mdp(rng);
      std::vector<std::size_t> a;
      for (std::size_t x = 0; x < m.num_states(); ++x) a.push_back(rng() % m.num_actions(x));
      const Policy d(a);
      CertifyOptions single;
      single.cap = 0;
      CHECK(certify_local_optimum(m, d, 1.0).is_local == certify_local_optimum(m, d, 1.0, single).is_local);
    }
    CertifyOptions strict;
    strict.cap = 0;
    strict.allow_single_deviation = false;
    CHECK_THROWS_AS(certify_local_optimum(port, Policy::constant(port.num_states()), 1.0, strict), CapacityError);
  }
}

TEST_CASE("oracle csv") {
  std::mt19937_64 rng(97);
  testsupport::RandomMdpOptions opt;
  opt.max_states = 3;
  const Mdp m = testsupport::random_mdp(rng, opt);
  std::ostringstream out;
  const auto recs = enumerate_policies(m, 1.0);
  write_oracle_csv(out, recs);
  const auto text = out.str();
  CHECK(text.rfind("policy,xi,eta,zeta\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == recs.size() + 1);
}
