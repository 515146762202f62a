#include <doctest.h>

#include <random>

#include "mvmdp/check.hpp"
#include "mvmdp/portfolio.hpp"
#include "mvmdp/solvers.hpp"
#include "support/oracles.hpp"

using namespace mvmdp;

TEST_CASE("identities hold for converged and arbitrary policies") {
  std::mt19937_64 rng(127);
  for (int rep = 0; rep < 10; ++rep) {
    const Mdp m = testsupport::random_mdp(rng);
    const double beta = 2.0 * (rng() % 1000) / 1000.0;
    const auto res = bilevel_solve(m, beta);
    const auto good = run_identity_suite(m, res.policy, beta, {4000, 0, 3, 1});
    CHECK(suite_passed(good));
    std::vector<std::size_t> a;
    for (std::size_t x = 0; x < m.num_states(); ++x) a.push_back(rng() % m.num_actions(x));
    const auto any = run_identity_suite(m, Policy(a), beta, {4000, 0, 3, 1});
    CHECK(suite_passed(any));
  }
}

TEST_CASE("self difference is exactly zero and improvable policies are flagged") {
  const Mdp m = build_portfolio_mdp(reference_params());
  MdpSpec s;
  s.discount = 0.5;
  s.initial_distribution = {1};
  s.states = {{"x", {{"low", 0.0, {{0, 1.0}}}, {"high", 1.0, {{0, 1.0}}}}}};
  const Mdp tiny(s);
  const auto r = run_identity_suite(tiny, Policy({0}), 0.0, {100, 0, 1, 1});
  for (const auto& x : r) {
    if (x.name == "difference-self") CHECK(x.residual == 0.0);
    if (x.name == "local-optimality-residual") {
      CHECK(x.informational);
      CHECK(x.residual > 0.0);
    }
  }
  CHECK(suite_passed(r));
  const auto p = run_identity_suite(m, laddered_policy(m), 1.0, {3000, 0, 1, 1});
  CHECK(suite_passed(p));
}

TEST_CASE("blend helper reproduces the endpoints") {
  std::mt19937_64 rng(131);
  const Mdp m = testsupport::random_mdp(rng);
  const Policy d = Policy::constant(m.num_states());
  std::vector<std::size_t> a;
  for (std::size_t x = 0; x < m.num_states(); ++x) a.push_back(m.num_actions(x) - 1);
  const Policy d2(a);
  CHECK(std::abs(xi_along_blend(m, d, d2, 0.0, 1.0) - testsupport::dense_values(m, d, 1.0).xi) <= 1e-10);
  CHECK(std::abs(xi_along_blend(m, d, d2, 1.0, 1.0) - testsupport::dense_values(m, d2, 1.0).xi) <= 1e-10);
}
