#include <doctest.h>

#include <random>

#include "mvmdp/mdp.hpp"
#include "support/oracles.hpp"

using namespace mvmdp;

namespace {

MdpSpec two_state() {
  MdpSpec s;
  s.discount = 0.9;
  s.initial_distribution = {1.0, 0.0};
  s.states = {{"a", {{"stay", 1.0, {{0, 1.0}}}, {"go", 0.0, {{1, 1.0}}}}},
              {"b", {{"stay", 2.0, {{1, 0.5}, {0, 0.5}}}, {"go", -1.0, {{0, 1.0}}}}}};
  return s;
}

MarkovRewardProcess chain(std::vector<std::vector<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  MarkovRewardProcess m;
  m.transition.resize(n, n);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (rows[i][j] != 0.0) t.emplace_back(i, j, rows[i][j]);
    }
  }
  m.transition.setFromTriplets(t.begin(), t.end());
  m.reward = Vector::Zero(n);
  m.reward_sq = Vector::Zero(n);
  return m;
}

}  // namespace

TEST_CASE("well-formed model validates cleanly") {
  CHECK(validate_mdp(two_state()).empty());
  CHECK_NOTHROW(Mdp{two_state()});
}

TEST_CASE("row summing to 0.9 gives one violation naming (x, a)") {
  auto s = two_state();
  s.states[1].actions[0].successors = {{1, 0.4}, {0, 0.5}};
  const auto v = validate_mdp(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::kTransitionSum);
  CHECK(v[0].state == 1);
  CHECK(v[0].action == 0);
  CHECK_THROWS_AS(Mdp{s}, ModelError);
}

TEST_CASE("initial distribution (0.6, 0.6) is rejected") {
  auto s = two_state();
  s.initial_distribution = {0.6, 0.6};
  const auto v = validate_mdp(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::kInitialDistributionSum);
}

TEST_CASE("validation reports every problem at once") {
  auto s = two_state();
  s.discount = 1.0;
  s.states[0].actions[0].reward = std::nan("");
  s.states[1].actions.clear();
  s.initial_distribution = {-0.5, 1.5};
  const auto v = validate_mdp(s);
  CHECK(v.size() >= 4);
}

TEST_CASE("probabilities within tolerance are renormalized") {
  auto s = two_state();
  s.states[1].actions[0].successors = {{1, 0.5 + 4e-13}, {0, 0.5}};
  const Mdp m(s);
  double total = 0;
  for (const auto& x : m.successors(1, 0)) total += x.prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("induce matches direct table lookup") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    testsupport::RandomMdpOptions opt;
    opt.min_states = opt.max_states = 3;
    const Mdp m = testsupport::random_mdp(rng, opt);
    std::vector<std::size_t> acts;
    for (std::size_t x = 0; x < 3; ++x) acts.push_back(rng() % m.num_actions(x));
    const Policy d(acts);
    const auto mrp = induce(m, d);
    const Eigen::MatrixXd P = Eigen::MatrixXd(mrp.transition);
    for (std::size_t x = 0; x < 3; ++x) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(3);
      for (const auto& s : m.successors(x, acts[x])) row[static_cast<Eigen::Index>(s.state)] = s.prob;
      CHECK((P.row(static_cast<Eigen::Index>(x)).transpose() - row).norm() == 0.0);
      CHECK(mrp.reward[static_cast<Eigen::Index>(x)] == m.reward(x, acts[x]));
      CHECK(std::abs(P.row(static_cast<Eigen::Index>(x)).sum() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("inadmissible action names the state") {
  const Mdp m(two_state());
  try {
    induce(m, Policy({0, 2}));
    FAIL("expected throw");
  } catch (const InadmissibleActionError& e) {
    CHECK(e.state() == 1);
  }
  CHECK_THROWS_AS(induce(m, Policy({0})), InputError);
}

TEST_CASE("mixed policy endpoints and midpoint") {
  const Mdp m(two_state());
  const Policy d({0, 0}), d2({1, 1});
  const auto a = induce(m, d), b = induce(m, d2);
  const auto at0 = induce_mixed(m, MixedPolicy(d, d2, 0.0));
  const auto at1 = induce_mixed(m, MixedPolicy(d, d2, 1.0));
  CHECK(Eigen::MatrixXd(at0.transition) == Eigen::MatrixXd(a.transition));
  CHECK(at0.reward == a.reward);
  CHECK(Eigen::MatrixXd(at1.transition) == Eigen::MatrixXd(b.transition));
  CHECK(at1.reward == b.reward);
  const auto mid = induce_mixed(m, MixedPolicy(d, d2, 0.5));
  const Eigen::MatrixXd avg = 0.5 * (Eigen::MatrixXd(a.transition) + Eigen::MatrixXd(b.transition));
  CHECK((Eigen::MatrixXd(mid.transition) - avg).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((mid.reward - 0.5 * (a.reward + b.reward)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((mid.reward_sq - 0.5 * (a.reward_sq + b.reward_sq)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS(MixedPolicy(d, d2, 1.5));
}

TEST_CASE("mixed chain is affine in delta and stays stochastic") {
  std::mt19937_64 rng(11);
  const Mdp m = testsupport::random_mdp(rng);
  const Policy d = Policy::constant(m.num_states());
  std::vector<std::size_t> acts;
  for (std::size_t x = 0; x < m.num_states(); ++x) acts.push_back(m.num_actions(x) - 1);
  const Policy d2(acts);
  const Eigen::MatrixXd P0 = Eigen::MatrixXd(induce(m, d).transition);
  const Eigen::MatrixXd P1 = Eigen::MatrixXd(induce(m, d2).transition);
  for (double delta : {0.1, 0.37, 0.9}) {
    const Eigen::MatrixXd P = Eigen::MatrixXd(induce_mixed(m, MixedPolicy(d, d2, delta)).transition);
    CHECK((P - ((1 - delta) * P0 + delta * P1)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("stationary distribution") {
  SUBCASE("two-cycle") {
    const auto pi = stationary_distribution(chain({{0, 1}, {1, 0}}));
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("identity is not ergodic") {
    CHECK_THROWS_AS(stationary_distribution(chain({{1, 0}, {0, 1}})), ErgodicityError);
  }
  SUBCASE("random irreducible chains against a linear solve") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<std::vector<double>> rows(4, std::vector<double>(4));
      for (auto& r : rows) {
        double t = 0;
        for (auto& x : r) t += (x = u(rng));
        for (auto& x : r) x /= t;
      }
      const auto mrp = chain(rows);
      const auto pi = stationary_distribution(mrp);
      const Eigen::VectorXd ref = testsupport::dense_stationary(Eigen::MatrixXd(mrp.transition));
      CHECK((pi - ref).cwiseAbs().maxCoeff() <= 1e-9);
      const Eigen::VectorXd resid = Eigen::MatrixXd(mrp.transition).transpose() * pi - pi;
      CHECK(resid.cwiseAbs().maxCoeff() <= kStationaryResidual);
      CHECK(std::abs(pi.sum() - 1.0) <= 1e-12);
    }
  }
  SUBCASE("transient states get zero mass") {
    const auto pi = stationary_distribution(chain({{0.5, 0.5, 0}, {0, 0, 1}, {0, 1, 0}}));
    CHECK(std::abs(pi[0]) <= 1e-10);
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("policy encoding round trip") {
  const Policy d({0, 2, 1, 10});
  CHECK(d.encode() == "0-2-1-10");
  CHECK(Policy::decode("0-2-1-10") == d);
  CHECK(Policy::decode("0,2,1,10") == d);
  CHECK_THROWS_AS(Policy::decode("0-x"), InputError);
  CHECK_THROWS_AS(Policy::decode(""), InputError);
}
