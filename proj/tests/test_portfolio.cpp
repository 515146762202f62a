#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/portfolio.hpp"

using namespace mvmdp;

namespace {

std::size_t binom(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("reference instance size and layout") {
  const auto inst = build_portfolio(reference_params());
  // 20 holdings times 2 rates, plus a defaulted copy of every state with x1 > 0.
  std::size_t with_x1 = 0;
  for (const auto& s : inst.states) with_x1 += (s.holdings[1] > 0 && !s.default_flag) ? 1 : 0;
  CHECK(binom(6, 3) * 2 + with_x1 == inst.states.size());
  CHECK(inst.states.size() == 60);
  CHECK(inst.mdp.state_label(0) == "x=3,0,0,0;rate=low;default=0");
  CHECK(inst.mdp.reward(0, 0) == doctest::Approx(0.09));
  for (std::size_t x = 0; x < inst.states.size(); ++x) {
    const auto& s = inst.states[x];
    CHECK(std::accumulate(s.holdings.begin(), s.holdings.end(), 0) == 3);
    CHECK((!s.default_flag || s.holdings[1] > 0));
    CHECK(inst.mdp.num_actions(x) == static_cast<std::size_t>(s.holdings[0] + s.holdings[1] + 1));
    CHECK(parse_portfolio_label(inst.mdp.state_label(x)) == s);
  }
}

TEST_CASE("all-liquid state self-loops under action 0 while the rate moves") {
  const auto inst = build_portfolio(reference_params());
  const auto succ = inst.mdp.successors(0, 0);
  REQUIRE(succ.size() == 2);
  for (const auto& s : succ) CHECK(inst.states[s.state].holdings == std::vector<int>{3, 0, 0, 0});
}

TEST_CASE("dynamics follow the maturity ladder") {
  const auto p = reference_params();
  const auto inst = build_portfolio(p);
  for (std::size_t x = 0; x < inst.states.size(); ++x) {
    const auto& s = inst.states[x];
    for (std::size_t a = 0; a < inst.mdp.num_actions(x); ++a) {
      double total = 0;
      for (const auto& n : inst.mdp.successors(x, a)) {
        total += n.prob;
        const auto& t = inst.states[n.state];
        CHECK(t.holdings[0] == s.holdings[0] + s.holdings[1] - static_cast<int>(a));
        CHECK(t.holdings[1] == s.holdings[2]);
        CHECK(t.holdings[2] == s.holdings[3]);
        CHECK(t.holdings[3] == static_cast<int>(a));
        double expect = t.rate == s.rate ? 1 - p.p_switch : p.p_switch;
        if (t.holdings[1] > 0) expect *= t.default_flag ? p.p_default : 1 - p.p_default;
        CHECK(n.prob == doctest::Approx(expect).epsilon(1e-14));
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("rewards per default mode") {
  for (auto mode : {DefaultMode::kForfeitInterest, DefaultMode::kChargePrincipal, DefaultMode::kForfeitPrincipal}) {
    auto p = reference_params();
    p.default_mode = mode;
    const auto inst = build_portfolio(p);
    for (std::size_t x = 0; x < inst.states.size(); ++x) {
      const auto& s = inst.states[x];
      const double rate = s.rate == Rate::kHigh ? 1.0 : 0.4;
      double expect = 0.03 * s.holdings[0];
      if (!s.default_flag) {
        expect += rate * s.holdings[1];
      } else if (mode != DefaultMode::kForfeitInterest) {
        expect -= s.holdings[1];
      }
      CHECK(inst.mdp.reward(x, 0) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("forfeit-principal loses defaulted units") {
  auto p = reference_params();
  p.default_mode = DefaultMode::kForfeitPrincipal;
  const auto inst = build_portfolio(p);
  CHECK(inst.states.size() > 60);
  for (std::size_t x = 0; x < inst.states.size(); ++x) {
    const auto& s = inst.states[x];
    if (s.default_flag) CHECK(inst.mdp.num_actions(x) == static_cast<std::size_t>(s.holdings[0] + 1));
  }
}

TEST_CASE("empty portfolio") {
  auto p = reference_params();
  p.units = 0;
  const auto inst = build_portfolio(p);
  REQUIRE(inst.mdp.num_states() == 1);
  CHECK(inst.mdp.reward(0, 0) == 0.0);
  CHECK(inst.mdp.initial_distribution()[0] == 1.0);
}

TEST_CASE("initial distribution") {
  auto p = reference_params();
  p.initial_high_prob = 0.5;
  const auto inst = build_portfolio(p);
  const Vector& mu = inst.mdp.initial_distribution();
  CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mu[0] == 0.5);
  CHECK(mu[1] == 0.5);
  CHECK(inst.states[1].rate == Rate::kHigh);
  CHECK(build_portfolio_mdp(reference_params()).initial_distribution()[0] == 1.0);
}

TEST_CASE("reward anchor and deterministic limit") {
  const Mdp m = build_portfolio_mdp(reference_params());
  const auto b = mean_variance_bundle(m, Policy::constant(m.num_states()), 1.0);
  CHECK(b.eta == doctest::Approx(0.09).epsilon(1e-13));
  CHECK(std::abs(b.zeta) <= 1e-13);
  auto p = reference_params();
  p.p_default = 0;
  p.p_switch = 0;
  const Mdp det = build_portfolio_mdp(p);
  CHECK(std::abs(mean_variance_bundle(det, Policy::constant(det.num_states()), 1.0).zeta) <= 1e-13);
}

TEST_CASE("laddered detection") {
  const Mdp m = build_portfolio_mdp(reference_params());
  CHECK(is_laddered(laddered_policy(m), m));
  CHECK(is_laddered(laddered_policy(m), m, LadderScope::kAllStates));
  CHECK_FALSE(is_laddered(Policy::constant(m.num_states()), m));
  MdpSpec s;
  s.discount = 0.5;
  s.initial_distribution = {1};
  s.states = {{"plain", {{"a", 0.0, {{0, 1.0}}}}}};
  CHECK_THROWS_AS(is_laddered(Policy::constant(1), Mdp(s)), InputError);
}

TEST_CASE("calibration selects the mode matching the risk-neutral anchor") {
  const auto cal = calibrate_portfolio();
  CHECK(cal.candidates.size() == 9);
  CHECK(cal.mode == DefaultMode::kChargePrincipal);
  CHECK(cal.initial_high_prob == 0.0);
  const auto p = reference_params();
  CHECK(p.default_mode == cal.mode);
  CHECK(p.initial_high_prob == cal.initial_high_prob);
  for (const auto& c : cal.candidates) {
    if (c.mode == cal.mode && c.initial_high_prob == cal.initial_high_prob) {
      CHECK(c.distance <= 1e-4);
    }
  }
}

TEST_CASE("params json") {
  const auto p = reference_params();
  const auto back = portfolio_params_from_json(portfolio_params_to_json(p));
  CHECK(back.alpha == p.alpha);
  CHECK(back.default_mode == p.default_mode);
  CHECK(back.units == p.units);
  CHECK_THROWS_AS(portfolio_params_from_json(R"({"p_default": 1.5})"), InputError);
  CHECK_THROWS_AS(portfolio_params_from_json(R"({"units": 2.5})"), InputError);
  CHECK_THROWS_AS(portfolio_params_from_json(R"({"colour": 1})"), InputError);
  CHECK_THROWS_AS(portfolio_params_from_json("{"), InputError);
  CHECK_THROWS_AS(portfolio_params_from_json(R"({"r_nonliquid_low": 2})"), InputError);
  const auto cal = calibrate_portfolio();
  const auto a = portfolio_params_from_json(R"({"default_mode": "auto", "initial_high_prob": "auto"})", &cal);
  CHECK(a.default_mode == cal.mode);
  CHECK(portfolio_params_from_json(R"({"default_mode": "forfeit-interest"})").default_mode ==
        DefaultMode::kForfeitInterest);
}

TEST_CASE("parameter validation") {
  auto p = reference_params();
  p.maturity = 0;
  CHECK_THROWS_AS(build_portfolio(p), InputError);
  p = reference_params();
  p.alpha = 1.0;
  CHECK_THROWS_AS(build_portfolio(p), InputError);
  p = reference_params();
  p.units = 400;
  p.maturity = 6;
  CHECK_THROWS_AS(build_portfolio(p), CapacityError);
}
