#include "mvmdp/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mvmdp/evaluation.hpp"
#include "mvmdp/solvers.hpp"

namespace mvmdp {

std::string_view to_string(DefaultMode mode) {
  switch (mode) {
    case DefaultMode::kForfeitInterest: return "forfeit-interest";
    case DefaultMode::kChargePrincipal: return "charge-principal";
    case DefaultMode::kForfeitPrincipal: return "forfeit-principal";
  }
  return "unknown";
}

DefaultMode parse_default_mode(std::string_view name) {
  for (auto m : {DefaultMode::kForfeitInterest, DefaultMode::kChargePrincipal, DefaultMode::kForfeitPrincipal}) {
    if (name == to_string(m)) return m;
  }
  throw InputError("unknown default_mode '" + std::string(name) + "'");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("invalid portfolio parameter: " + what);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void PortfolioParams::validate() const {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
  require(maturity >= 1, "maturity must be >= 1");
  require(units >= 0, "units must be >= 0");
  require(std::isfinite(r_liquid), "r_liquid must be finite");
  require(std::isfinite(r_nonliquid_low), "r_nonliquid_low must be finite");
  require(std::isfinite(r_nonliquid_high), "r_nonliquid_high must be finite");
  require(r_nonliquid_low <= r_nonliquid_high, "r_nonliquid_low must not exceed r_nonliquid_high");
  require(is_probability(p_switch), "p_switch must lie in [0, 1]");
  require(is_probability(p_default), "p_default must lie in [0, 1]");
  require(is_probability(initial_high_prob), "initial_high_prob must lie in [0, 1]");
}

PortfolioParams reference_params() { return PortfolioParams{}; }

std::string PortfolioState::label() const {
  std::string s = "x=";
  for (std::size_t k = 0; k < holdings.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(holdings[k]);
  }
  s += rate == Rate::kHigh ? ";rate=high" : ";rate=low";
  s += default_flag ? ";default=1" : ";default=0";
  return s;
}

PortfolioState parse_portfolio_label(std::string_view label) {
  const auto fail = [&] { return InputError("not a portfolio state label: '" + std::string(label) + "'"); };
  const auto p1 = label.find(";rate=");
  const auto p2 = label.find(";default=");
  if (label.substr(0, 2) != "x=" || p1 == std::string_view::npos || p2 == std::string_view::npos || p2 < p1) {
    throw fail();
  }
  PortfolioState st;
  std::string hold(label.substr(2, p1 - 2));
  std::stringstream ss(hold);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) throw fail();
    st.holdings.push_back(std::stoi(part));
  }
  const auto rate = label.substr(p1 + 6, p2 - p1 - 6);
  const auto flag = label.substr(p2 + 9);
  if (st.holdings.size() < 2) throw fail();
  if (rate == "low") {
    st.rate = Rate::kLow;
  } else if (rate == "high") {
    st.rate = Rate::kHigh;
  } else {
    throw fail();
  }
  if (flag != "0" && flag != "1") throw fail();
  st.default_flag = flag == "1";
  return st;
}

namespace {

// Compositions of n into k parts, first part descending.
void compositions(int n, std::size_t k, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  if (prefix.size() + 1 == k) {
    prefix.push_back(n);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int i = n; i >= 0; --i) {
    prefix.push_back(i);
    compositions(n - i, k, prefix, out);
    prefix.pop_back();
  }
}

using Key = std::tuple<std::vector<int>, int, int>;

Key key_of(const PortfolioState& s) { return {s.holdings, static_cast<int>(s.rate), s.default_flag ? 1 : 0}; }

// Units that can be invested this epoch.
int available_units(const PortfolioState& s, DefaultMode mode) {
  const bool lost = s.default_flag && mode == DefaultMode::kForfeitPrincipal;
  return s.holdings[0] + (lost ? 0 : s.holdings[1]);
}

double state_reward(const PortfolioState& s, const PortfolioParams& p) {
  const double x0 = s.holdings[0], x1 = s.holdings[1];
  const double rate = s.rate == Rate::kHigh ? p.r_nonliquid_high : p.r_nonliquid_low;
  double r = p.r_liquid * x0;
  if (!s.default_flag) {
    r += rate * x1;
  } else if (p.default_mode != DefaultMode::kForfeitInterest) {
    r -= x1;
  }
  return r;
}

}  // namespace

Vector portfolio_initial_distribution(const PortfolioParams& params,
                                      const std::vector<PortfolioState>& states) {
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(states.size()));
  if (states.size() == 1) {
    mu[0] = 1.0;
    return mu;
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    if (s.default_flag || s.holdings[0] != params.units) continue;
    mu[static_cast<Eigen::Index>(i)] = s.rate == Rate::kHigh ? params.initial_high_prob : 1.0 - params.initial_high_prob;
  }
  return mu;
}

PortfolioInstance build_portfolio(const PortfolioParams& params) {
  params.validate();
  const std::size_t parts = static_cast<std::size_t>(params.maturity) + 1;

  std::vector<PortfolioState> states;
  if (params.units == 0) {
    states.push_back({std::vector<int>(parts, 0), Rate::kLow, false});
    MdpSpec spec;
    spec.discount = params.alpha;
    spec.initial_distribution = {1.0};
    spec.states.push_back({states[0].label(), {{"invest=0", 0.0, {{0, 1.0}}}}});
    return {params, states, Mdp(std::move(spec))};
  }

  // Rough size check before enumerating: C(N + M, M) holdings, times 4.
  {
    double count = 1.0;
    for (int k = 1; k <= params.maturity; ++k) count = count * (params.units + k) / k;
    if (params.default_mode == DefaultMode::kForfeitPrincipal) count = count * (params.units + parts) / parts;
    if (count * 4.0 > static_cast<double>(kMaxPortfolioStates)) {
      throw CapacityError("portfolio state space exceeds " + std::to_string(kMaxPortfolioStates) + " states");
    }
  }

  std::vector<std::vector<int>> holdings;
  const int lowest = params.default_mode == DefaultMode::kForfeitPrincipal ? 0 : params.units;
  for (int n = params.units; n >= lowest; --n) {
    std::vector<int> prefix;
    compositions(n, parts, prefix, holdings);
  }
  std::map<Key, std::size_t> index;
  for (const auto& h : holdings) {
    for (Rate rate : {Rate::kLow, Rate::kHigh}) {
      for (bool flag : {false, true}) {
        if (flag && h[1] == 0) continue;
        PortfolioState s{h, rate, flag};
        index.emplace(key_of(s), states.size());
        states.push_back(std::move(s));
      }
    }
  }

  MdpSpec spec;
  spec.discount = params.alpha;
  spec.states.reserve(states.size());
  for (const auto& s : states) {
    StateSpec st;
    st.label = s.label();
    const double reward = state_reward(s, params);
    const int avail = available_units(s, params.default_mode);
    for (int a = 0; a <= avail; ++a) {
      std::vector<int> next(parts);
      next[0] = avail - a;
      for (std::size_t k = 1; k + 1 < parts; ++k) next[k] = s.holdings[k + 1];
      next[parts - 1] = a;
      ActionSpec act;
      act.label = "invest=" + std::to_string(a);
      act.reward = reward;
      const Rate other = s.rate == Rate::kLow ? Rate::kHigh : Rate::kLow;
      for (auto [rate, pr] : {std::pair{s.rate, 1.0 - params.p_switch}, std::pair{other, params.p_switch}}) {
        if (pr <= 0.0) continue;
        if (next[1] > 0) {
          for (auto [flag, pf] : {std::pair{false, 1.0 - params.p_default}, std::pair{true, params.p_default}}) {
            if (pf <= 0.0) continue;
            act.successors.push_back({index.at(key_of({next, rate, flag})), pr * pf});
          }
        } else {
          act.successors.push_back({index.at(key_of({next, rate, false})), pr});
        }
      }
      st.actions.push_back(std::move(act));
    }
    spec.states.push_back(std::move(st));
  }
  const Vector mu = portfolio_initial_distribution(params, states);
  spec.initial_distribution.assign(mu.data(), mu.data() + mu.size());
  return {params, std::move(states), Mdp(std::move(spec))};
}

Mdp build_portfolio_mdp(const PortfolioParams& params) { return build_portfolio(params).mdp; }

Policy laddered_policy(const Mdp& mdp) {
  std::vector<std::size_t> actions(mdp.num_states());
  for (std::size_t x = 0; x < mdp.num_states(); ++x) actions[x] = mdp.num_actions(x) > 1 ? 1 : 0;
  return Policy(std::move(actions));
}

bool is_laddered(const Policy& policy, const Mdp& mdp, LadderScope scope) {
  check_admissible(mdp, policy);
  const std::size_t n = mdp.num_states();
  for (std::size_t x = 0; x < n; ++x) parse_portfolio_label(mdp.state_label(x));

  std::vector<char> visit(n, scope == LadderScope::kAllStates ? 1 : 0);
  if (scope == LadderScope::kReachable) {
    std::queue<std::size_t> q;
    for (std::size_t x = 0; x < n; ++x) {
      if (mdp.initial_distribution()[static_cast<Eigen::Index>(x)] > 0.0) {
        visit[x] = 1;
        q.push(x);
      }
    }
    while (!q.empty()) {
      const std::size_t x = q.front();
      q.pop();
      for (const auto& s : mdp.successors(x, policy[x])) {
        if (!visit[s.state]) {
          visit[s.state] = 1;
          q.push(s.state);
        }
      }
    }
  }
  // Action index a invests a units, so cash is available iff a second action exists.
  for (std::size_t x = 0; x < n; ++x) {
    if (!visit[x]) continue;
    const std::size_t want = mdp.num_actions(x) > 1 ? 1 : 0;
    if (policy[x] != want) return false;
  }
  return true;
}

Calibration calibrate_portfolio() {
  Calibration cal;
  double best = std::numeric_limits<double>::infinity();
  for (auto mode : {DefaultMode::kForfeitInterest, DefaultMode::kChargePrincipal, DefaultMode::kForfeitPrincipal}) {
    for (double init : {0.0, 0.5, 1.0}) {
      PortfolioParams p = reference_params();
      p.default_mode = mode;
      p.initial_high_prob = init;
      const Mdp mdp = build_portfolio_mdp(p);
      const auto sol = solve_pseudo_mdp(mdp, 0.0, 0.0);
      const auto b = mean_variance_bundle(mdp, sol.policy, 0.0);
      CalibrationCandidate c{mode, init, b.eta, b.zeta,
                             std::max(std::abs(b.eta - cal.anchor_eta), std::abs(b.zeta - cal.anchor_zeta))};
      if (c.distance < best) {
        best = c.distance;
        cal.mode = mode;
        cal.initial_high_prob = init;
      }
      cal.candidates.push_back(c);
    }
  }
  return cal;
}

std::string portfolio_params_to_json(const PortfolioParams& p) {
  nlohmann::ordered_json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["maturity"] = p.maturity;
  j["units"] = p.units;
  j["r_liquid"] = p.r_liquid;
  j["r_nonliquid_low"] = p.r_nonliquid_low;
  j["r_nonliquid_high"] = p.r_nonliquid_high;
  j["p_switch"] = p.p_switch;
  j["p_default"] = p.p_default;
  j["default_mode"] = std::string(to_string(p.default_mode));
  j["initial_high_prob"] = p.initial_high_prob;
  return j.dump(2);
}

PortfolioParams portfolio_params_from_json(const std::string& text, const Calibration* calibration) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("portfolio params: ") + e.what());
  }
  if (!j.is_object()) throw InputError("portfolio params: top level must be an object");

  PortfolioParams p = reference_params();
  std::optional<Calibration> own;
  const auto cal = [&]() -> const Calibration& {
    if (calibration) return *calibration;
    if (!own) own = calibrate_portfolio();
    return *own;
  };
  const auto real = [&](const std::string& key, const nlohmann::json& v) {
    if (!v.is_number()) throw InputError("portfolio params: '" + key + "' must be a number");
    return v.get<double>();
  };
  const auto integer = [&](const std::string& key, const nlohmann::json& v) {
    if (!v.is_number_integer()) throw InputError("portfolio params: '" + key + "' must be an integer");
    return v.get<int>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "alpha") p.alpha = real(key, v);
    else if (key == "beta") p.beta = real(key, v);
    else if (key == "maturity") p.maturity = integer(key, v);
    else if (key == "units") p.units = integer(key, v);
    else if (key == "r_liquid") p.r_liquid = real(key, v);
    else if (key == "r_nonliquid_low") p.r_nonliquid_low = real(key, v);
    else if (key == "r_nonliquid_high") p.r_nonliquid_high = real(key, v);
    else if (key == "p_switch") p.p_switch = real(key, v);
    else if (key == "p_default") p.p_default = real(key, v);
    else if (key == "default_mode") {
      if (!v.is_string()) throw InputError("portfolio params: 'default_mode' must be a string");
      const auto s = v.get<std::string>();
      p.default_mode = s == "auto" ? cal().mode : parse_default_mode(s);
    } else if (key == "initial_high_prob") {
      p.initial_high_prob = v.is_string() && v.get<std::string>() == "auto" ? cal().initial_high_prob : real(key, v);
    } else {
      throw InputError("portfolio params: unknown field '" + key + "'");
    }
  }
  p.validate();
  return p;
}

}  // namespace mvmdp
