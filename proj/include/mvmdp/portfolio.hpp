#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvmdp/mdp.hpp"

namespace mvmdp {

/**
 * What a default at maturity costs.
 *
 * forfeit-interest: the matured interest is lost, units are kept.
 * charge-principal: the matured principal is charged to the reward, units are kept.
 * forfeit-principal: interest and principal are lost and the units leave the
 * portfolio, so holdings span sum(x) <= N.
 */
enum class DefaultMode { kForfeitInterest, kChargePrincipal, kForfeitPrincipal };

std::string_view to_string(DefaultMode mode);
/// Throws InputError on an unknown name.
DefaultMode parse_default_mode(std::string_view name);

enum class Rate { kLow = 0, kHigh = 1 };

struct PortfolioParams {
  double alpha = 0.95;
  double beta = 1.0;
  int maturity = 3;
  int units = 3;
  double r_liquid = 0.03;
  double r_nonliquid_low = 0.4;
  double r_nonliquid_high = 1.0;
  double p_switch = 0.1;
  double p_default = 0.1;
  DefaultMode default_mode = DefaultMode::kChargePrincipal;
  /// Probability that the non-liquid rate is high at the first epoch.
  double initial_high_prob = 0.0;

  /// Throws InputError naming the first bad field.
  void validate() const;
};

/// The reference instance with the calibrated default mode and initial rate.
PortfolioParams reference_params();

struct PortfolioState {
  std::vector<int> holdings;  ///< x_0 liquid, x_k matures in k - 1 steps
  Rate rate = Rate::kLow;
  bool default_flag = false;

  std::string label() const;
  bool operator==(const PortfolioState&) const = default;
};

/// Parses "x=3,0,0,0;rate=low;default=0". Throws InputError otherwise.
PortfolioState parse_portfolio_label(std::string_view label);

inline constexpr std::size_t kMaxPortfolioStates = 2'000'000;

struct PortfolioInstance {
  PortfolioParams params;
  std::vector<PortfolioState> states;
  Mdp mdp;
};

/**
 * Builds the portfolio MDP. State 0 is the all-liquid, low-rate, no-default
 * state. Action a invests a units of the liquid plus matured cash. With
 * units = 0 there is one absorbing state with reward 0. Throws InputError on
 * invalid params and CapacityError above kMaxPortfolioStates.
 */
PortfolioInstance build_portfolio(const PortfolioParams& params);
Mdp build_portfolio_mdp(const PortfolioParams& params);

/// Mass on the all-liquid, no-default states split by initial_high_prob.
Vector portfolio_initial_distribution(const PortfolioParams& params,
                                      const std::vector<PortfolioState>& states);

/// Invest one unit whenever cash is available, else nothing.
Policy laddered_policy(const Mdp& mdp);

enum class LadderScope { kReachable, kAllStates };

/**
 * True iff the policy invests exactly one unit whenever x_0 + x_1 >= 1 (cash
 * available) and none otherwise. kReachable checks only states reachable from
 * mu under the policy. Throws InputError when the labels are not portfolio labels.
 */
bool is_laddered(const Policy& policy, const Mdp& mdp, LadderScope scope = LadderScope::kReachable);

struct CalibrationCandidate {
  DefaultMode mode = DefaultMode::kForfeitInterest;
  double initial_high_prob = 0.0;
  double eta = 0.0;   ///< risk-neutral optimum
  double zeta = 0.0;
  double distance = 0.0;  ///< max abs deviation from the anchor
};

struct Calibration {
  DefaultMode mode = DefaultMode::kChargePrincipal;
  double initial_high_prob = 0.0;
  double anchor_eta = 0.4507;
  double anchor_zeta = 1.3468;
  std::vector<CalibrationCandidate> candidates;
};

/**
 * Evaluates every default mode crossed with an initial high-rate probability
 * of 0, 0.5 and 1 at the reference parameters, and selects the pair whose
 * risk-neutral optimum (eta, zeta) is closest to the anchor.
 */
Calibration calibrate_portfolio();

/// JSON text with the PortfolioParams field names.
std::string portfolio_params_to_json(const PortfolioParams& params);

/**
 * Reads params from JSON. Missing fields keep reference_params() values;
 * "default_mode": "auto" or "initial_high_prob": "auto" take the calibrated
 * choice. Throws InputError on malformed input or invalid values.
 */
PortfolioParams portfolio_params_from_json(const std::string& text,
                                           const Calibration* calibration = nullptr);

}  // namespace mvmdp
