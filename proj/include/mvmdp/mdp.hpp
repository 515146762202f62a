#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mvmdp/errors.hpp"

namespace mvmdp {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Probability normalization tolerance applied on ingestion.
inline constexpr double kProbabilityTolerance = 1e-12;

struct Successor {
  std::size_t state = 0;
  double prob = 0.0;
};

struct ActionSpec {
  std::string label;
  double reward = 0.0;
  std::vector<Successor> successors;
};

struct StateSpec {
  std::string label;
  std::vector<ActionSpec> actions;
};

/// Raw, possibly invalid model description. `Mdp` is built from one of these.
struct MdpSpec {
  std::vector<StateSpec> states;
  std::vector<double> initial_distribution;
  double discount = 0.0;
};

/// Reports every invariant violation. Never throws.
std::vector<Violation> validate_mdp(const MdpSpec& spec);

/**
 * Finite discounted MDP <S, A, r, p, mu, alpha> with dense 0-based state and
 * action indices.
 *
 * Construction validates the spec and throws ModelError with the full report
 * if anything is wrong. Probability vectors within kProbabilityTolerance of
 * unit mass are rescaled to sum to one. Instances are immutable.
 */
class Mdp {
 public:
  explicit Mdp(MdpSpec spec);

  std::size_t num_states() const noexcept { return spec_.states.size(); }
  std::size_t num_actions(std::size_t x) const { return spec_.states[x].actions.size(); }
  double reward(std::size_t x, std::size_t a) const { return spec_.states[x].actions[a].reward; }
  std::span<const Successor> successors(std::size_t x, std::size_t a) const {
    return spec_.states[x].actions[a].successors;
  }
  const Vector& initial_distribution() const noexcept { return mu_; }
  double discount() const noexcept { return spec_.discount; }

  const std::string& state_label(std::size_t x) const { return spec_.states[x].label; }
  const std::string& action_label(std::size_t x, std::size_t a) const {
    return spec_.states[x].actions[a].label;
  }

  /// Largest |r(x,a)| over all state-action pairs.
  double max_abs_reward() const noexcept { return max_abs_reward_; }
  double min_reward() const noexcept { return min_reward_; }
  double max_reward() const noexcept { return max_reward_; }
  std::size_t max_actions() const noexcept { return max_actions_; }

  /// Expected value of u(y) under p(.|x,a).
  double expect(std::size_t x, std::size_t a, const Vector& u) const {
    double acc = 0.0;
    for (const auto& s : successors(x, a)) acc += s.prob * u[static_cast<Eigen::Index>(s.state)];
    return acc;
  }

  Mdp with_initial_distribution(const Vector& mu) const;
  Mdp with_discount(double alpha) const;

  const MdpSpec& spec() const noexcept { return spec_; }

 private:
  MdpSpec spec_;
  Vector mu_;
  double max_abs_reward_ = 0.0;
  double min_reward_ = 0.0;
  double max_reward_ = 0.0;
  std::size_t max_actions_ = 0;
};

/// Stationary deterministic policy: one admissible action index per state.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::size_t> actions) : actions_(std::move(actions)) {}

  /// Every state takes action `a`.
  static Policy constant(std::size_t num_states, std::size_t a = 0) {
    return Policy(std::vector<std::size_t>(num_states, a));
  }

  std::size_t operator[](std::size_t x) const { return actions_[x]; }
  std::size_t size() const noexcept { return actions_.size(); }
  const std::vector<std::size_t>& actions() const noexcept { return actions_; }

  /// Action indices joined with '-', e.g. "0-1-1-0".
  std::string encode() const;
  /// Inverse of encode(); also accepts ',' as separator.
  static Policy decode(const std::string& text);

  bool operator==(const Policy&) const = default;

 private:
  std::vector<std::size_t> actions_;
};

/// Throws InadmissibleActionError naming the first bad state.
void check_admissible(const Mdp& mdp, const Policy& policy);

/// Follows `base` with probability 1 - weight and `alternative` otherwise.
struct MixedPolicy {
  MixedPolicy(Policy base_policy, Policy alternative_policy, double delta);

  Policy base;
  Policy alternative;
  double weight;
};

/**
 * Markov reward process induced by a (possibly mixed) policy.
 *
 * `reward_sq` holds E[r^2] per state; for deterministic policies it is the
 * element-wise square of `reward`, for mixed policies it is the blend of the
 * two squared reward vectors.
 */
struct MarkovRewardProcess {
  SparseMatrix transition;
  Vector reward;
  Vector reward_sq;
};

MarkovRewardProcess induce(const Mdp& mdp, const Policy& policy);
MarkovRewardProcess induce_mixed(const Mdp& mdp, const MixedPolicy& mix);

/// Residual bound guaranteed on every successful return.
inline constexpr double kStationaryResidual = 1e-10;

/**
 * Unique stationary distribution pi with pi P = pi.
 *
 * Throws ErgodicityError if the chain has more than one closed communicating
 * class or if no distribution meeting kStationaryResidual can be found.
 */
Vector stationary_distribution(const MarkovRewardProcess& mrp);

}  // namespace mvmdp
