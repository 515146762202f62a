#include "mvmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/SparseLU>

namespace mvmdp {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << "invalid MDP (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s")
      << ")";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) out << "; " << violations[i].message;
  if (shown < violations.size()) out << "; ...";
  return out.str();
}

std::string coord(std::size_t x, std::size_t a) {
  std::ostringstream out;
  out << "(state " << x << ", action " << a << ")";
  return out.str();
}

}  // namespace

ModelError::ModelError(std::vector<Violation> violations)
    : Error(summarize(violations)), violations_(std::move(violations)) {}

InadmissibleActionError::InadmissibleActionError(std::size_t state, std::size_t action,
                                                 std::size_t num_actions)
    : Error("inadmissible action " + std::to_string(action) + " at state " + std::to_string(state) +
            " (state has " + std::to_string(num_actions) + " actions)"),
      state_(state) {}

std::vector<Violation> validate_mdp(const MdpSpec& spec) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  const std::size_t n = spec.states.size();
  if (n == 0) out.push_back({K::kEmptyStateSpace, Violation::kNone, Violation::kNone, "no states"});

  for (std::size_t x = 0; x < n; ++x) {
    const auto& state = spec.states[x];
    if (state.actions.empty()) {
      out.push_back({K::kNoActions, x, Violation::kNone,
                     "state " + std::to_string(x) + " has no admissible actions"});
    }
    for (std::size_t a = 0; a < state.actions.size(); ++a) {
      const auto& act = state.actions[a];
      if (!std::isfinite(act.reward)) {
        out.push_back({K::kNonFiniteReward, x, a, "non-finite reward at " + coord(x, a)});
      }
      std::vector<std::size_t> seen;
      double sum = 0.0;
      bool bad = false;
      for (const auto& s : act.successors) {
        if (s.state >= n) {
          out.push_back({K::kBadSuccessor, x, a,
                         "successor " + std::to_string(s.state) + " out of range at " + coord(x, a)});
          bad = true;
          continue;
        }
        if (!std::isfinite(s.prob) || s.prob < 0.0) {
          out.push_back({K::kNegativeProbability, x, a,
                         "negative or non-finite probability at " + coord(x, a)});
          bad = true;
          continue;
        }
        if (std::find(seen.begin(), seen.end(), s.state) != seen.end()) {
          out.push_back({K::kDuplicateSuccessor, x, a,
                         "duplicate successor " + std::to_string(s.state) + " at " + coord(x, a)});
          bad = true;
        }
        seen.push_back(s.state);
        sum += s.prob;
      }
      if (!bad && std::abs(sum - 1.0) > kProbabilityTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition probabilities sum to " << sum << " at " << coord(x, a);
        out.push_back({K::kTransitionSum, x, a, msg.str()});
      }
    }
  }

  if (spec.initial_distribution.size() != n) {
    out.push_back({K::kInitialDistributionSize, Violation::kNone, Violation::kNone,
                   "initial distribution has " + std::to_string(spec.initial_distribution.size()) +
                       " entries for " + std::to_string(n) + " states"});
  } else {
    double sum = 0.0;
    bool bad = false;
    for (std::size_t x = 0; x < n; ++x) {
      const double m = spec.initial_distribution[x];
      if (!std::isfinite(m) || m < 0.0) {
        out.push_back({K::kNegativeInitialMass, x, Violation::kNone,
                       "negative or non-finite initial mass at state " + std::to_string(x)});
        bad = true;
      }
      sum += m;
    }
    if (!bad && std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "initial distribution sums to " << sum;
      out.push_back({K::kInitialDistributionSum, Violation::kNone, Violation::kNone, msg.str()});
    }
  }

  if (!(spec.discount > 0.0 && spec.discount < 1.0)) {
    std::ostringstream msg;
    msg << "discount " << spec.discount << " outside (0,1)";
    out.push_back({K::kDiscountRange, Violation::kNone, Violation::kNone, msg.str()});
  }
  return out;
}

Mdp::Mdp(MdpSpec spec) : spec_(std::move(spec)) {
  auto violations = validate_mdp(spec_);
  if (!violations.empty()) throw ModelError(std::move(violations));

  max_abs_reward_ = 0.0;
  min_reward_ = spec_.states[0].actions[0].reward;
  max_reward_ = min_reward_;
  for (auto& state : spec_.states) {
    max_actions_ = std::max(max_actions_, state.actions.size());
    for (auto& act : state.actions) {
      std::erase_if(act.successors, [](const Successor& s) { return s.prob == 0.0; });
      std::sort(act.successors.begin(), act.successors.end(),
                [](const Successor& l, const Successor& r) { return l.state < r.state; });
      double sum = 0.0;
      for (const auto& s : act.successors) sum += s.prob;
      for (auto& s : act.successors) s.prob /= sum;
      max_abs_reward_ = std::max(max_abs_reward_, std::abs(act.reward));
      min_reward_ = std::min(min_reward_, act.reward);
      max_reward_ = std::max(max_reward_, act.reward);
    }
  }
  const double mass = std::accumulate(spec_.initial_distribution.begin(),
                                      spec_.initial_distribution.end(), 0.0);
  for (auto& m : spec_.initial_distribution) m /= mass;
  mu_ = Eigen::Map<const Vector>(spec_.initial_distribution.data(),
                                 static_cast<Eigen::Index>(spec_.initial_distribution.size()));
}

Mdp Mdp::with_initial_distribution(const Vector& mu) const {
  MdpSpec copy = spec_;
  copy.initial_distribution.assign(mu.data(), mu.data() + mu.size());
  return Mdp(std::move(copy));
}

Mdp Mdp::with_discount(double alpha) const {
  MdpSpec copy = spec_;
  copy.discount = alpha;
  return Mdp(std::move(copy));
}

std::string Policy::encode() const {
  std::string out;
  for (std::size_t x = 0; x < actions_.size(); ++x) {
    if (x) out += '-';
    out += std::to_string(actions_[x]);
  }
  return out;
}

Policy Policy::decode(const std::string& text) {
  std::vector<std::size_t> actions;
  std::string token;
  auto flush = [&] {
    if (token.empty()) throw InputError("malformed policy string '" + text + "'");
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size()) throw InputError("malformed policy string '" + text + "'");
    actions.push_back(value);
    token.clear();
  };
  for (char c : text) {
    if (c == '-' || c == ',') {
      flush();
    } else if (c != ' ') {
      token += c;
    }
  }
  flush();
  return Policy(std::move(actions));
}

void check_admissible(const Mdp& mdp, const Policy& policy) {
  if (policy.size() != mdp.num_states()) {
    throw InputError("policy covers " + std::to_string(policy.size()) + " states, MDP has " +
                     std::to_string(mdp.num_states()));
  }
  for (std::size_t x = 0; x < policy.size(); ++x) {
    if (policy[x] >= mdp.num_actions(x)) {
      throw InadmissibleActionError(x, policy[x], mdp.num_actions(x));
    }
  }
}

MixedPolicy::MixedPolicy(Policy base_policy, Policy alternative_policy, double delta)
    : base(std::move(base_policy)), alternative(std::move(alternative_policy)), weight(delta) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("mixing weight outside [0,1]");
  if (base.size() != alternative.size()) {
    throw std::invalid_argument("mixed policies cover different state counts");
  }
}

MarkovRewardProcess induce(const Mdp& mdp, const Policy& policy) {
  check_admissible(mdp, policy);
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  MarkovRewardProcess mrp;
  mrp.reward.resize(n);
  mrp.reward_sq.resize(n);
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto ux = static_cast<std::size_t>(x);
    const double r = mdp.reward(ux, policy[ux]);
    mrp.reward[x] = r;
    mrp.reward_sq[x] = r * r;
    for (const auto& s : mdp.successors(ux, policy[ux])) {
      triplets.emplace_back(x, static_cast<Eigen::Index>(s.state), s.prob);
    }
  }
  mrp.transition.resize(n, n);
  mrp.transition.setFromTriplets(triplets.begin(), triplets.end());
  return mrp;
}

MarkovRewardProcess induce_mixed(const Mdp& mdp, const MixedPolicy& mix) {
  if (mix.weight == 0.0) return induce(mdp, mix.base);
  if (mix.weight == 1.0) return induce(mdp, mix.alternative);
  const auto base = induce(mdp, mix.base);
  const auto alt = induce(mdp, mix.alternative);
  const double d = mix.weight;
  MarkovRewardProcess mrp;
  mrp.transition = (1.0 - d) * base.transition + d * alt.transition;
  mrp.reward = (1.0 - d) * base.reward + d * alt.reward;
  mrp.reward_sq = (1.0 - d) * base.reward_sq + d * alt.reward_sq;
  return mrp;
}

namespace {

// Number of closed communicating classes of the directed graph of positive entries.
std::size_t closed_class_count(const SparseMatrix& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<std::size_t>> adj(n);
  for (Eigen::Index x = 0; x < p.outerSize(); ++x) {
    for (SparseMatrix::InnerIterator it(p, x); it; ++it) {
      if (it.value() > 0.0) adj[static_cast<std::size_t>(x)].push_back(static_cast<std::size_t>(it.col()));
    }
  }

  // Iterative Tarjan.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, comps = 0;
  struct Frame {
    std::size_t node;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& f = call.back();
      if (f.edge < adj[f.node].size()) {
        const std::size_t next = adj[f.node][f.edge++];
        if (index[next] == kUnset) {
          index[next] = low[next] = counter++;
          stack.push_back(next);
          on_stack[next] = true;
          call.push_back({next, 0});
        } else if (on_stack[next]) {
          low[f.node] = std::min(low[f.node], index[next]);
        }
      } else {
        const std::size_t node = f.node;
        if (low[node] == index[node]) {
          std::size_t w = 0;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = comps;
          } while (w != node);
          ++comps;
        }
        call.pop_back();
        if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[node]);
      }
    }
  }

  std::vector<bool> closed(comps, true);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y : adj[x]) {
      if (comp[x] != comp[y]) closed[comp[x]] = false;
    }
  }
  return static_cast<std::size_t>(std::count(closed.begin(), closed.end(), true));
}

double stationary_residual(const SparseMatrix& pt, const Vector& pi) {
  return (pt * pi - pi).lpNorm<Eigen::Infinity>();
}

}  // namespace

Vector stationary_distribution(const MarkovRewardProcess& mrp) {
  const auto& p = mrp.transition;
  const Eigen::Index n = p.rows();
  const std::size_t classes = closed_class_count(p);
  if (classes != 1) {
    throw ErgodicityError("induced chain has " + std::to_string(classes) +
                          " closed communicating classes; stationary distribution is not unique");
  }

  const SparseMatrix pt = p.transpose();
  // Lazy chain (I + P)/2 shares pi with P and is aperiodic.
  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  constexpr std::size_t kMaxIterations = 1'000'000;
  for (std::size_t k = 0; k < kMaxIterations; ++k) {
    Vector next = 0.5 * (pi + pt * pi);
    next /= next.sum();
    pi.swap(next);
    if (stationary_residual(pt, pi) <= 0.5 * kStationaryResidual) return pi;
  }

  // Direct fallback: (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::SparseMatrix<double> a = Eigen::SparseMatrix<double>(pt);
  {
    Eigen::SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    a -= eye;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
      if (it.row() != n - 1) triplets.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index c = 0; c < n; ++c) triplets.emplace_back(n - 1, c, 1.0);
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw ErgodicityError("stationary distribution solve failed");
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  pi = lu.solve(rhs);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  if (stationary_residual(pt, pi) > kStationaryResidual) {
    throw ErgodicityError("stationary distribution did not reach residual tolerance");
  }
  return pi;
}

}  // namespace mvmdp
