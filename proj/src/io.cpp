#include "mvmdp/io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace mvmdp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw InputError("mdp file: " + what); }

std::size_t resolve(const json& ref, const std::vector<std::string>& labels, const char* what) {
  if (ref.is_number_unsigned() || (ref.is_number_integer() && ref.get<long long>() >= 0)) {
    const auto i = ref.get<std::size_t>();
    if (i >= labels.size()) fail(std::string(what) + " index " + std::to_string(i) + " out of range");
    return i;
  }
  if (ref.is_string()) {
    const auto& s = ref.get_ref<const std::string&>();
    std::size_t found = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != s) continue;
      if (found != labels.size()) fail(std::string("ambiguous ") + what + " label '" + s + "'");
      found = i;
    }
    if (found == labels.size()) fail(std::string("unknown ") + what + " '" + s + "'");
    return found;
  }
  fail(std::string(what) + " reference must be a label or a nonnegative index");
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) fail(std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const json& v, const char* what) {
  if (!v.is_number()) fail(std::string(what) + " must be a number");
  return v.get<double>();
}

}  // namespace

MdpSpec parse_mdp_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(e.what());
  }
  if (!doc.is_object()) fail("top level must be an object");
  for (const auto& [key, _] : doc.items()) {
    static const std::set<std::string> known{"states", "actions", "transitions", "rewards", "mu", "alpha"};
    if (!known.count(key)) fail("unknown key '" + key + "'");
  }

  MdpSpec spec;
  std::vector<std::string> state_labels;
  const auto& states = field(doc, "states");
  if (!states.is_array()) fail("'states' must be an array");
  for (const auto& s : states) {
    if (!s.is_string()) fail("state labels must be strings");
    state_labels.push_back(s.get<std::string>());
  }
  const auto& actions = field(doc, "actions");
  if (!actions.is_array() || actions.size() != state_labels.size()) {
    fail("'actions' must be an array with one entry per state");
  }
  std::vector<std::vector<std::string>> action_labels(state_labels.size());
  spec.states.resize(state_labels.size());
  for (std::size_t x = 0; x < state_labels.size(); ++x) {
    spec.states[x].label = state_labels[x];
    if (!actions[x].is_array()) fail("actions of state " + std::to_string(x) + " must be an array");
    for (const auto& a : actions[x]) {
      if (!a.is_string()) fail("action labels must be strings");
      action_labels[x].push_back(a.get<std::string>());
      spec.states[x].actions.push_back({a.get<std::string>(), 0.0, {}});
    }
  }

  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen_t;
  if (doc.contains("transitions")) {
    const auto& ts = doc.at("transitions");
    if (!ts.is_array()) fail("'transitions' must be an array");
    for (const auto& t : ts) {
      const std::size_t x = resolve(field(t, "state"), state_labels, "state");
      const std::size_t a = resolve(field(t, "action"), action_labels[x], "action");
      const std::size_t y = resolve(field(t, "next_state"), state_labels, "next_state");
      const double p = number(field(t, "prob"), "prob");
      if (!seen_t.insert({x, a, y}).second) {
        fail("duplicate transition (" + std::to_string(x) + ", " + std::to_string(a) + ", " + std::to_string(y) + ")");
      }
      if (p != 0.0) spec.states[x].actions[a].successors.push_back({y, p});
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen_r;
  if (doc.contains("rewards")) {
    const auto& rs = doc.at("rewards");
    if (!rs.is_array()) fail("'rewards' must be an array");
    for (const auto& r : rs) {
      const std::size_t x = resolve(field(r, "state"), state_labels, "state");
      const std::size_t a = resolve(field(r, "action"), action_labels[x], "action");
      if (!seen_r.insert({x, a}).second) {
        fail("duplicate reward (" + std::to_string(x) + ", " + std::to_string(a) + ")");
      }
      spec.states[x].actions[a].reward = number(field(r, "value"), "reward value");
    }
  }
  const auto& mu = field(doc, "mu");
  if (!mu.is_array()) fail("'mu' must be an array");
  for (const auto& m : mu) spec.initial_distribution.push_back(number(m, "mu entry"));
  spec.discount = number(field(doc, "alpha"), "alpha");
  return spec;
}

Mdp load_mdp_json(const std::string& text) { return Mdp(parse_mdp_json(text)); }

Mdp load_mdp_file(const std::string& path) { return load_mdp_json(read_text_file(path)); }

std::string mdp_to_json(const Mdp& mdp) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["states"] = ojson::array();
  doc["actions"] = ojson::array();
  auto transitions = ojson::array();
  auto rewards = ojson::array();
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    doc["states"].push_back(mdp.state_label(x));
    auto labels = ojson::array();
    for (std::size_t a = 0; a < mdp.num_actions(x); ++a) {
      labels.push_back(mdp.action_label(x, a));
      for (const auto& s : mdp.successors(x, a)) {
        transitions.push_back(ojson{{"state", x}, {"action", a}, {"next_state", s.state}, {"prob", s.prob}});
      }
      if (mdp.reward(x, a) != 0.0) {
        rewards.push_back(ojson{{"state", x}, {"action", a}, {"value", mdp.reward(x, a)}});
      }
    }
    doc["actions"].push_back(labels);
  }
  doc["transitions"] = transitions;
  doc["rewards"] = rewards;
  const Vector& mu = mdp.initial_distribution();
  doc["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  doc["alpha"] = mdp.discount();
  return doc.dump(1) + "\n";
}

void save_mdp_file(const Mdp& mdp, const std::string& path) { write_text_file(path, mdp_to_json(mdp)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace mvmdp
