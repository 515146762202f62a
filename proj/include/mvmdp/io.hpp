#pragma once

#include <string>

#include "mvmdp/mdp.hpp"

namespace mvmdp {

/**
 * Parses the JSON model format without validating it.
 *
 * Keys: "states" (labels), "actions" (per-state label arrays), "transitions"
 * ({state, action, next_state, prob}), "rewards" ({state, action, value}),
 * "mu", "alpha". States and actions may be given by label or by index.
 * Omitted transitions have probability 0 and omitted rewards are 0.
 * Throws InputError on malformed JSON, unknown references or duplicate records.
 */
MdpSpec parse_mdp_json(const std::string& text);

/// parse_mdp_json followed by construction; invalid models throw ModelError.
Mdp load_mdp_json(const std::string& text);
Mdp load_mdp_file(const std::string& path);

/// Indices are written for every reference; doubles round-trip exactly.
std::string mdp_to_json(const Mdp& mdp);
void save_mdp_file(const Mdp& mdp, const std::string& path);

/// Whole file as a string. Throws InputError when unreadable.
std::string read_text_file(const std::string& path);
/// Throws InputError when the file cannot be written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mvmdp
