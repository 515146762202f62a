#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mvmdp {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);
/// SHA-256 of a file's contents. Throws InputError when unreadable.
std::string sha256_file(const std::string& path);

/// UTC ISO-8601 time; SOURCE_DATE_EPOCH, when set, replaces the clock.
std::string utc_timestamp();

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::vector<std::string> command_line;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<FileDigest> inputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<FileDigest> outputs;
  /// Free-form records, e.g. calibration choices.
  nlohmann::ordered_json notes = nlohmann::ordered_json::object();

  void add_input(const std::string& path);
  /// Digests the file as it is now on disk.
  void add_output(const std::string& path);
  std::string to_json() const;
  /// Stamps `finished` and writes to `path`.
  void write(const std::string& path);
};

}  // namespace mvmdp
