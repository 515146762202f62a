#include "mvmdp/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include <openssl/evp.h>

#include "mvmdp/errors.hpp"
#include "mvmdp/io.hpp"

namespace mvmdp {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  static const char* kHex = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text_file(path)); }

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::string& path) { inputs.push_back({path, sha256_file(path)}); }

void RunManifest::add_output(const std::string& path) { outputs.push_back({path, sha256_file(path)}); }

std::string RunManifest::to_json() const {
  using ojson = nlohmann::ordered_json;
  const auto files = [](const std::vector<FileDigest>& list) {
    auto arr = ojson::array();
    for (const auto& f : list) arr.push_back(ojson{{"path", f.path}, {"sha256", f.sha256}});
    return arr;
  };
  ojson j;
  j["tool_version"] = tool_version;
  j["command_line"] = command_line;
  j["config"] = config;
  j["inputs"] = files(inputs);
  j["seed"] = seed ? ojson(*seed) : ojson(nullptr);
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = files(outputs);
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) {
  finished = utc_timestamp();
  write_text_file(path, to_json());
}

}  // namespace mvmdp
