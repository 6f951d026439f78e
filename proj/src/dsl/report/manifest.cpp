#include "dsl/report/manifest.hpp"

#include <nlohmann/json.hpp>

#include "dsl/report/csv.hpp"

namespace dsl::report {

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= uint64_t(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void RunManifest::add_output(const std::string& dir, const std::string& filename) {
  const std::string content = read_file(dir + "/" + filename);
  outputs.push_back({filename, uint64_t(content.size()), checksum_hex(content)});
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["config_echo"] = config_echo;
  j["wall_time_seconds"] = wall_time_seconds;
  j["outputs"] = nlohmann::json::array();
  for (const auto& e : outputs)
    j["outputs"].push_back({{"path", e.path},
                            {"byte_count", e.byte_count},
                            {"checksum", e.checksum}});
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& dir, const std::string& filename) const {
  write_file_atomic(dir + "/" + filename, to_json());
}

bool verify_manifest(const std::string& dir, const RunManifest& manifest) {
  for (const auto& e : manifest.outputs) {
    std::string content;
    try {
      content = read_file(dir + "/" + e.path);
    } catch (const std::exception&) {
      return false;
    }
    if (uint64_t(content.size()) != e.byte_count) return false;
    if (checksum_hex(content) != e.checksum) return false;
  }
  return true;
}

}  // namespace dsl::report
