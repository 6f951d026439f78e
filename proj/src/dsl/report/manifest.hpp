#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Reproducibility record written next to every command's outputs: tool
// version, resolved configuration, master seed, and a checksum per file.

namespace dsl::report {

uint64_t fnv1a64(const std::string& bytes);
std::string checksum_hex(const std::string& bytes);

struct ManifestEntry {
  std::string path;  // relative to the manifest location
  uint64_t byte_count = 0;
  std::string checksum;
};

struct RunManifest {
  std::string tool_version;
  std::string command;
  uint64_t master_seed = 0;
  std::string config_echo;  // resolved configuration, verbatim text
  std::vector<ManifestEntry> outputs;
  double wall_time_seconds = 0.0;

  // Reads the file, records its size and checksum.
  void add_output(const std::string& dir, const std::string& filename);
  std::string to_json() const;
  void write(const std::string& dir, const std::string& filename = "manifest.json") const;
};

// Recomputes checksums of every listed output; returns false on any
// mismatch or missing file.
bool verify_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace dsl::report
