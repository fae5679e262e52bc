#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace swarmsim::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

struct ManifestEntry {
  std::string command;
  std::vector<std::string> argv;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

/// Appends one JSON line (hashes, tool version, git describe, UTC timestamp).
void append_manifest(const std::filesystem::path& manifest, const ManifestEntry& entry);

/// Default manifest location: manifest.jsonl beside the first output.
std::filesystem::path default_manifest_for(const std::filesystem::path& output);

}  // namespace swarmsim::cli
