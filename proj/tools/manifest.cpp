#include "manifest.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#ifndef SWARMSIM_VERSION
#define SWARMSIM_VERSION "0.0.0"
#endif
#ifndef SWARMSIM_GIT_DESCRIBE
#define SWARMSIM_GIT_DESCRIBE "unknown"
#endif

namespace swarmsim::cli {

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

nlohmann::ordered_json file_list(const std::vector<std::filesystem::path>& files) {
  auto list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    nlohmann::ordered_json item = {{"path", f.string()}};
    std::error_code ec;
    if (std::filesystem::is_regular_file(f, ec)) item["sha256"] = sha256_file(f);
    list.push_back(std::move(item));
  }
  return list;
}

}  // namespace

void append_manifest(const std::filesystem::path& manifest, const ManifestEntry& e) {
  nlohmann::ordered_json j = {{"command", e.command},
                              {"argv", e.argv},
                              {"config", e.config_path ? nlohmann::ordered_json(*e.config_path) : nullptr},
                              {"seed", e.seed ? nlohmann::ordered_json(*e.seed) : nullptr},
                              {"inputs", file_list(e.inputs)},
                              {"outputs", file_list(e.outputs)},
                              {"tool_version", SWARMSIM_VERSION},
                              {"git_describe", SWARMSIM_GIT_DESCRIBE},
                              {"timestamp", utc_timestamp()}};
  if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());
  std::ofstream out(manifest, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to manifest " + manifest.string());
  out << j.dump() << '\n';
}

std::filesystem::path default_manifest_for(const std::filesystem::path& output) {
  return output.parent_path() / "manifest.jsonl";
}

}  // namespace swarmsim::cli
