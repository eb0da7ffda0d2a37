#include "dtcell/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <stdexcept>

#include "dtcell/common/binary_io.hpp"
#include "json.hpp"

namespace dtcell::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv, std::uint64_t seed)
    : command_(std::move(command)), argv_(std::move(argv)), seed_(seed), started_(utc_now()) {}

void RunManifest::set_config(std::string_view serialized, std::string path) {
  config_hash_ = sha256_hex(serialized);
  config_path_ = std::move(path);
}

void RunManifest::add_artifact(const std::string& path) {
  for (const auto& a : artifacts_)
    if (a == path) return;
  artifacts_.push_back(path);
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["seed"] = seed_;
  j["config_sha256"] = config_hash_;
  if (!config_path_.empty()) j["config_path"] = config_path_;
  j["started_at"] = started_;
  j["finished_at"] = finished_;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& path : artifacts_) {
    nlohmann::json a = {{"path", path}};
    if (std::filesystem::exists(path)) a["sha256"] = sha256_hex(read_file_bytes(path));
    j["artifacts"].push_back(a);
  }
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) {
  finished_ = utc_now();
  write_file_bytes(path, to_json());
}

}  // namespace dtcell::cli
