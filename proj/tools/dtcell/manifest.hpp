#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dtcell::cli {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Record of one command invocation and everything it wrote.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv, std::uint64_t seed);

  /// Hash of the serialized configuration the command ran with.
  void set_config(std::string_view serialized, std::string path = {});
  /// Lists a produced file; its hash is taken when the manifest is written.
  void add_artifact(const std::string& path);
  const std::vector<std::string>& artifacts() const { return artifacts_; }
  const std::string& config_hash() const { return config_hash_; }

  std::string to_json() const;
  /// Stamps the finish time and writes JSON to `path`.
  void write(const std::string& path);

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_;
  std::string config_hash_;
  std::string config_path_;
  std::string started_;
  std::string finished_;
  std::vector<std::string> artifacts_;
};

}  // namespace dtcell::cli
