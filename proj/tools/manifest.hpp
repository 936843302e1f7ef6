#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tagcli {

inline constexpr const char* kVersion = "tag 0.1.0";

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to a subcommand's outputs.
class Manifest {
 public:
  explicit Manifest(std::string subcommand);

  nlohmann::json& config() { return config_; }
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  /// Cubes and maps are a header/payload pair.
  void output_pair(const std::filesystem::path& base);

  const std::vector<std::filesystem::path>& outputs() const { return outputs_; }
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string subcommand_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tagcli
