#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "tag/error.hpp"

namespace tagcli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tag::io_error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw tag::io_error("SHA-256 unavailable");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Manifest::Manifest(std::string subcommand)
    : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {}

void Manifest::input(const fs::path& path) { inputs_.push_back(path); }
void Manifest::output(const fs::path& path) { outputs_.push_back(path); }

void Manifest::output_pair(const fs::path& base) {
  fs::path header = base, payload = base;
  header += ".json";
  payload += ".bin";
  outputs_.push_back(header);
  outputs_.push_back(payload);
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand_;
  j["tool_version"] = kVersion;
  j["config"] = config_;
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs_) j["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs_) j["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return j;
}

void Manifest::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw tag::io_error("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

}  // namespace tagcli
