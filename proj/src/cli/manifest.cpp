#include "cli/manifest.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <memory>

#include "lorentzscope/error.hpp"

namespace lorentzscope::cli {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("cannot initialise SHA-256");
    }
  }

  void update(const char* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw std::runtime_error("SHA-256 update failed");
  }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw std::runtime_error("SHA-256 final failed");
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string display_path(const std::filesystem::path& path, const std::filesystem::path& dir) {
  std::error_code ec;
  const auto rel = std::filesystem::relative(path, dir, ec);
  if (!ec && !rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return path.generic_string();
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read '{}'", path.string()));
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Manifest::Manifest(std::string command, std::vector<std::string> arguments)
    : command_(std::move(command)),
      arguments_(std::move(arguments)),
      started_(std::chrono::system_clock::now()) {}

void Manifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }

void Manifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void Manifest::set_config(io::Json config) { config_ = std::move(config); }

void Manifest::set(const std::string& key, io::Json value) { extra_[key] = std::move(value); }

std::filesystem::path Manifest::write(const std::filesystem::path& dir) const {
  io::Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["arguments"] = arguments_;
  io::Json inputs = io::Json::array();
  for (const auto& p : inputs_) {
    inputs.push_back(io::Json{{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  }
  j["inputs"] = std::move(inputs);
  if (!config_.is_null()) {
    j["config"] = config_;
    j["config_sha256"] = sha256_hex(config_.dump());
  }
  for (const auto& [key, value] : extra_.items()) j[key] = value;
  io::Json outputs = io::Json::array();
  for (const auto& p : outputs_) {
    outputs.push_back(io::Json{{"path", display_path(p, dir)}, {"sha256", sha256_file(p)}});
  }
  j["outputs"] = std::move(outputs);
  j["started_utc"] = utc_timestamp(started_);
  j["finished_utc"] = utc_timestamp(std::chrono::system_clock::now());
  const auto path = dir / file_name();
  io::write_text_file(path, j.dump(2) + "\n");
  return path;
}

}  // namespace lorentzscope::cli
