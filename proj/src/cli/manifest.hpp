#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lorentzscope/io.hpp"

namespace lorentzscope::cli {

inline constexpr std::string_view kToolName = "lorentzscope";
inline constexpr std::string_view kToolVersion = LORENTZSCOPE_VERSION;

// Lowercase hex SHA-256 of a byte string or of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Provenance record written next to a command's outputs. Outputs are
// digested when the manifest is written, so add them after they exist.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> arguments);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  // Effective configuration; its canonical JSON text is digested.
  void set_config(io::Json config);
  void set(const std::string& key, io::Json value);

  const std::vector<std::filesystem::path>& outputs() const { return outputs_; }

  // Writes <dir>/<command>.manifest.json and returns its path.
  std::filesystem::path write(const std::filesystem::path& dir) const;
  std::string file_name() const { return command_ + ".manifest.json"; }

 private:
  std::string command_;
  std::vector<std::string> arguments_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  io::Json config_;
  io::Json extra_ = io::Json::object();
  std::chrono::system_clock::time_point started_;
};

std::string utc_timestamp(std::chrono::system_clock::time_point t);

}  // namespace lorentzscope::cli
