#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lorentzscope/decompose.hpp"
#include "lorentzscope/fit.hpp"

namespace lorentzscope::cli {

// key=value file with [section] headers. Keys are checked against the
// known set for each section; unknown ones are a parse error.
class ConfigFile {
 public:
  static ConfigFile load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::optional<double> number(const std::string& section, const std::string& key) const;
  std::optional<bool> flag(const std::string& section, const std::string& key) const;

 private:
  std::filesystem::path path_;
  std::map<std::string, std::map<std::string, std::string>> values_;
};

// "7200,3000,720" in seconds; each entry may carry an s, m or h suffix.
DecomposeScales parse_scales(const std::string& text);
Weighting parse_weighting(const std::string& text);
std::string_view to_string(Weighting weighting);

// Applies [fit] keys from the file on top of `config`.
void apply_fit_section(const ConfigFile& file, FitConfig& config);

}  // namespace lorentzscope::cli
