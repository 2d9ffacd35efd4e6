#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cli/manifest.hpp"

namespace lorentzscope::cli {

// Bad flag values or combinations; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void ensure_directory(const std::filesystem::path& dir);

// Writes `text` to `path` and records it as an output of `manifest`.
void emit(Manifest& manifest, const std::filesystem::path& path, const std::string& text);

// Comment placed in generated SVG files.
std::string provenance_comment(const Manifest& manifest);

// Fixed-format number for tables and reports.
std::string short_number(double v);

}  // namespace lorentzscope::cli
