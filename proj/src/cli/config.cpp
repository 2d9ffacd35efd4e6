#include "cli/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <set>

#include "lorentzscope/error.hpp"
#include "text_util.hpp"

namespace lorentzscope::cli {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"decompose", {"scales", "mode"}},
      {"fit",
       {"min_peak_height", "min_width", "max_width", "max_states", "residual_tol", "max_iterations", "seed_snap",
        "positive_amplitudes", "channel_average", "weighting", "relative_floor", "baseline_knot_spacing", "tile",
        "margin", "jobs"}},
      {"stats", {"family", "width_family"}},
  };
  return keys;
}

}  // namespace

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ParseError(fmt::format("config file '{}' not found", path.string()));
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(fmt::format("config '{}' line {}: {}", path.string(), e.line(), e.message()));
  }
  ConfigFile out;
  out.path_ = path;
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (body.empty() || known == known_keys().end()) {
      throw ParseError(fmt::format("config '{}': unknown section or top-level key '{}'", path.string(), section));
    }
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) {
        throw ParseError(fmt::format("config '{}': unknown key '{}' in [{}]", path.string(), key, section));
      }
      out.values_[section][key] = detail::trim(value.data());
    }
  }
  return out;
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::optional<double> ConfigFile::number(const std::string& section, const std::string& key) const {
  const auto raw = get(section, key);
  if (!raw) return std::nullopt;
  const auto v = detail::parse_double(*raw);
  if (!v) throw ParseError(fmt::format("config '{}': [{}] {} = '{}' is not a number", path_.string(), section, key, *raw));
  return v;
}

std::optional<bool> ConfigFile::flag(const std::string& section, const std::string& key) const {
  const auto raw = get(section, key);
  if (!raw) return std::nullopt;
  if (*raw == "true" || *raw == "yes" || *raw == "1") return true;
  if (*raw == "false" || *raw == "no" || *raw == "0") return false;
  throw ParseError(fmt::format("config '{}': [{}] {} = '{}' is not a boolean", path_.string(), section, key, *raw));
}

DecomposeScales parse_scales(const std::string& text) {
  const auto parts = detail::split(text, ',');
  if (parts.size() != 3) {
    throw InvalidArgument(fmt::format("scales need three comma-separated values, got '{}'", text));
  }
  double v[3];
  for (std::size_t i = 0; i < 3; ++i) {
    std::string p = detail::trim(parts[i]);
    double unit = 1.0;
    if (!p.empty() && (p.back() == 's' || p.back() == 'm' || p.back() == 'h')) {
      unit = p.back() == 'h' ? 3600.0 : p.back() == 'm' ? 60.0 : 1.0;
      p.pop_back();
    }
    const auto x = detail::parse_double(p);
    if (!x || !(*x > 0.0)) throw InvalidArgument(fmt::format("bad scale '{}' in '{}'", parts[i], text));
    v[i] = *x * unit;
  }
  return DecomposeScales{v[0], v[1], v[2]};
}

Weighting parse_weighting(const std::string& text) {
  if (text == "auto") return Weighting::kAuto;
  if (text == "uniform") return Weighting::kUniform;
  if (text == "relative") return Weighting::kRelative;
  throw InvalidArgument(fmt::format("unknown weighting '{}' (auto, uniform, relative)", text));
}

std::string_view to_string(Weighting weighting) {
  switch (weighting) {
    case Weighting::kAuto: return "auto";
    case Weighting::kUniform: return "uniform";
    case Weighting::kRelative: return "relative";
  }
  return "auto";
}

void apply_fit_section(const ConfigFile& file, FitConfig& c) {
  if (auto v = file.number("fit", "min_peak_height")) c.min_peak_height = *v;
  if (auto v = file.number("fit", "min_width")) c.min_width = *v;
  if (auto v = file.number("fit", "max_width")) c.max_width = *v;
  auto count = [&](const char* key) -> std::optional<std::size_t> {
    const auto v = file.number("fit", key);
    if (!v) return std::nullopt;
    if (!(*v >= 0.0 && *v == std::floor(*v) && *v < 1e15)) {
      throw ParseError(fmt::format("config: [fit] {} must be a non-negative integer", key));
    }
    return static_cast<std::size_t>(*v);
  };
  if (auto v = count("max_states")) c.max_states = *v;
  if (auto v = file.number("fit", "residual_tol")) c.residual_tol = *v;
  if (auto v = count("max_iterations")) c.max_iterations = *v;
  if (auto v = file.number("fit", "seed_snap")) c.seed_snap = *v;
  if (auto v = file.flag("fit", "positive_amplitudes")) c.positive_amplitudes = *v;
  if (auto v = file.flag("fit", "channel_average")) c.channel_average = *v;
  if (auto v = file.get("fit", "weighting")) {
    try {
      c.weighting = parse_weighting(*v);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what());
    }
  }
  if (auto v = file.number("fit", "relative_floor")) c.relative_floor = *v;
  if (auto v = file.number("fit", "baseline_knot_spacing")) c.baseline_knot_spacing = *v;
}

}  // namespace lorentzscope::cli
