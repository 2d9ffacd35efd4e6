#include "lorentzscope/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lorentzscope/error.hpp"
#include "text_util.hpp"

namespace lorentzscope::io {

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buf, ptr);
}

Json to_json(const MultiLevelModel& model) {
  Json states = Json::array();
  for (const auto& s : model.states()) {
    states.push_back(Json{{"t0", s.t0()}, {"delta_tau", s.delta_tau()}, {"M", s.amplitude()}});
  }
  return Json{{"baseline", model.baseline()},
              {"window", Json::array({model.window().lo, model.window().hi})},
              {"states", std::move(states)}};
}

MultiLevelModel model_from_json(const Json& raw) {
  try {
    const Json& j = raw.contains("model") ? raw.at("model") : raw;
    std::vector<LorentzianState> states;
    for (const auto& s : j.at("states")) {
      states.emplace_back(s.at("t0").get<double>(), s.at("delta_tau").get<double>(),
                          s.at("M").get<double>());
    }
    const auto& w = j.at("window");
    if (!w.is_array() || w.size() != 2) throw ParseError("model window must be [lo, hi]");
    return MultiLevelModel(j.value("baseline", 0.0), std::move(states),
                           TimeWindow{w[0].get<double>(), w[1].get<double>()});
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("malformed model JSON: {}", e.what()));
  } catch (const InvalidArgument& e) {
    throw ParseError(fmt::format("invalid model JSON: {}", e.what()));
  }
}

Json to_json(const FitResult& result) {
  Json j;
  j["model"] = to_json(result.model);
  j["rms_residual"] = result.rms_residual;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["stop_reason"] = result.stop_reason;
  if (!result.baseline_knots.empty()) {
    Json knots = Json::array();
    for (const auto& [t, v] : result.baseline_knots) knots.push_back(Json::array({t, v}));
    j["baseline_knots"] = std::move(knots);
  }
  if (result.uncertainties) {
    Json u = Json::array();
    for (const auto& s : *result.uncertainties) {
      u.push_back(Json{{"t0", s.t0}, {"delta_tau", s.delta_tau}, {"M", s.amplitude}});
    }
    j["uncertainties"] = std::move(u);
  }
  return j;
}

FitResult fit_result_from_json(const Json& j) {
  FitResult r;
  r.model = model_from_json(j);
  try {
    r.rms_residual = j.value("rms_residual", 0.0);
    r.iterations = j.value("iterations", std::size_t{0});
    r.converged = j.value("converged", false);
    r.stop_reason = j.value("stop_reason", std::string{});
    if (j.contains("baseline_knots")) {
      for (const auto& k : j.at("baseline_knots")) r.baseline_knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    }
    if (j.contains("uncertainties")) {
      std::vector<StateUncertainty> u;
      for (const auto& s : j.at("uncertainties")) {
        u.push_back({s.at("t0").get<double>(), s.at("delta_tau").get<double>(), s.at("M").get<double>()});
      }
      r.uncertainties = std::move(u);
    }
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("malformed fit result JSON: {}", e.what()));
  }
  return r;
}

Json to_json(const StrengthFunctionReport& r) {
  return Json{{"mean_width", r.mean_width},
              {"mean_spacing", r.mean_spacing},
              {"ratio", r.ratio},
              {"ericson_regime", r.ericson_regime},
              {"window", Json::array({r.window.lo, r.window.hi})},
              {"state_count", r.state_count}};
}

Json to_json(const DistributionFit& fit) {
  Json params = Json::object();
  switch (fit.family) {
    case Family::kWigner:
      break;
    case Family::kWeibull:
      params["b"] = fit.params.at(0);
      params["c"] = fit.params.at(1);
      break;
    case Family::kChiSquared:
      params["nu"] = fit.params.at(0);
      params["mean_x"] = fit.params.at(1);
      break;
  }
  return Json{{"family", std::string(to_string(fit.family))},
              {"params", std::move(params)},
              {"ks_statistic", fit.ks_statistic},
              {"ks_pvalue", fit.ks_pvalue},
              {"n", fit.n}};
}

Json to_json(const Histogram& h) {
  return Json{{"edges", h.edges}, {"counts", h.counts}, {"density", h.density}};
}

Json to_json(const EnsembleSpec& spec) {
  Json j{{"mean_spacing", spec.mean_spacing},
         {"spacing_family", spec.spacing_law == SpacingLaw::kWigner ? "wigner" : "fixed"},
         {"mean_width", spec.mean_width},
         {"width_family", spec.width_law.kind == WidthLaw::Kind::kFixed ? "fixed" : "chisq"}};
  if (spec.width_law.kind == WidthLaw::Kind::kChiSquared) j["nu"] = spec.width_law.nu;
  j["amplitude"] = Json{{"mean", spec.amplitude.mean}, {"dispersion", spec.amplitude.dispersion}};
  j["window"] = Json::array({spec.window.lo, spec.window.hi});
  j["seed"] = spec.seed;
  return j;
}

SynthSpec synth_spec_from_json(const Json& j) {
  SynthSpec out;
  try {
    auto& e = out.ensemble;
    e.mean_spacing = j.value("mean_spacing", e.mean_spacing);
    const std::string spacing = j.value("spacing_family", std::string("wigner"));
    if (spacing == "wigner") {
      e.spacing_law = SpacingLaw::kWigner;
    } else if (spacing == "fixed") {
      e.spacing_law = SpacingLaw::kFixed;
    } else {
      throw ParseError(fmt::format("unknown spacing_family '{}'", spacing));
    }
    e.mean_width = j.value("mean_width", e.mean_width);
    const std::string width = j.value("width_family", std::string("fixed"));
    if (width == "fixed") {
      e.width_law.kind = WidthLaw::Kind::kFixed;
    } else if (width == "chisq") {
      e.width_law.kind = WidthLaw::Kind::kChiSquared;
      e.width_law.nu = j.value("nu", 2.0);
    } else {
      throw ParseError(fmt::format("unknown width_family '{}'", width));
    }
    if (j.contains("amplitude")) {
      e.amplitude.mean = j["amplitude"].value("mean", e.amplitude.mean);
      e.amplitude.dispersion = j["amplitude"].value("dispersion", e.amplitude.dispersion);
    }
    if (j.contains("window")) {
      const auto& w = j.at("window");
      if (!w.is_array() || w.size() != 2) throw ParseError("spec window must be [lo, hi]");
      e.window = TimeWindow{w[0].get<double>(), w[1].get<double>()};
    }
    e.seed = j.value("seed", e.seed);
    e.validate();

    auto& s = out.series;
    s.baseline = j.value("baseline", 0.0);
    s.channel_width = j.value("channel_width", s.channel_width);
    s.noise = j.value("noise", s.noise);
    s.noise_seed = j.value("noise_seed", e.seed + 1);
    const std::string comp = j.value("composition", std::string("additive"));
    if (comp == "additive") {
      s.composition = Composition::kAdditive;
    } else if (comp == "multiplicative") {
      s.composition = Composition::kMultiplicative;
    } else {
      throw ParseError(fmt::format("unknown composition '{}'", comp));
    }
    if (!(s.channel_width > 0.0)) throw ParseError("channel_width must be positive");
    if (s.noise < 0.0) throw ParseError("noise must be >= 0");

    if (j.contains("states")) {
      Json m{{"baseline", 0.0},
             {"window", Json::array({e.window.lo, e.window.hi})},
             {"states", j.at("states")}};
      out.explicit_states = model_from_json(m);
    }
  } catch (const Json::exception& ex) {
    throw ParseError(fmt::format("malformed synth spec: {}", ex.what()));
  } catch (const InvalidArgument& ex) {
    throw ParseError(fmt::format("invalid synth spec: {}", ex.what()));
  }
  return out;
}

std::string state_table(const MultiLevelModel& model, double channel_width) {
  std::string out = fmt::format("{:>8} {:>12} {:>10} {:>10} {:>12}\n", "channel", "t0_s",
                                "width_ch", "width_s", "M");
  const double origin = model.window().lo;
  for (const auto& s : model.states()) {
    const double rel = std::max(s.t0() - origin, 0.0);
    out += fmt::format("{:>8} {:>12.4f} {:>10.4f} {:>10.4f} {:>12.6f}\n",
                       channel_of(rel, channel_width), s.t0(), s.delta_tau() / channel_width,
                       s.delta_tau(), s.amplitude());
  }
  return out;
}

std::string channel_csv(const ChannelSeries& series) {
  std::string out = "time_s,value\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    out += format_number(series.left_edge(k));
    out += ',';
    out += format_number(series.values()[k]);
    out += '\n';
  }
  return out;
}

void write_channel_csv(const std::filesystem::path& path, const ChannelSeries& series) {
  write_text_file(path, channel_csv(series));
}

ChannelSeries read_channel_csv(const std::filesystem::path& path) {
  const LoadedSeries loaded = load_csv(path, CsvSchema{"time_s", "value"});
  if (loaded.report.gaps_filled > 0) {
    throw ParseError(fmt::format("'{}': component file has missing channels", path.string()));
  }
  const auto v = loaded.series.values();
  return ChannelSeries(loaded.report.interval, loaded.report.clock_offset,
                       std::vector<double>(v.begin(), v.end()));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot read input file '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw ParseError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace lorentzscope::io
