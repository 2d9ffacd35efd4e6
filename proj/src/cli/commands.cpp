#include "cli/commands.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cli/common.hpp"
#include "cli/config.hpp"
#include "cli/report.hpp"
#include "cli/svg.hpp"
#include "lorentzscope/decompose.hpp"
#include "lorentzscope/error.hpp"
#include "lorentzscope/fit.hpp"
#include "lorentzscope/io.hpp"
#include "lorentzscope/stats.hpp"
#include "lorentzscope/synth.hpp"
#include "text_util.hpp"

namespace lorentzscope::cli {

namespace fs = std::filesystem;
using io::Json;

void ensure_directory(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

void emit(Manifest& manifest, const fs::path& path, const std::string& text) {
  io::write_text_file(path, text);
  manifest.add_output(path);
}

std::string provenance_comment(const Manifest& manifest) {
  return fmt::format("{} {}; see {}", kToolName, kToolVersion, manifest.file_name());
}

std::string short_number(double v) { return fmt::format("{:.4g}", v); }

namespace {

constexpr const char* kLillieforsNote =
    "KS p-values are computed against parameters fitted to the same sample and are therefore optimistic";
constexpr const char* kPorterThomasNote =
    "the chi-squared law with nu = 2 is the exponential, sometimes called Porter-Thomas for a single channel; "
    "standard nuclear usage reserves that name for nu = 1";

std::vector<double> times_of(const ChannelSeries& s) {
  std::vector<double> t(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) t[k] = s.center(k);
  return t;
}

std::vector<double> scaled(std::vector<double> v, double factor) {
  for (auto& x : v) x *= factor;
  return v;
}

std::vector<double> to_vector(std::span<const double> v) { return {v.begin(), v.end()}; }

// Prefers a `time` column and falls back to `time_s`.
std::string detect_time_column(const fs::path& path) {
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) return "time";
  bool has_time_s = false;
  for (const auto& raw : detail::split(header, ',')) {
    const auto name = detail::trim(raw);
    if (name == "time") return "time";
    if (name == "time_s") has_time_s = true;
  }
  return has_time_s ? "time_s" : "time";
}

std::size_t default_jobs() {
  const char* env = std::getenv("LORENTZSCOPE_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  const auto v = detail::parse_double(env);
  if (!v || !(*v >= 1.0) || *v != std::floor(*v)) {
    throw UsageError(fmt::format("LORENTZSCOPE_JOBS must be a positive integer, got '{}'", env));
  }
  return static_cast<std::size_t>(*v);
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
  std::string input;
  std::string out_dir = ".";
  std::string scales;
  std::string mode;
  std::string config;
  std::string time_column;
  std::string value_column = "value";
};

int cmd_decompose(const DecomposeArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("decompose", argv);
  DecomposeOptions options;
  if (!a.config.empty()) {
    const auto file = ConfigFile::load(a.config);
    manifest.add_input(a.config);
    try {
      if (auto v = file.get("decompose", "scales")) options.scales = parse_scales(*v);
      if (auto v = file.get("decompose", "mode")) options.mode = parse_renorm_mode(*v);
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("config '{}': {}", a.config, e.what()));
    }
  }
  try {
    if (!a.scales.empty()) options.scales = parse_scales(a.scales);
    if (!a.mode.empty()) options.mode = parse_renorm_mode(a.mode);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  CsvSchema schema;
  schema.time_column = a.time_column.empty() ? detect_time_column(a.input) : a.time_column;
  schema.value_column = a.value_column;
  const auto loaded = load_csv(a.input, schema);
  manifest.add_input(a.input);

  const Decomposition d = decompose(loaded.series, options);
  const double error = d.reconstruction_error();

  const fs::path dir = a.out_dir;
  ensure_directory(dir);
  emit(manifest, dir / "gross.csv", io::channel_csv(d.gross));
  emit(manifest, dir / "intermediate1.csv", io::channel_csv(d.intermediate1));
  emit(manifest, dir / "intermediate2.csv", io::channel_csv(d.intermediate2));
  emit(manifest, dir / "fine.csv", io::channel_csv(d.fine));

  const auto hours = scaled(times_of(d.input), 1.0 / 3600.0);
  std::vector<Panel> panels(4);
  panels[0] = Panel{"Input and gross component", "time (h)", "level",
                    {Line{"input", hours, to_vector(d.input.values()), "#888888"},
                     Line{"gross", hours, to_vector(d.gross.values()), "#c0392b"}},
                    std::nullopt};
  panels[1] = Panel{"Intermediate-I", "time (h)", "points",
                    {Line{"", hours, to_vector(d.intermediate1.values())}}, std::nullopt};
  panels[2] = Panel{"Intermediate-II", "time (h)", "points",
                    {Line{"", hours, to_vector(d.intermediate2.values())}}, std::nullopt};
  panels[3] = Panel{"Fine structure", "time (h)", "points", {Line{"", hours, to_vector(d.fine.values())}},
                    std::nullopt};
  emit(manifest, dir / "components.svg", render_figure(panels, provenance_comment(manifest)));

  manifest.set_config(Json{{"scales",
                            Json{{"gross", d.scales.gross},
                                 {"intermediate1", d.scales.intermediate1},
                                 {"intermediate2", d.scales.intermediate2}}},
                           {"mode", std::string(to_string(d.mode))},
                           {"fine_interval", options.fine_interval},
                           {"gross_interval", options.gross_interval}});
  manifest.set("mode", std::string(to_string(d.mode)));
  manifest.set("unit_scale", d.unit_scale);
  manifest.set("reconstruction_error", error);
  manifest.set("load_report", loaded.report.summary());
  manifest.write(dir);

  out << fmt::format("reconstruction error: {:.3e} (mode {}, {} channels of {} s)\n", error, to_string(d.mode),
                     d.fine.size(), d.fine.channel_width());
  return kExitOk;
}

// ---------------------------------------------------------------------- fit

struct FitArgs {
  std::string input;
  std::string out;
  std::string out_dir;
  std::string config;
  std::string window;
  double tile = 0.0;
  double margin = 300.0;
  std::size_t jobs = 0;
  bool table = false;
  bool strict = false;

  double min_peak_height = 0.0;
  double min_width = 0.0;
  double max_width = 0.0;
  std::size_t max_states = 0;
  double residual_tol = 0.0;
  std::size_t max_iterations = 0;
  double seed_snap = 0.0;
  std::string weighting;
  double relative_floor = 0.0;
  double baseline_knots = 0.0;
  bool signed_amplitudes = false;
  bool point_samples = false;
};

struct FitFlags {
  CLI::Option* tile = nullptr;
  CLI::Option* margin = nullptr;
  CLI::Option* jobs = nullptr;
  CLI::Option* min_peak_height = nullptr;
  CLI::Option* min_width = nullptr;
  CLI::Option* max_width = nullptr;
  CLI::Option* max_states = nullptr;
  CLI::Option* residual_tol = nullptr;
  CLI::Option* max_iterations = nullptr;
  CLI::Option* seed_snap = nullptr;
  CLI::Option* relative_floor = nullptr;
  CLI::Option* baseline_knots = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

TimeWindow parse_window(const std::string& text) {
  const auto parts = detail::split(text, ':');
  const auto lo = parts.size() == 2 ? detail::parse_double(detail::trim(parts[0])) : std::nullopt;
  const auto hi = parts.size() == 2 ? detail::parse_double(detail::trim(parts[1])) : std::nullopt;
  if (!lo || !hi) throw UsageError(fmt::format("--window expects LO:HI in seconds, got '{}'", text));
  if (!(*hi > *lo)) throw UsageError(fmt::format("--window '{}' has zero or negative length", text));
  return TimeWindow{*lo, *hi};
}

// Channels lying entirely inside `window`.
ChannelSeries restrict_to(const ChannelSeries& s, const TimeWindow& window) {
  const double w = s.channel_width();
  const double eps = 1e-9;
  if (window.lo < s.origin() - eps * w || window.hi > s.end() + eps * w) {
    throw UsageError(fmt::format("window [{}, {}] lies outside the data [{}, {}]", window.lo, window.hi,
                                 s.origin(), s.end()));
  }
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((window.lo - s.origin()) / w - eps)));
  const auto last = static_cast<std::size_t>(std::max(0.0, std::floor((window.hi - s.origin()) / w + eps)));
  if (last <= first) throw UsageError("window holds no complete channel");
  return s.slice(first, std::min(last, s.size()) - first);
}

double baseline_at(const FitResult& r, double t) {
  const auto& k = r.baseline_knots;
  if (k.empty()) return r.model.baseline();
  if (t <= k.front().first) return k.front().second;
  if (t >= k.back().first) return k.back().second;
  const auto it = std::upper_bound(k.begin(), k.end(), t, [](double x, const auto& p) { return x < p.first; });
  const auto& [t1, v1] = *it;
  const auto& [t0, v0] = *(it - 1);
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

std::vector<double> model_curve(const FitResult& r, const ChannelSeries& s, bool channel_average) {
  std::vector<double> out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double lo = s.left_edge(k);
    const double hi = lo + s.channel_width();
    double v = baseline_at(r, s.center(k));
    for (const auto& st : r.model.states()) v += channel_average ? interval_mean(st, lo, hi) : eval(st, s.center(k));
    out[k] = v;
  }
  return out;
}

std::string fit_figure(const FitResult& r, const ChannelSeries& s, bool channel_average, const Manifest& manifest) {
  const auto t = times_of(s);
  const auto data = to_vector(s.values());
  const auto model = model_curve(r, s, channel_average);
  std::vector<double> resid(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) resid[k] = data[k] - model[k];
  Line centers{"state centers", {}, {}, "#c0392b"};
  centers.markers = true;
  for (const auto& st : r.model.states()) {
    centers.x.push_back(st.t0());
    centers.y.push_back(baseline_at(r, st.t0()) + st.amplitude());
  }
  std::vector<Panel> panels(2);
  panels[0] = Panel{fmt::format("Fit over [{}, {}] s: {} states", io::format_number(r.model.window().lo),
                                io::format_number(r.model.window().hi), r.model.size()),
                    "time (s)",
                    "value",
                    {Line{"data", t, data, "#888888"}, Line{"model", t, model, "#1f4e79"}, std::move(centers)},
                    std::nullopt};
  panels[1] = Panel{"Residual", "time (s)", "data - model", {Line{"", t, resid, "#555555"}}, std::nullopt};
  return render_figure(panels, provenance_comment(manifest));
}

Json config_json(const FitConfig& c, const FitArgs& a) {
  Json j{{"min_peak_height", c.min_peak_height},
         {"min_width", c.min_width},
         {"max_width", c.max_width},
         {"max_states", c.max_states},
         {"residual_tol", c.residual_tol ? Json(*c.residual_tol) : Json(nullptr)},
         {"max_iterations", c.max_iterations},
         {"seed_snap", c.seed_snap},
         {"positive_amplitudes", c.positive_amplitudes},
         {"channel_average", c.channel_average},
         {"weighting", std::string(to_string(c.weighting))},
         {"relative_floor", c.relative_floor},
         {"baseline_knot_spacing", c.baseline_knot_spacing}};
  if (a.tile > 0.0) {
    j["tile"] = a.tile;
    j["margin"] = a.margin;
  }
  if (!a.window.empty()) j["window"] = a.window;
  return j;
}

std::string fit_summary(const FitResult& r) {
  return fmt::format("[{}, {}] s: {} states, rms residual {}, {} ({})", io::format_number(r.model.window().lo),
                     io::format_number(r.model.window().hi), r.model.size(), short_number(r.rms_residual),
                     r.converged ? "converged" : "not converged", r.stop_reason);
}

int cmd_fit(FitArgs a, const FitFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  if (!a.out.empty() && !a.out_dir.empty()) throw UsageError("--out and --out-dir are mutually exclusive");
  Manifest manifest("fit", argv);

  FitConfig config;
  if (!a.config.empty()) {
    const auto file = ConfigFile::load(a.config);
    manifest.add_input(a.config);
    apply_fit_section(file, config);
    if (!given(flags.tile)) {
      if (auto v = file.number("fit", "tile")) a.tile = *v;
    }
    if (!given(flags.margin)) {
      if (auto v = file.number("fit", "margin")) a.margin = *v;
    }
    if (!given(flags.jobs)) {
      if (auto v = file.number("fit", "jobs")) {
        if (!(*v >= 1.0) || *v != std::floor(*v)) throw ParseError("config: [fit] jobs must be a positive integer");
        a.jobs = static_cast<std::size_t>(*v);
      }
    }
  }
  if (given(flags.min_peak_height)) config.min_peak_height = a.min_peak_height;
  if (given(flags.min_width)) config.min_width = a.min_width;
  if (given(flags.max_width)) config.max_width = a.max_width;
  if (given(flags.max_states)) config.max_states = a.max_states;
  if (given(flags.residual_tol)) config.residual_tol = a.residual_tol;
  if (given(flags.max_iterations)) config.max_iterations = a.max_iterations;
  if (given(flags.seed_snap)) config.seed_snap = a.seed_snap;
  if (given(flags.relative_floor)) config.relative_floor = a.relative_floor;
  if (given(flags.baseline_knots)) config.baseline_knot_spacing = a.baseline_knots;
  if (a.signed_amplitudes) config.positive_amplitudes = false;
  if (a.point_samples) config.channel_average = false;
  if (!a.weighting.empty()) {
    try {
      config.weighting = parse_weighting(a.weighting);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (a.jobs == 0) a.jobs = default_jobs();
  if (a.tile < 0.0 || (given(flags.tile) && a.tile == 0.0)) throw UsageError("--tile must be positive");
  if (a.margin < 0.0) throw UsageError("--margin must be >= 0");

  std::optional<TimeWindow> window;
  if (!a.window.empty()) window = parse_window(a.window);

  ChannelSeries series = io::read_channel_csv(a.input);
  manifest.add_input(a.input);
  if (window) series = restrict_to(series, *window);

  fs::path dir = a.out_dir.empty() ? fs::path(".") : fs::path(a.out_dir);
  fs::path single = "fit.json";
  if (!a.out.empty()) {
    dir = fs::path(a.out).parent_path();
    if (dir.empty()) dir = ".";
    single = fs::path(a.out).filename();
  }
  ensure_directory(dir);
  manifest.set_config(config_json(config, a));

  std::vector<FitResult> results;
  std::vector<ChannelSeries> spans;
  std::vector<fs::path> names;
  if (a.tile > 0.0) {
    const auto tiles = fit_tiles(series, config, TileOptions{a.tile, a.margin, a.jobs});
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      results.push_back(tiles[i].result);
      spans.push_back(restrict_to(series, tiles[i].window));
      names.emplace_back(fmt::format("fit-{:03d}.json", i));
    }
  } else {
    results.push_back(fit_component(series, config));
    spans.push_back(series);
    names.push_back(single);
  }

  bool all_converged = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Json j = io::to_json(results[i]);
    j["manifest"] = manifest.file_name();
    emit(manifest, dir / names[i], j.dump(2) + "\n");
    auto svg = names[i];
    svg.replace_extension(".svg");
    emit(manifest, dir / svg, fit_figure(results[i], spans[i], config.channel_average, manifest));
    all_converged = all_converged && results[i].converged;
  }
  Json summary = Json::array();
  for (const auto& r : results) {
    summary.push_back(Json{{"window", Json::array({r.model.window().lo, r.model.window().hi})},
                           {"states", r.model.size()},
                           {"converged", r.converged},
                           {"stop_reason", r.stop_reason}});
  }
  manifest.set("fits", std::move(summary));
  manifest.set("jobs", a.jobs);
  manifest.write(dir);

  for (const auto& r : results) {
    if (a.table) {
      if (results.size() > 1) {
        out << fmt::format("# window {} {}\n", io::format_number(r.model.window().lo),
                           io::format_number(r.model.window().hi));
      }
      out << io::state_table(r.model, series.channel_width());
    } else {
      out << fit_summary(r) << "\n";
    }
  }
  if (a.strict && !all_converged) {
    err << "lorentzscope fit: fitter did not converge (--strict)\n";
    return kExitPrecondition;
  }
  return kExitOk;
}

// -------------------------------------------------------------------- stats

struct StatsArgs {
  std::vector<std::string> inputs;
  std::string family;
  std::string width_family;
  std::string config;
  std::string out_dir = ".";
};

struct EnsembleOutput {
  Json json;
  std::optional<Histogram> histogram;
  std::optional<DistributionFit> fit;
};

EnsembleOutput describe(const EnsembleSample& sample, Family family) {
  EnsembleOutput o;
  o.json = Json{{"n", sample.size()}, {"mean_s", sample.mean()}, {"raw_s", to_vector(sample.raw())}};
  try {
    o.fit = fit_distribution(sample, family);
    o.json["fit"] = io::to_json(*o.fit);
  } catch (const PreconditionError& e) {
    o.json["fit"] = nullptr;
    o.json["fit_note"] = e.what();
  } catch (const InvalidArgument& e) {
    o.json["fit"] = nullptr;
    o.json["fit_note"] = e.what();
  }
  if (sample.size() >= 2) {
    o.histogram = freedman_diaconis(sample.normalized());
    o.json["histogram"] = io::to_json(*o.histogram);
  } else {
    o.json["histogram"] = nullptr;
  }
  return o;
}

std::string histogram_csv(const std::optional<Histogram>& h) {
  std::string out = "lo,hi,count,density\n";
  if (!h) return out;
  for (std::size_t i = 0; i < h->counts.size(); ++i) {
    out += fmt::format("{},{},{},{}\n", io::format_number(h->edges[i]), io::format_number(h->edges[i + 1]),
                       h->counts[i], io::format_number(h->density[i]));
  }
  return out;
}

std::string distribution_figure(const EnsembleOutput& o, const std::string& title, const std::string& x_label,
                                 const Manifest& manifest) {
  Panel panel{title, x_label, "density", {}, o.histogram};
  if (o.fit) {
    const double top = o.histogram ? std::max(3.0, o.histogram->edges.back()) : 3.0;
    Line line{fmt::format("{} fit", to_string(o.fit->family)), {}, {}, "#c0392b"};
    for (int i = 0; i <= 300; ++i) {
      const double x = top * i / 300.0;
      const double y = o.fit->pdf(x);
      line.x.push_back(x);
      line.y.push_back(std::isfinite(y) ? y : std::nan(""));
    }
    panel.lines.push_back(std::move(line));
  }
  const std::vector<Panel> panels{panel};
  return render_figure(panels, provenance_comment(manifest), 640.0, 320.0);
}

Family parse_family_flag(const std::string& text) {
  try {
    return parse_family(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

int cmd_stats(const StatsArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("stats", argv);
  std::string family = "wigner";
  std::string width_family = "chisq";
  if (!a.config.empty()) {
    const auto file = ConfigFile::load(a.config);
    manifest.add_input(a.config);
    if (auto v = file.get("stats", "family")) family = *v;
    if (auto v = file.get("stats", "width_family")) width_family = *v;
  }
  if (!a.family.empty()) family = a.family;
  if (!a.width_family.empty()) width_family = a.width_family;
  const Family spacing_family = parse_family_flag(family);
  const Family widths_family = parse_family_flag(width_family);

  std::vector<MultiLevelModel> models;
  for (const auto& path : a.inputs) {
    models.push_back(io::model_from_json(io::read_json_file(path)));
    manifest.add_input(path);
  }
  std::size_t total = 0;
  for (const auto& m : models) total += m.size();
  if (total < 2) throw PreconditionError(fmt::format("need at least 2 states across all inputs, found {}", total));

  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return models[x].window().lo < models[y].window().lo; });
  std::vector<MultiLevelModel> sorted;
  for (auto i : order) sorted.push_back(models[i]);

  const auto report = pooled_strength_function(sorted);
  const auto spacing_out = describe(pooled_spacings(sorted), spacing_family);
  const auto width_out = describe(pooled_widths(sorted), widths_family);

  Json j;
  j["manifest"] = manifest.file_name();
  Json inputs = Json::array();
  for (auto i : order) inputs.push_back(fs::path(a.inputs[i]).generic_string());
  j["inputs"] = std::move(inputs);
  j["strength_function"] = io::to_json(report);
  j["spacings"] = spacing_out.json;
  j["widths"] = width_out.json;
  if (sorted.size() >= 2) {
    const auto rr = rolling_ratio(sorted);
    Json reports = Json::array();
    for (const auto& r : rr.reports) reports.push_back(io::to_json(r));
    j["rolling_ratio"] = Json{{"reports", std::move(reports)},
                              {"skipped", rr.skipped},
                              {"coefficient_of_variation", rr.coefficient_of_variation}};
  }
  j["ks_note"] = kLillieforsNote;
  if (spacing_family == Family::kChiSquared || widths_family == Family::kChiSquared) j["naming_note"] = kPorterThomasNote;
  Json averages = Json::array();
  for (const auto& m : sorted) {
    const auto wa = window_average(m);
    averages.push_back(Json{{"window", Json::array({m.window().lo, m.window().hi})},
                            {"grid_mean", wa.grid_mean},
                            {"analytic_estimate", wa.analytic_estimate ? Json(*wa.analytic_estimate) : Json()}});
  }
  j["window_average"] = std::move(averages);

  const fs::path dir = a.out_dir;
  ensure_directory(dir);
  emit(manifest, dir / "stats.json", j.dump(2) + "\n");
  emit(manifest, dir / "spacing_hist.csv", histogram_csv(spacing_out.histogram));
  emit(manifest, dir / "width_hist.csv", histogram_csv(width_out.histogram));
  emit(manifest, dir / "spacings.svg",
       distribution_figure(spacing_out, "Spacing distribution", "spacing / mean spacing", manifest));
  emit(manifest, dir / "widths.svg", distribution_figure(width_out, "Width distribution", "width / mean width", manifest));
  manifest.set_config(Json{{"family", family}, {"width_family", width_family}});
  manifest.write(dir);

  out << fmt::format("states {}  mean spacing {} s  mean width {} s  ratio {}  ericson_regime {}\n", report.state_count,
                     short_number(report.mean_spacing), short_number(report.mean_width), short_number(report.ratio),
                     report.ericson_regime ? "true" : "false");
  if (j.contains("rolling_ratio")) {
    out << fmt::format("rolling ratio coefficient of variation {}\n",
                       short_number(j["rolling_ratio"]["coefficient_of_variation"].get<double>()));
  }
  return kExitOk;
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec;
  std::string out_dir = ".";
};

std::string series_figure(const ChannelSeries& s, const std::string& title, const Manifest& manifest) {
  const std::vector<Panel> panels{
      Panel{title, "time (s)", "value", {Line{"", times_of(s), to_vector(s.values())}}, std::nullopt}};
  return render_figure(panels, provenance_comment(manifest));
}

int synth_day(const Json& spec, Manifest& manifest, const fs::path& dir, std::ostream& out) {
  DaySpec day;
  try {
    day = DaySpec::djia_like(spec.value("seed", std::uint64_t{1}));
    day.noise = spec.value("noise", day.noise);
    day.noise_seed = spec.value("noise_seed", day.noise_seed);
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("malformed day spec: {}", e.what()));
  }
  if (day.noise < 0.0) throw ParseError("noise must be >= 0");
  SyntheticDay built = [&] {
    try {
      return build_day(day);
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("invalid day spec: {}", e.what()));
    }
  }();
  const ChannelSeries series(built.series.interval(), built.series.t_start(), to_vector(built.series.values()));
  emit(manifest, dir / "series.csv", io::channel_csv(series));
  emit(manifest, dir / "gross.csv", io::channel_csv(built.gross));
  emit(manifest, dir / "truth_intermediate1.json", io::to_json(built.intermediate1).dump(2) + "\n");
  emit(manifest, dir / "truth_intermediate2.json", io::to_json(built.intermediate2).dump(2) + "\n");
  emit(manifest, dir / "truth_fine.json", io::to_json(built.fine).dump(2) + "\n");
  emit(manifest, dir / "series.svg", series_figure(series, "Synthetic session", manifest));
  manifest.set("seed", day.fine.seed);
  manifest.set("noise_seed", day.noise_seed);
  manifest.set("state_counts", Json{{"intermediate1", built.intermediate1.size()},
                                    {"intermediate2", built.intermediate2.size()},
                                    {"fine", built.fine.size()}});
  out << fmt::format("synthetic day: {} samples, {} / {} / {} states\n", series.size(), built.intermediate1.size(),
                     built.intermediate2.size(), built.fine.size());
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("synth", argv);
  const Json spec = io::read_json_file(a.spec);
  manifest.add_input(a.spec);
  manifest.set_config(spec);
  manifest.set("rng", std::string(SeededRandom::kAlgorithm));
  const fs::path dir = a.out_dir;

  if (spec.is_object() && spec.value("kind", std::string("ensemble")) == "day") {
    ensure_directory(dir);
    const int rc = synth_day(spec, manifest, dir, out);
    manifest.write(dir);
    return rc;
  }

  const auto parsed = io::synth_spec_from_json(spec);
  SyntheticSeries syn = [&] {
    try {
      return parsed.explicit_states ? render_series(*parsed.explicit_states, parsed.series)
                                    : build_series(parsed.ensemble, parsed.series);
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("invalid synth spec: {}", e.what()));
    }
  }();
  ensure_directory(dir);
  emit(manifest, dir / "series.csv", io::channel_csv(syn.series));
  emit(manifest, dir / "truth.json", io::to_json(syn.truth).dump(2) + "\n");
  emit(manifest, dir / "series.svg", series_figure(syn.series, "Synthetic series", manifest));
  manifest.set("seed", parsed.ensemble.seed);
  manifest.set("noise_seed", parsed.series.noise_seed);
  manifest.set("state_count", syn.truth.size());
  manifest.write(dir);
  out << fmt::format("synthetic series: {} channels, {} states\n", syn.series.size(), syn.truth.size());
  return kExitOk;
}

std::vector<std::string> argument_list(int argc, const char* const* argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) out.emplace_back(argv[i]);
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lorentzian fine-structure analysis of intraday index series", "lorentzscope"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  DecomposeArgs da;
  auto* dec = app.add_subcommand("decompose", "Split a price series into gross, intermediate and fine components");
  dec->add_option("input", da.input, "Input CSV (time or time_s column, value column)")->required();
  dec->add_option("--out-dir", da.out_dir, "Directory for component files");
  dec->add_option("--scales", da.scales, "Smoothing windows GROSS,I1,I2 (s, m or h suffix)");
  dec->add_option("--mode", da.mode, "subtract or divide");
  dec->add_option("--config", da.config, "Config file");
  dec->add_option("--time-column", da.time_column, "Name of the time column");
  dec->add_option("--value-column", da.value_column, "Name of the value column");

  FitArgs fa;
  FitFlags ff;
  auto* fit = app.add_subcommand("fit", "Fit Lorentzian states to a component series");
  fit->add_option("input", fa.input, "Component CSV (time_s,value)")->required();
  fit->add_option("--out", fa.out, "Output JSON file");
  fit->add_option("--out-dir", fa.out_dir, "Output directory");
  fit->add_option("--config", fa.config, "Config file");
  fit->add_option("--window", fa.window, "Fit window LO:HI in seconds");
  ff.tile = fit->add_option("--tile", fa.tile, "Fit consecutive windows of this many seconds");
  ff.margin = fit->add_option("--margin", fa.margin, "Context added on both sides of each tile (s)");
  ff.jobs = fit->add_option("--jobs", fa.jobs, "Concurrent tiles (default LORENTZSCOPE_JOBS or 1)")
                ->check(CLI::PositiveNumber);
  fit->add_flag("--table", fa.table, "Print the state table");
  fit->add_flag("--strict", fa.strict, "Exit 3 when the fit did not converge");
  ff.min_peak_height = fit->add_option("--min-peak-height", fa.min_peak_height);
  ff.min_width = fit->add_option("--min-width", fa.min_width, "Seconds");
  ff.max_width = fit->add_option("--max-width", fa.max_width, "Seconds");
  ff.max_states = fit->add_option("--max-states", fa.max_states);
  ff.residual_tol = fit->add_option("--residual-tol", fa.residual_tol, "Absolute RMS residual target");
  ff.max_iterations = fit->add_option("--max-iterations", fa.max_iterations);
  ff.seed_snap = fit->add_option("--seed-snap", fa.seed_snap, "Snap seed centers to this grid (s)");
  fit->add_option("--weighting", fa.weighting, "auto, uniform or relative");
  ff.relative_floor = fit->add_option("--relative-floor", fa.relative_floor);
  ff.baseline_knots = fit->add_option("--baseline-knots", fa.baseline_knots, "Piecewise-linear baseline knot spacing (s)");
  fit->add_flag("--signed", fa.signed_amplitudes, "Allow negative amplitudes");
  fit->add_flag("--point-samples", fa.point_samples, "Model channels by their center value");

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Spacing and width statistics of fitted models");
  stats->add_option("models", sa.inputs, "Model or fit JSON files")->required();
  stats->add_option("--family", sa.family, "Spacing family: wigner, weibull or chisq");
  stats->add_option("--width-family", sa.width_family, "Width family: wigner, weibull or chisq");
  stats->add_option("--config", sa.config, "Config file");
  stats->add_option("--out-dir,--out", sa.out_dir, "Output directory");

  SynthArgs ya;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic series with known states");
  synth->add_option("--spec", ya.spec, "Spec JSON")->required();
  synth->add_option("--out-dir", ya.out_dir, "Output directory");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Collect a run directory into one document");
  report->add_option("run_dir", ra.run_dir, "Directory with manifests")->required();
  report->add_flag("--html", ra.html, "HTML instead of Markdown");
  report->add_option("--out", ra.out, "Output file (default RUN_DIR/report.md or report.html)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const auto args = argument_list(argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "decompose") {
      try {
        return cmd_decompose(da, args, out);
      } catch (const InvalidArgument& e) {
        throw PreconditionError(e.what());
      }
    }
    if (name == "fit") return cmd_fit(fa, ff, args, out, err);
    if (name == "stats") return cmd_stats(sa, args, out);
    if (name == "synth") return cmd_synth(ya, args, out);
    return cmd_report(ra, args, out, err);
  } catch (const UsageError& e) {
    err << "lorentzscope " << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "lorentzscope " << name << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const PreconditionError& e) {
    err << "lorentzscope " << name << ": " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const InvalidArgument& e) {
    err << "lorentzscope " << name << ": " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const fs::filesystem_error& e) {
    err << "lorentzscope " << name << ": " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace lorentzscope::cli
