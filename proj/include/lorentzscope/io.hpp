#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "lorentzscope/fit.hpp"
#include "lorentzscope/ingest.hpp"
#include "lorentzscope/lorentz.hpp"
#include "lorentzscope/stats.hpp"
#include "lorentzscope/synth.hpp"

namespace lorentzscope::io {

using Json = nlohmann::ordered_json;

// Shortest decimal text that round-trips to the same double.
std::string format_number(double v);

// {baseline, window: [lo, hi], states: [{t0, delta_tau, M}, ...]}
Json to_json(const MultiLevelModel& model);
MultiLevelModel model_from_json(const Json& j);

// Model fields plus rms_residual, iterations, converged, stop_reason and
// optional uncertainties. model_from_json accepts either layout.
Json to_json(const FitResult& result);
FitResult fit_result_from_json(const Json& j);

Json to_json(const StrengthFunctionReport& report);
Json to_json(const DistributionFit& fit);
Json to_json(const Histogram& histogram);

// Ensemble spec file used by `synth`. Optional "states" bypasses sampling.
struct SynthSpec {
  EnsembleSpec ensemble;
  SeriesOptions series;
  std::optional<MultiLevelModel> explicit_states;
};
SynthSpec synth_spec_from_json(const Json& j);
Json to_json(const EnsembleSpec& spec);

// Plain-text table in the column layout: channel, t0 (s), width (channels),
// width (s), M. The channel column is the channel containing t0.
std::string state_table(const MultiLevelModel& model, double channel_width);

// `time_s,value` CSV; time_s is the left edge of each channel.
void write_channel_csv(const std::filesystem::path& path, const ChannelSeries& series);
ChannelSeries read_channel_csv(const std::filesystem::path& path);
std::string channel_csv(const ChannelSeries& series);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lorentzscope::io
