#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lorentzscope/ingest.hpp"
#include "lorentzscope/lorentz.hpp"

namespace lorentzscope {

// Default residual target as a fraction of the component RMS.
inline constexpr double kDefaultResidualFraction = 0.005;

enum class Weighting { kAuto, kUniform, kRelative };

struct FitConfig {
  double min_peak_height = 1.0;
  double min_width = 15.0;
  double max_width = 300.0;
  std::size_t max_states = 128;
  // RMS residual target. Unset means kDefaultResidualFraction of the
  // component RMS.
  std::optional<double> residual_tol;
  // Total damped least-squares iterations across all refinement passes.
  std::size_t max_iterations = 20000;
  // Grid (seconds) that seed centers are snapped to; 0 keeps channel centers.
  double seed_snap = 0.0;
  bool positive_amplitudes = true;
  // Model each channel as the exact mean of the states over the channel
  // rather than their value at the channel center.
  bool channel_average = true;
  // kRelative weights channel k by 1 / (|v_k| + relative_floor * max|v|)^2,
  // the least-squares weight for noise whose scale tracks the level.
  // kAuto picks kRelative for strictly positive series, kUniform otherwise.
  Weighting weighting = Weighting::kAuto;
  double relative_floor = 0.05;
  // Knot spacing (seconds) of a piecewise-linear baseline; 0 fits a constant.
  double baseline_knot_spacing = 0.0;

  void validate() const;
};

// Partial derivatives of a state's value with respect to its parameters.
struct StateGradient {
  double d_amplitude = 0.0;
  double d_t0 = 0.0;
  double d_width = 0.0;
};

struct StateUncertainty {
  double t0 = 0.0;
  double delta_tau = 0.0;
  double amplitude = 0.0;
};

struct FitResult {
  MultiLevelModel model;
  double rms_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // One-sigma errors from the inverse normal matrix scaled by the residual
  // variance. Absent when the normal matrix is singular or the fit is empty.
  std::optional<std::vector<StateUncertainty>> uncertainties;
  // (time, value) knots of a piecewise-linear baseline; empty when the
  // baseline is constant. model.baseline() then holds its mean.
  std::vector<std::pair<double, double>> baseline_knots;
  // Why refinement stopped: "residual_tol", "no_residual_peak" and
  // "no_improvement" count as converged; "max_states", "max_iterations",
  // "singular" and "empty" do not.
  std::string stop_reason;
};

// Analytic gradient of M / (1 + x^2), x = 2 (t - t0) / delta_tau.
StateGradient jacobian(const LorentzianState& state, double t);

// Gradient of the exact mean of the state over [lo, hi].
StateGradient interval_mean_gradient(const LorentzianState& state, double lo, double hi);

// Local maxima standing at least min_peak_height above the series median.
// Seeds carry the channel-center time, the height above the median, and the
// interpolated full width at half height clamped to the configured range.
std::vector<LorentzianState> detect_peaks(const ChannelSeries& series, const FitConfig& config);

// Joint damped Gauss-Newton refinement of all states and a constant baseline,
// with greedy state addition until the residual target, the state limit or
// the iteration limit is reached. Each round tries new states at the
// strongest residual peaks and splits of the worst-fitting states, keeps
// the best, and stops early once no candidate pays the BIC cost of three
// parameters.
FitResult fit_multilevel(const ChannelSeries& series, const std::vector<LorentzianState>& seeds,
                         const FitConfig& config);

// detect_peaks followed by fit_multilevel.
FitResult fit_component(const ChannelSeries& series, const FitConfig& config);

// Consecutive fit windows of `length` seconds, each fitted over a span
// widened by `margin` on both sides so states near a window edge see their
// neighbors. Only states centered inside a window are reported for it.
struct TileOptions {
  double length = 3600.0;
  double margin = 300.0;
  std::size_t jobs = 1;
};

struct TileFit {
  TimeWindow window;
  FitResult result;
};

// Windows are fitted concurrently up to `jobs`; results are ordered by
// window start and do not depend on the job count.
std::vector<TileFit> fit_tiles(const ChannelSeries& series, const FitConfig& config,
                               const TileOptions& options);

// Root-mean-square of the channel values.
double rms(std::span<const double> values);

}  // namespace lorentzscope
