#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "lorentzscope/ingest.hpp"
#include "lorentzscope/lorentz.hpp"

namespace lorentzscope {

// Portable seeded source. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the transforms below are
// implemented here (not via <random> distributions) so that sequences are
// reproducible across standard libraries and languages:
//   uniform: ((x >> 11) + 0.5) * 2^-53, strictly inside (0, 1)
//   normal:  Box-Muller cosine branch, sqrt(-2 ln u1) * cos(2 pi u2)
class SeededRandom {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64; uniform=((x>>11)+0.5)*2^-53; normal=box-muller-cos";

  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  // Gamma(shape, 1) by Marsaglia-Tsang squeeze, boosted for shape < 1.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

// Unit-mean Wigner spacing from a uniform u in (0, 1) by inverting
// F(x) = 1 - exp(-pi x^2 / 4).
double wigner_quantile(double u);

std::vector<double> sample_wigner(std::size_t n, std::uint64_t seed);
std::vector<double> sample_wigner(std::size_t n, SeededRandom& rng);

// mean * chi^2_nu / nu: a sum of nu squared normals for integer nu, gamma
// sampling otherwise.
std::vector<double> sample_chisq(std::size_t n, double nu, double mean, std::uint64_t seed);
std::vector<double> sample_chisq(std::size_t n, double nu, double mean, SeededRandom& rng);

enum class SpacingLaw { kWigner, kFixed };

struct WidthLaw {
  enum class Kind { kFixed, kChiSquared };
  Kind kind = Kind::kFixed;
  double nu = 2.0;
};

// Log-normal amplitudes with the given mean and log-space dispersion;
// dispersion 0 gives fixed amplitudes.
struct AmplitudeLaw {
  double mean = 5.0;
  double dispersion = 0.0;
};

struct EnsembleSpec {
  double mean_spacing = 110.0;
  SpacingLaw spacing_law = SpacingLaw::kWigner;
  double mean_width = 57.0;
  WidthLaw width_law;
  AmplitudeLaw amplitude;
  TimeWindow window{0.0, 3600.0};
  std::uint64_t seed = 1;

  void validate() const;
};

// Draws the ground-truth states: the first center sits one mean spacing
// after the window start, later centers add sampled spacings until the
// window end. Per state the draw order is width, amplitude, then the
// spacing to the next center.
MultiLevelModel sample_states(const EnsembleSpec& spec);

enum class Composition { kAdditive, kMultiplicative };

struct SeriesOptions {
  // Constant level or a per-channel background on the output grid.
  std::variant<double, ChannelSeries> baseline = 0.0;
  double channel_width = 30.0;
  // Relative sigma of multiplicative Gaussian noise on channel values.
  double noise = 0.0;
  std::uint64_t noise_seed = 1;
  Composition composition = Composition::kAdditive;
};

struct SyntheticSeries {
  ChannelSeries series;
  MultiLevelModel truth;
};

// Channel means of baseline plus the model's states over the model window.
// Additive: b + S. Multiplicative: b * (1 + S / mean(b)).
SyntheticSeries render_series(const MultiLevelModel& truth, const SeriesOptions& options);

// sample_states followed by render_series.
SyntheticSeries build_series(const EnsembleSpec& spec, const SeriesOptions& options);

// A multi-scale session: slow gross trend plus three nested state ensembles.
struct DaySpec {
  double length = 23400.0;
  double channel_width = 30.0;
  double level = 13000.0;
  double trend = 60.0;           // linear drift over the session (index points)
  double gross_swing = 40.0;     // amplitude of one slow sine over the session
  EnsembleSpec intermediate1;
  EnsembleSpec intermediate2;
  EnsembleSpec fine;
  double noise = 0.0;
  std::uint64_t noise_seed = 7;

  // Scales from the DJIA session analysis: <D> about 50 min, 12 min, 110 s.
  static DaySpec djia_like(std::uint64_t seed);
};

struct SyntheticDay {
  TimeSeries series;
  ChannelSeries gross;
  MultiLevelModel intermediate1;
  MultiLevelModel intermediate2;
  MultiLevelModel fine;
};

SyntheticDay build_day(const DaySpec& spec);

// One-to-one pairing of fitted states to true states, closest centers first.
struct StateMatch {
  std::size_t truth_index;
  std::size_t fitted_index;
};

struct MatchSummary {
  std::vector<StateMatch> pairs;
  // Pairs whose width also agrees within the relative tolerance.
  std::size_t width_agreeing = 0;
};

MatchSummary match_states(const MultiLevelModel& truth, const MultiLevelModel& fitted,
                          double t0_tolerance, double width_rel_tolerance);

}  // namespace lorentzscope
