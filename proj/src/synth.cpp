#include "lorentzscope/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lorentzscope/error.hpp"

namespace lorentzscope {

double SeededRandom::uniform() {
  const std::uint64_t x = engine_();
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRandom::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRandom::gamma(double shape) {
  if (!(shape > 0.0)) throw InvalidArgument("gamma shape must be positive");
  if (shape < 1.0) {
    const double boost = std::pow(uniform(), 1.0 / shape);
    return gamma(shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double z = 0.0;
    double v = 0.0;
    do {
      z = normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double wigner_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("wigner_quantile needs u in (0, 1)");
  return std::sqrt(-4.0 / std::numbers::pi * std::log1p(-u));
}

std::vector<double> sample_wigner(std::size_t n, SeededRandom& rng) {
  std::vector<double> out(n);
  for (auto& x : out) x = wigner_quantile(rng.uniform());
  return out;
}

std::vector<double> sample_wigner(std::size_t n, std::uint64_t seed) {
  SeededRandom rng(seed);
  return sample_wigner(n, rng);
}

namespace {

double chisq_draw(double nu, SeededRandom& rng) {
  const double whole = std::round(nu);
  if (std::abs(nu - whole) < 1e-12 && whole >= 1.0 && whole <= 1000.0) {
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(whole); ++i) {
      const double z = rng.normal();
      s += z * z;
    }
    return s;
  }
  return 2.0 * rng.gamma(nu / 2.0);
}

}  // namespace

std::vector<double> sample_chisq(std::size_t n, double nu, double mean, SeededRandom& rng) {
  if (!(nu > 0.0 && mean > 0.0)) {
    throw InvalidArgument(fmt::format("sample_chisq needs nu > 0 and mean > 0, got {} {}", nu, mean));
  }
  std::vector<double> out(n);
  for (auto& x : out) x = mean * chisq_draw(nu, rng) / nu;
  return out;
}

std::vector<double> sample_chisq(std::size_t n, double nu, double mean, std::uint64_t seed) {
  SeededRandom rng(seed);
  return sample_chisq(n, nu, mean, rng);
}

void EnsembleSpec::validate() const {
  if (!(mean_spacing > 0.0 && mean_width > 0.0 && amplitude.mean > 0.0)) {
    throw InvalidArgument("ensemble spec means must be positive");
  }
  if (amplitude.dispersion < 0.0) throw InvalidArgument("amplitude dispersion must be >= 0");
  if (width_law.kind == WidthLaw::Kind::kChiSquared && !(width_law.nu > 0.0)) {
    throw InvalidArgument("chi-squared width law needs nu > 0");
  }
  if (!(window.hi > window.lo)) {
    throw InvalidArgument(fmt::format("ensemble window [{}, {}] is empty", window.lo, window.hi));
  }
}

MultiLevelModel sample_states(const EnsembleSpec& spec) {
  spec.validate();
  if (spec.window.lo + spec.mean_spacing >= spec.window.hi) {
    throw InvalidArgument("ensemble window is too short for one state");
  }
  SeededRandom rng(spec.seed);
  std::vector<LorentzianState> states;
  double t = spec.window.lo + spec.mean_spacing;
  while (t < spec.window.hi) {
    const double width = spec.width_law.kind == WidthLaw::Kind::kFixed
                             ? spec.mean_width
                             : spec.mean_width * chisq_draw(spec.width_law.nu, rng) / spec.width_law.nu;
    double amp = spec.amplitude.mean;
    if (spec.amplitude.dispersion > 0.0) {
      const double s = spec.amplitude.dispersion;
      amp *= std::exp(s * rng.normal() - 0.5 * s * s);
    }
    states.emplace_back(t, width, amp);
    const double step = spec.spacing_law == SpacingLaw::kFixed ? 1.0 : wigner_quantile(rng.uniform());
    t += spec.mean_spacing * step;
  }
  return MultiLevelModel(0.0, std::move(states), spec.window);
}

SyntheticSeries render_series(const MultiLevelModel& truth, const SeriesOptions& options) {
  const double w = options.channel_width;
  if (!(w > 0.0)) throw InvalidArgument("channel width must be positive");
  if (options.noise < 0.0) throw InvalidArgument("noise sigma must be >= 0");
  const TimeWindow& win = truth.window();
  const auto channels = static_cast<std::size_t>(std::floor(win.length() / w + 1e-9));
  if (channels == 0) throw InvalidArgument("window shorter than one channel");

  std::vector<double> base(channels);
  if (const auto* level = std::get_if<double>(&options.baseline)) {
    std::fill(base.begin(), base.end(), *level);
  } else {
    const auto& bg = std::get<ChannelSeries>(options.baseline);
    if (bg.size() != channels || std::abs(bg.channel_width() - w) > 1e-9 * w ||
        std::abs(bg.origin() - win.lo) > 1e-9 * w) {
      throw InvalidArgument("baseline series is not on the output grid");
    }
    std::copy(bg.values().begin(), bg.values().end(), base.begin());
  }
  const double base_mean = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(channels);
  if (options.composition == Composition::kMultiplicative && !(base_mean > 0.0)) {
    throw InvalidArgument("multiplicative composition needs a positive baseline mean");
  }

  SeededRandom rng(options.noise_seed);
  std::vector<double> values(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    const double lo = win.lo + static_cast<double>(k) * w;
    const double s = interval_mean(truth, lo, lo + w) - truth.baseline();
    double v = options.composition == Composition::kAdditive ? base[k] + s
                                                              : base[k] * (1.0 + s / base_mean);
    if (options.noise > 0.0) v *= 1.0 + options.noise * rng.normal();
    values[k] = v;
  }
  return SyntheticSeries{ChannelSeries(w, win.lo, std::move(values)), truth};
}

SyntheticSeries build_series(const EnsembleSpec& spec, const SeriesOptions& options) {
  return render_series(sample_states(spec), options);
}

DaySpec DaySpec::djia_like(std::uint64_t seed) {
  DaySpec d;
  const TimeWindow session{0.0, d.length};
  d.intermediate1 = EnsembleSpec{50.0 * 60.0, SpacingLaw::kWigner, 0.6 * 50.0 * 60.0,
                                 WidthLaw{WidthLaw::Kind::kChiSquared, 10.0},
                                 AmplitudeLaw{20.0, 0.3}, session, seed * 3 + 1};
  d.intermediate2 = EnsembleSpec{12.0 * 60.0, SpacingLaw::kWigner, 0.6 * 12.0 * 60.0,
                                 WidthLaw{WidthLaw::Kind::kChiSquared, 10.0},
                                 AmplitudeLaw{6.0, 0.3}, session, seed * 3 + 2};
  d.fine = EnsembleSpec{110.0, SpacingLaw::kWigner, 57.0,
                        WidthLaw{WidthLaw::Kind::kChiSquared, 10.0},
                        AmplitudeLaw{5.0, 0.4}, session, seed * 3 + 3};
  d.noise_seed = seed * 3 + 4;
  return d;
}

SyntheticDay build_day(const DaySpec& spec) {
  const double w = spec.channel_width;
  const auto channels = static_cast<std::size_t>(std::floor(spec.length / w + 1e-9));
  if (channels < 2) throw InvalidArgument("day shorter than two channels");
  const TimeWindow session{0.0, static_cast<double>(channels) * w};
  auto in_session = [&](EnsembleSpec e) {
    e.window = session;
    return sample_states(e);
  };
  SyntheticDay day{TimeSeries(0.0, w, std::vector<double>(channels, 0.0)),
                   ChannelSeries(w, 0.0, std::vector<double>(channels, 0.0)),
                   in_session(spec.intermediate1), in_session(spec.intermediate2),
                   in_session(spec.fine)};

  std::vector<double> gross(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    // Channel mean of level + trend * t/L + swing * sin(2 pi t / L).
    const double a = static_cast<double>(k) * w;
    const double b = a + w;
    const double len = session.hi;
    const double lin = spec.level + spec.trend * (a + b) / (2.0 * len);
    const double omega = 2.0 * std::numbers::pi / len;
    const double sine = spec.gross_swing * (std::cos(omega * a) - std::cos(omega * b)) / (omega * w);
    gross[k] = lin + sine;
  }
  day.gross = ChannelSeries(w, 0.0, gross);

  SeededRandom rng(spec.noise_seed);
  std::vector<double> values(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    const double lo = static_cast<double>(k) * w;
    double v = gross[k] + interval_mean(day.intermediate1, lo, lo + w) +
               interval_mean(day.intermediate2, lo, lo + w) + interval_mean(day.fine, lo, lo + w);
    if (spec.noise > 0.0) v *= 1.0 + spec.noise * rng.normal();
    values[k] = v;
  }
  day.series = TimeSeries(0.0, w, std::move(values));
  return day;
}

MatchSummary match_states(const MultiLevelModel& truth, const MultiLevelModel& fitted,
                          double t0_tolerance, double width_rel_tolerance) {
  struct Candidate {
    double distance;
    std::size_t ti;
    std::size_t fi;
  };
  const auto ts = truth.states();
  const auto fs = fitted.states();
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double d = std::abs(ts[i].t0() - fs[j].t0());
      if (d <= t0_tolerance) candidates.push_back({d, i, j});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.distance < b.distance; });
  std::vector<bool> t_used(ts.size(), false);
  std::vector<bool> f_used(fs.size(), false);
  MatchSummary out;
  for (const auto& c : candidates) {
    if (t_used[c.ti] || f_used[c.fi]) continue;
    t_used[c.ti] = f_used[c.fi] = true;
    out.pairs.push_back({c.ti, c.fi});
    const double tw = ts[c.ti].delta_tau();
    if (std::abs(fs[c.fi].delta_tau() - tw) <= width_rel_tolerance * tw) ++out.width_agreeing;
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const auto& a, const auto& b) { return a.truth_index < b.truth_index; });
  return out;
}

}  // namespace lorentzscope
