#include <cmath>

#include "doctest.h"
#include "lorentzscope/error.hpp"
#include "lorentzscope/fit.hpp"
#include "lorentzscope/golden.hpp"
#include "lorentzscope/synth.hpp"

using namespace lorentzscope;
using doctest::Approx;

namespace {

ChannelSeries render(const std::vector<LorentzianState>& states, double baseline, double length,
                     double width = 30.0) {
  SeriesOptions o;
  o.baseline = baseline;
  o.channel_width = width;
  return render_series(MultiLevelModel(0.0, states, {0, length}), o).series;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Central difference with step 1e-5 * scale.
template <typename F>
double central(F&& f, double x, double scale) {
  const double h = 1e-5 * scale;
  return (f(x + h) - f(x - h)) / (2 * h);
}

// Relative agreement to 1e-6; derivatives under 1e-3 of their natural
// scale are compared absolutely against that floor.
bool agrees(double analytic, double numeric, double scale) {
  return std::abs(analytic - numeric) <= 1e-6 * std::max(std::abs(numeric), 1e-3 * scale);
}

const std::vector<LorentzianState> kTriple{{400, 60, 5}, {470, 90, 3}, {530, 45, 4}};

}  // namespace

TEST_CASE("jacobian closed forms") {
  const LorentzianState s(100, 40, 3);
  const auto at_center = jacobian(s, 100);
  CHECK(at_center.d_amplitude == 1.0);
  CHECK(at_center.d_t0 == 0.0);
  CHECK(at_center.d_width == 0.0);
  const auto at_half = jacobian(s, 120);
  CHECK(at_half.d_amplitude == Approx(0.5).epsilon(1e-15));
  CHECK(at_half.d_t0 == Approx(3.0 / 40).epsilon(1e-15));
  CHECK(at_half.d_width == Approx(3.0 / 80).epsilon(1e-15));
  CHECK(agrees(at_half.d_t0, central([](double t0) { return eval(LorentzianState(t0, 40, 3), 120); }, 100.0, 40.0),
               3.0 / 40));
}

TEST_CASE("jacobian and channel-mean gradient agree with finite differences") {
  SeededRandom rng(2024);
  for (int i = 0; i < 200; ++i) {
    const double t0 = 3600 * rng.uniform();
    const double w = 15 + 285 * rng.uniform();
    const double m = 0.5 + 12 * rng.uniform();
    const double t = t0 + (rng.uniform() - 0.5) * 4 * w;
    // t0 is a location, so its step scales with the width.
    const auto g = jacobian(LorentzianState(t0, w, m), t);
    CHECK(agrees(g.d_amplitude, central([&](double v) { return eval(LorentzianState(t0, w, v), t); }, m, m), 1.0));
    CHECK(agrees(g.d_t0, central([&](double v) { return eval(LorentzianState(v, w, m), t); }, t0, w), m / w));
    CHECK(agrees(g.d_width, central([&](double v) { return eval(LorentzianState(t0, v, m), t); }, w, w), m / w));

    const double lo = std::floor(t / 30) * 30;
    auto mean = [&](double c, double v, double a) { return interval_mean(LorentzianState(c, v, a), lo, lo + 30); };
    const auto c = interval_mean_gradient(LorentzianState(t0, w, m), lo, lo + 30);
    CHECK(agrees(c.d_amplitude, central([&](double v) { return mean(t0, w, v); }, m, m), 1.0));
    CHECK(agrees(c.d_t0, central([&](double v) { return mean(v, w, m); }, t0, w), m / w));
    CHECK(agrees(c.d_width, central([&](double v) { return mean(t0, v, m); }, w, w), m / w));
  }
}

TEST_CASE("detect_peaks finds isolated states above the median") {
  const auto series = render({{600, 60, 5}, {1800, 120, 2}, {3000, 45, 0.5}}, 10.0, 3600);
  FitConfig config;
  const auto seeds = detect_peaks(series, config);
  REQUIRE(seeds.size() == 2);
  CHECK(std::abs(seeds[0].t0() - 600) <= 15);
  CHECK(std::abs(seeds[1].t0() - 1800) <= 15);
  for (const auto& s : seeds) {
    CHECK(s.delta_tau() >= config.min_width);
    CHECK(s.delta_tau() <= config.max_width);
  }
  CHECK(seeds[1].delta_tau() == Approx(120).epsilon(0.3));
}

TEST_CASE("noise-free overlapping triple seeded at the truth") {
  const auto series = render(kTriple, 2.0, 1200);
  FitConfig config;
  const auto r = fit_multilevel(series, kTriple, config);
  CHECK(r.converged);
  REQUIRE(r.model.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rel(r.model.states()[i].t0(), kTriple[i].t0()) < 1e-9);
    CHECK(rel(r.model.states()[i].delta_tau(), kTriple[i].delta_tau()) < 1e-9);
    CHECK(rel(r.model.states()[i].amplitude(), kTriple[i].amplitude()) < 1e-9);
  }
  CHECK(rel(r.model.baseline(), 2.0) < 1e-9);
  CHECK(r.rms_residual < 1e-9);
}

TEST_CASE("noise-free triple from perturbed seeds recovers parameters to 1e-6") {
  const auto series = render(kTriple, 0.0, 1200);
  std::vector<LorentzianState> seeds;
  for (const auto& s : kTriple) seeds.emplace_back(s.t0() + 12, s.delta_tau() * 1.2, s.amplitude() * 0.8);
  const auto r = fit_multilevel(series, seeds, FitConfig{});
  REQUIRE(r.model.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rel(r.model.states()[i].t0(), kTriple[i].t0()) < 1e-6);
    CHECK(rel(r.model.states()[i].delta_tau(), kTriple[i].delta_tau()) < 1e-6);
    CHECK(rel(r.model.states()[i].amplitude(), kTriple[i].amplitude()) < 1e-6);
  }
}

TEST_CASE("a state below min_peak_height with no seeds gives an empty fit") {
  const auto series = render({{600, 60, 0.5}}, 0.0, 1200);
  const auto r = fit_component(series, FitConfig{});
  CHECK_FALSE(r.converged);
  CHECK(r.model.empty());
  CHECK(r.stop_reason == "empty");
  CHECK(r.rms_residual == rms(series.values()));
  CHECK_FALSE(r.uncertainties.has_value());
}

TEST_CASE("emitted widths respect the configured range") {
  const auto series = render({{900, 900, 4}, {2400, 8, 6}}, 1.0, 3600);
  FitConfig config;
  const auto r = fit_component(series, config);
  REQUIRE_FALSE(r.model.empty());
  for (const auto& s : r.model.states()) {
    CHECK(s.delta_tau() >= config.min_width);
    CHECK(s.delta_tau() <= config.max_width);
  }
}

TEST_CASE("fits are deterministic") {
  SeriesOptions o;
  o.noise = 0.02;
  const auto syn = render_series(golden::table3_model(), o);
  const auto a = fit_component(syn.series, FitConfig{});
  const auto b = fit_component(syn.series, FitConfig{});
  CHECK(a.model == b.model);
  CHECK(a.rms_residual == b.rms_residual);
  CHECK(a.iterations == b.iterations);
  CHECK(a.stop_reason == b.stop_reason);
}

TEST_CASE("accepted steps never raise the residual") {
  const auto series = render(kTriple, 0.0, 1200);
  std::vector<LorentzianState> seeds;
  for (const auto& s : kTriple) seeds.emplace_back(s.t0() - 20, s.delta_tau() * 0.7, s.amplitude() * 1.3);
  FitConfig config;
  config.max_states = 3;
  double previous = INFINITY;
  for (std::size_t it = 1; it <= 40; ++it) {
    config.max_iterations = it;
    const auto r = fit_multilevel(series, seeds, config);
    CHECK(r.rms_residual <= previous * (1 + 1e-12));
    previous = r.rms_residual;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("signed amplitudes fit dips") {
  const auto series = render({{600, 90, -4}, {1500, 60, 3}}, 0.0, 2400);
  FitConfig config;
  config.positive_amplitudes = false;
  const auto r = fit_component(series, config);
  REQUIRE(r.model.size() >= 2);
  bool dip = false;
  for (const auto& s : r.model.states()) dip = dip || (std::abs(s.t0() - 600) < 15 && s.amplitude() < -3);
  CHECK(dip);
  const auto positive = fit_component(series, FitConfig{});
  for (const auto& s : positive.model.states()) CHECK(s.amplitude() >= 0.0);
}

TEST_CASE("piecewise-linear baseline absorbs a slow drift") {
  const std::vector<LorentzianState> truth{{500, 60, 5}, {1300, 75, 4}, {2100, 45, 6}, {2900, 90, 3}};
  auto flat = render(truth, 0.0, 3600);
  std::vector<double> v(flat.values().begin(), flat.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += 2.0 * std::sin(flat.center(k) / 3600 * 3.14159);
  const ChannelSeries drifting(30, 0, v);
  FitConfig config;
  config.baseline_knot_spacing = 600;
  const auto r = fit_component(drifting, config);
  CHECK_FALSE(r.baseline_knots.empty());
  const auto m = match_states(MultiLevelModel(0, truth, {0, 3600}), r.model, 30, 0.25);
  CHECK(m.pairs.size() == 4);
  CHECK(m.width_agreeing >= 3);
}

TEST_CASE("fit config validation") {
  const auto series = render(kTriple, 0.0, 1200);
  FitConfig c;
  c.min_width = 300;
  CHECK_THROWS_AS(fit_component(series, c), InvalidArgument);
  c = FitConfig{};
  c.max_states = 0;
  CHECK_THROWS_AS(fit_component(series, c), InvalidArgument);
  c = FitConfig{};
  c.residual_tol = 0.0;
  CHECK_THROWS_AS(fit_component(series, c), InvalidArgument);
  CHECK_THROWS_AS(fit_multilevel(series, {LorentzianState(5000, 60, 1)}, FitConfig{}), InvalidArgument);
}

TEST_CASE("fit_tiles: windows, ownership and job independence") {
  EnsembleSpec e;
  e.window = {0, 9000};
  e.seed = 5;
  SeriesOptions o;
  o.noise = 0.02;
  const auto syn = build_series(e, o);
  const auto one = fit_tiles(syn.series, FitConfig{}, TileOptions{3600, 300, 1});
  const auto three = fit_tiles(syn.series, FitConfig{}, TileOptions{3600, 300, 3});
  REQUIRE(one.size() == 3);
  CHECK(one[0].window == TimeWindow{0, 3600});
  CHECK(one[2].window == TimeWindow{7200, 9000});
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].result.model == three[i].result.model);
    CHECK(one[i].result.model.window() == one[i].window);
    for (const auto& s : one[i].result.model.states()) {
      CHECK(s.t0() >= one[i].window.lo);
      CHECK(s.t0() < one[i].window.hi);
    }
  }
  std::size_t matched = 0;
  for (const auto& t : one) matched += match_states(syn.truth, t.result.model, 30, 0.25).pairs.size();
  CHECK(matched >= 0.85 * static_cast<double>(syn.truth.size()));
}
