#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lorentzscope/decompose.hpp"
#include "lorentzscope/error.hpp"
#include "lorentzscope/fit.hpp"
#include "lorentzscope/synth.hpp"

using namespace lorentzscope;
using doctest::Approx;

namespace {

std::vector<double> ramp(std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 0.0);
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Seconds (30 s channels) until the autocorrelation drops below 0.5.
double half_lag(std::span<const double> v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double c0 = 0.0;
  for (double x : v) c0 += (x - m) * (x - m);
  for (std::size_t lag = 1; lag < v.size() / 2; ++lag) {
    double c = 0.0;
    for (std::size_t k = 0; k + lag < v.size(); ++k) c += (v[k] - m) * (v[k + lag] - m);
    if (c < 0.5 * c0) return 30.0 * static_cast<double>(lag);
  }
  return 30.0 * static_cast<double>(v.size() / 2);
}

TimeSeries constant_with_state(double level, const LorentzianState& s, double length) {
  std::vector<double> v(static_cast<std::size_t>(length / 30.0));
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = level + interval_mean(s, 30.0 * k, 30.0 * (k + 1));
  return TimeSeries(0.0, 30.0, std::move(v));
}

}  // namespace

TEST_CASE("smooth: constant, impulse and ramp") {
  const ChannelSeries c(30, 0, std::vector<double>(20, 7.25));
  const auto sc = smooth(c, 150);
  for (double v : sc.values()) CHECK(v == 7.25);

  std::vector<double> imp(11, 0.0);
  imp[5] = 1.0;
  const auto s = smooth(ChannelSeries(30, 0, imp), 90);
  for (std::size_t k = 0; k < 11; ++k) CHECK(s.values()[k] == Approx(k >= 4 && k <= 6 ? 1.0 / 3 : 0.0));

  const auto r = smooth(ChannelSeries(30, 0, ramp(12)), 150);
  for (std::size_t k = 2; k < 10; ++k) CHECK(r.values()[k] == Approx(static_cast<double>(k)).epsilon(1e-15));
  // Mirror padding without repeating the edge: (2 + 1 + 0 + 1 + 2) / 5.
  CHECK(r.values()[0] == Approx(1.2));
  CHECK(r.values()[11] == Approx((9 + 10 + 11 + 10 + 9) / 5.0));
}

TEST_CASE("smooth rounds even kernels down and rejects short windows") {
  std::vector<double> imp(9, 0.0);
  imp[4] = 1.0;
  const auto s = smooth(ChannelSeries(30, 0, imp), 120);
  CHECK(s.values()[3] == Approx(1.0 / 3));
  CHECK(s.values()[2] == 0.0);
  CHECK_THROWS_AS(smooth(ChannelSeries(30, 0, imp), 89), InvalidArgument);
}

TEST_CASE("renorm identities") {
  const ChannelSeries b(30, 0, {100, 110, 120, 130});
  for (auto mode : {RenormMode::kSubtract, RenormMode::kDivide}) {
    const auto zero = renorm(b, b, mode);
    for (double v : zero.values()) CHECK(v == 0.0);
  }
  const ChannelSeries up(30, 0, {101, 111.1, 121.2, 131.3});
  const auto rel = renorm(up, b, RenormMode::kDivide);
  for (double v : rel.values()) CHECK(v == Approx(0.01 * 115).epsilon(1e-12));
  const ChannelSeries plus(30, 0, {100.5, 112, 120.25, 130});
  const auto d = renorm(plus, b, RenormMode::kSubtract);
  CHECK(d.values()[0] == 0.5);
  CHECK(d.values()[1] == 2.0);
  CHECK(d.values()[2] == 0.25);
  CHECK_THROWS_AS(renorm(b, ChannelSeries(30, 10, {1, 1, 1, 1}), RenormMode::kSubtract), InvalidArgument);
  CHECK_THROWS_AS(renorm(b, ChannelSeries(30, 0, {1, 0, 1, 1}), RenormMode::kDivide), PreconditionError);
  CHECK(parse_renorm_mode("divide") == RenormMode::kDivide);
  CHECK_THROWS_AS(parse_renorm_mode("ratio"), InvalidArgument);
}

TEST_CASE("constant input decomposes to a flat gross and zero bands") {
  const TimeSeries ts(0, 30, std::vector<double>(780, 13000.0));
  const auto d = decompose(ts);
  for (double v : d.gross.values()) CHECK(v == 13000.0);
  CHECK(max_abs(d.intermediate1.values()) == 0.0);
  CHECK(max_abs(d.intermediate2.values()) == 0.0);
  CHECK(max_abs(d.fine.values()) == 0.0);
  CHECK(d.reconstruction_error() == 0.0);
}

TEST_CASE("a single narrow state lands in the fine component") {
  const LorentzianState s(11715, 60, 10);
  const auto d = decompose(constant_with_state(13000, s, 23400));
  const double a = area(s);
  double gross_dev = 0.0;
  for (double v : d.gross.values()) gross_dev = std::max(gross_dev, std::abs(v - 13000));
  // A moving average over W seconds spreads the area over W: 11 coarse
  // channels of 600 s for the gross scale, 99 channels of 30 s for I1.
  CHECK(gross_dev <= a / 6600.0);
  CHECK(max_abs(d.intermediate1.values()) <= a / 2970.0);
  const auto k = static_cast<std::size_t>(s.t0() / 30);
  CHECK(d.fine.values()[k] > 0.8 * interval_mean(s, 30.0 * k, 30.0 * (k + 1)));
  CHECK(d.reconstruction_error() < 1e-12);
}

TEST_CASE("reconstruction identity in both modes") {
  SeededRandom rng(99);
  std::vector<double> v(1200);
  double level = 13000;
  for (auto& x : v) {
    level += 3 * rng.normal();
    x = level;
  }
  const TimeSeries ts(0, 15, v);
  for (auto mode : {RenormMode::kSubtract, RenormMode::kDivide}) {
    DecomposeOptions o;
    o.mode = mode;
    const auto d = decompose(ts, o);
    CHECK(d.fine.channel_width() == 30.0);
    CHECK(d.fine.size() == 600);
    CHECK(d.reconstruction_error() < 1e-9);
    if (mode == RenormMode::kDivide) CHECK(d.unit_scale == Approx(13000).epsilon(0.05));
  }
}

TEST_CASE("decompose preconditions") {
  const TimeSeries ts(0, 30, std::vector<double>(780, 1.0));
  DecomposeOptions bad;
  bad.scales = {3000, 7200, 720};
  CHECK_THROWS_AS(decompose(ts, bad), InvalidArgument);
  const TimeSeries short_series(0, 30, std::vector<double>(100, 1.0));
  CHECK_THROWS_AS(decompose(short_series), PreconditionError);
}

TEST_CASE("synthetic day: component scales follow the construction") {
  const auto day = build_day(DaySpec::djia_like(3));
  const auto d = decompose(day.series);
  const auto d2 = decompose(day.series);
  CHECK(std::equal(d.fine.values().begin(), d.fine.values().end(), d2.fine.values().begin()));
  CHECK(d.reconstruction_error() < 1e-9);

  // Lag at which the autocorrelation first falls below one half, per band,
  // against the construction mean spacings (110 s, 12 min, 50 min).
  const auto spec = DaySpec::djia_like(3);
  const double fine = half_lag(d.fine.values());
  const double i2 = half_lag(d.intermediate2.values());
  const double i1 = half_lag(d.intermediate1.values());
  CHECK(fine < i2);
  CHECK(i2 < i1);
  CHECK(fine == doctest::Approx(0.6 * spec.fine.mean_spacing).epsilon(0.5));
  CHECK(i2 == doctest::Approx(0.6 * spec.intermediate2.mean_spacing).epsilon(0.5));
  CHECK(i1 == doctest::Approx(0.6 * spec.intermediate1.mean_spacing).epsilon(0.5));

  // Fine structure carries little power at the intermediate-I scale.
  const auto back = smooth(d.fine, d.scales.intermediate1);
  CHECK(rms(back.values()) < 0.2 * rms(d.fine.values()));
}
