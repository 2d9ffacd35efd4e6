#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lorentzscope/error.hpp"
#include "lorentzscope/golden.hpp"
#include "lorentzscope/lorentz.hpp"

using namespace lorentzscope;
using doctest::Approx;

TEST_CASE("eval closed form") {
  CHECK(eval(LorentzianState(2940, 90, 12), 2940) == 12.0);
  CHECK(eval(LorentzianState(0, 2, 1), 3) == Approx(0.1).epsilon(1e-15));
  const LorentzianState s(100, 40, 3);
  CHECK(s.offset(120) == 1.0);
  CHECK(std::abs(eval(s, 120) - 1.5) < 1e-12 * 1.5);
  CHECK(std::abs(eval(s, 80) - 1.5) < 1e-12 * 1.5);
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(LorentzianState(0, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(LorentzianState(0, -3, 1), InvalidArgument);
  CHECK_THROWS_AS(LorentzianState(NAN, 3, 1), InvalidArgument);
  CHECK_NOTHROW(LorentzianState(0, 3, -1));
}

TEST_CASE("symmetry and FWHM over a parameter sweep") {
  for (double w : {0.5, 21.0, 90.0, 3000.0}) {
    for (double m : {-2.0, 0.3, 12.0}) {
      const LorentzianState s(1234.5, w, m);
      CHECK(std::abs(eval(s, s.t0() + w / 2) - m / 2) <= 1e-12 * std::abs(m));
      CHECK(std::abs(eval(s, s.t0() - w / 2) - m / 2) <= 1e-12 * std::abs(m));
      for (double d : {0.1, 7.0, 1e3}) CHECK(eval(s, s.t0() + d) == eval(s, s.t0() - d));
    }
  }
}

TEST_CASE("area") {
  CHECK(area(LorentzianState(0, 3, 2)) == Approx(3 * std::numbers::pi));
  CHECK(area(LorentzianState(0, 3, 0)) == 0.0);
  const LorentzianState s(2940, 90, 12);
  CHECK(area(s) == Approx(540 * std::numbers::pi));
  // Over t0 +- k delta_tau the offset x spans +-2k, so the missing mass is
  // (2/pi) atan(1/(2k)) of the area; at k = 50 that is well under 2%.
  for (double k : {5.0, 50.0}) {
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return eval(s, t); }, s.t0() - k * 90, s.t0() + k * 90, 15, 1e-12);
    const double missing = 2 / std::numbers::pi * std::atan(1 / (2 * k));
    CHECK(integral == Approx(area(s) * (1 - missing)).epsilon(1e-9));
    if (k == 50.0) CHECK(1 - integral / area(s) < 0.02);
  }
}

TEST_CASE("interval_mean matches quadrature oracles") {
  CHECK(interval_mean(LorentzianState(100, 60, 5), 90, 120) == Approx(4.548765789721049).epsilon(1e-13));
  CHECK(interval_mean(LorentzianState(0, 21, 1.5), 30, 60) == Approx(0.08580030529054017).epsilon(1e-13));
  CHECK(interval_mean(LorentzianState(1800, 300, -2), 1500, 1530) == Approx(-0.4345089539153084).epsilon(1e-13));
  CHECK_THROWS_AS(interval_mean(LorentzianState(0, 1, 1), 2, 2), InvalidArgument);
}

TEST_CASE("eval_model sums states on a baseline") {
  const MultiLevelModel empty(5.0, {}, {0, 100});
  CHECK(eval_model(empty, 42) == 5.0);
  const MultiLevelModel twin(1.0, {LorentzianState(50, 10, 2), LorentzianState(50, 10, 2)}, {0, 100});
  CHECK(eval_model(twin, 50) == 5.0);

  const auto t3 = golden::table3_model();
  CHECK(eval_model(t3, 2940) == Approx(12.451011342391235).epsilon(1e-13));
  CHECK(eval_model(t3, 2940) > 12.0);
}

TEST_CASE("model keeps states ordered and checks its window") {
  const MultiLevelModel m(0.0, {LorentzianState(90, 10, 1), LorentzianState(10, 10, 1), LorentzianState(50, 10, 1)},
                          {0, 100});
  CHECK(m.states()[0].t0() == 10);
  CHECK(m.states()[2].t0() == 90);
  CHECK(m.states_within(0));
  const MultiLevelModel wide(0.0, {LorentzianState(130, 10, 1)}, {0, 100});
  CHECK_FALSE(wide.states_within(20));
  CHECK(wide.states_within(30));
  CHECK_THROWS_AS(MultiLevelModel(0.0, {}, {10, 0}), InvalidArgument);
}

TEST_CASE("linearity of eval_model over unions") {
  const std::vector<LorentzianState> a{{100, 30, 2}, {400, 60, 1}};
  const std::vector<LorentzianState> b{{250, 45, 3}};
  std::vector<LorentzianState> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const MultiLevelModel ma(0.7, a, {0, 500}), mb(0.7, b, {0, 500}), mab(0.7, ab, {0, 500});
  for (double t : {0.0, 120.0, 260.0, 499.0}) {
    CHECK(eval_model(mab, t) == Approx(eval_model(ma, t) + eval_model(mb, t) - 0.7).epsilon(1e-14));
  }
}

TEST_CASE("window_average") {
  const MultiLevelModel flat(5.0, {}, {0, 100});
  const auto f = window_average(flat);
  CHECK(f.grid_mean == 5.0);
  CHECK_FALSE(f.analytic_estimate.has_value());

  const LorentzianState s(5000, 100, 4);
  const auto one = window_average(MultiLevelModel(0.0, {s}, {0, 10000}));
  CHECK(one.grid_step <= 10.0);
  CHECK(one.grid_mean == Approx(area(s) / 10000).epsilon(0.01));

  const auto t3 = window_average(golden::table3_model());
  CHECK(t3.grid_mean == Approx(4.075975052510236).epsilon(1e-3));
  REQUIRE(t3.analytic_estimate.has_value());
  CHECK(*t3.analytic_estimate == Approx(3.7608136555817313).epsilon(1e-12));
  CHECK(std::abs(t3.grid_mean - *t3.analytic_estimate) < 0.15 * *t3.analytic_estimate);
  CHECK_THROWS_AS(window_average(MultiLevelModel(0.0, {}, {3, 3})), InvalidArgument);
}
