#pragma once

#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace lorentzscope {

// One resonance-like state: M / (1 + x^2) with x = 2 (t - t0) / delta_tau.
// delta_tau is the full width at half maximum; M may be negative (signed
// residual series), the fitter keeps it positive by default.
class LorentzianState {
 public:
  LorentzianState(double t0, double delta_tau, double amplitude);

  double t0() const { return t0_; }
  double delta_tau() const { return delta_tau_; }
  double amplitude() const { return amplitude_; }

  // Dimensionless offset x = 2 (t - t0) / delta_tau.
  double offset(double t) const { return 2.0 * (t - t0_) / delta_tau_; }

  friend bool operator==(const LorentzianState&, const LorentzianState&) = default;

 private:
  double t0_;
  double delta_tau_;
  double amplitude_;
};

double eval(const LorentzianState& state, double t);

// Integral over the whole line: pi * M * delta_tau / 2.
double area(const LorentzianState& state);

// Exact mean of the state over [lo, hi] (lo < hi), from the arctan antiderivative.
double interval_mean(const LorentzianState& state, double lo, double hi);

struct TimeWindow {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// Constant baseline plus a t0-ordered set of states over a time window.
class MultiLevelModel {
 public:
  MultiLevelModel() = default;
  MultiLevelModel(double baseline, std::vector<LorentzianState> states, TimeWindow window);

  double baseline() const { return baseline_; }
  std::span<const LorentzianState> states() const { return states_; }
  const TimeWindow& window() const { return window_; }
  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }

  // True when every t0 lies within [lo - margin, hi + margin].
  bool states_within(double margin) const;

  friend bool operator==(const MultiLevelModel&, const MultiLevelModel&) = default;

 private:
  double baseline_ = 0.0;
  std::vector<LorentzianState> states_;
  TimeWindow window_;
};

double eval_model(const MultiLevelModel& model, double t);
double interval_mean(const MultiLevelModel& model, double lo, double hi);

struct WindowAverage {
  // Midpoint-rule mean of the model over its window, step <= min(delta_tau)/10.
  double grid_mean = 0.0;
  // baseline + (pi/2) <M> <delta_tau> / <D>, with <D> = window length / state count.
  // Absent when the model has no states.
  std::optional<double> analytic_estimate;
  double grid_step = 0.0;
};

WindowAverage window_average(const MultiLevelModel& model);

}  // namespace lorentzscope
