#include "lorentzscope/lorentz.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "lorentzscope/error.hpp"

namespace lorentzscope {

LorentzianState::LorentzianState(double t0, double delta_tau, double amplitude)
    : t0_(t0), delta_tau_(delta_tau), amplitude_(amplitude) {
  if (!(delta_tau_ > 0.0) || !std::isfinite(delta_tau_)) {
    throw InvalidArgument(fmt::format("state width must be positive, got {}", delta_tau_));
  }
  if (!std::isfinite(t0_) || !std::isfinite(amplitude_)) {
    throw InvalidArgument("state center and amplitude must be finite");
  }
}

double eval(const LorentzianState& state, double t) {
  const double x = state.offset(t);
  return state.amplitude() / (1.0 + x * x);
}

double area(const LorentzianState& state) {
  return std::numbers::pi * state.amplitude() * state.delta_tau() / 2.0;
}

double interval_mean(const LorentzianState& state, double lo, double hi) {
  if (!(hi > lo)) {
    throw InvalidArgument("interval_mean needs lo < hi");
  }
  // atan(a) - atan(b) = atan((a - b) / (1 + a b)) when a b > -1; avoids
  // cancellation for intervals far out in the tails.
  const double a = state.offset(hi);
  const double b = state.offset(lo);
  const double prod = a * b;
  const double diff = prod > -1.0 ? std::atan((a - b) / (1.0 + prod)) : std::atan(a) - std::atan(b);
  return state.amplitude() * state.delta_tau() / (2.0 * (hi - lo)) * diff;
}

MultiLevelModel::MultiLevelModel(double baseline, std::vector<LorentzianState> states,
                                 TimeWindow window)
    : baseline_(baseline), states_(std::move(states)), window_(window) {
  if (!std::isfinite(baseline_)) throw InvalidArgument("model baseline must be finite");
  if (!(window_.hi >= window_.lo)) {
    throw InvalidArgument(fmt::format("model window [{}, {}] is inverted", window_.lo, window_.hi));
  }
  std::stable_sort(states_.begin(), states_.end(),
                   [](const auto& a, const auto& b) { return a.t0() < b.t0(); });
}

bool MultiLevelModel::states_within(double margin) const {
  return std::all_of(states_.begin(), states_.end(), [&](const LorentzianState& s) {
    return s.t0() >= window_.lo - margin && s.t0() <= window_.hi + margin;
  });
}

double eval_model(const MultiLevelModel& model, double t) {
  double sum = model.baseline();
  for (const auto& s : model.states()) sum += eval(s, t);
  return sum;
}

double interval_mean(const MultiLevelModel& model, double lo, double hi) {
  double sum = model.baseline();
  for (const auto& s : model.states()) sum += interval_mean(s, lo, hi);
  return sum;
}

WindowAverage window_average(const MultiLevelModel& model) {
  const double length = model.window().length();
  if (!(length > 0.0)) {
    throw InvalidArgument("window_average needs a window of positive length");
  }
  WindowAverage out;
  if (model.empty()) {
    out.grid_mean = model.baseline();
    out.grid_step = length;
    return out;
  }
  double min_width = model.states().front().delta_tau();
  double sum_m = 0.0;
  double sum_w = 0.0;
  for (const auto& s : model.states()) {
    min_width = std::min(min_width, s.delta_tau());
    sum_m += s.amplitude();
    sum_w += s.delta_tau();
  }
  const auto steps = static_cast<std::size_t>(std::ceil(length / (min_width / 10.0)));
  const double h = length / static_cast<double>(steps);
  double acc = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    acc += eval_model(model, model.window().lo + (static_cast<double>(i) + 0.5) * h);
  }
  out.grid_mean = acc / static_cast<double>(steps);
  out.grid_step = h;

  const double n = static_cast<double>(model.size());
  const double mean_spacing = length / n;
  out.analytic_estimate =
      model.baseline() + std::numbers::pi / 2.0 * (sum_m / n) * (sum_w / n) / mean_spacing;
  return out;
}

}  // namespace lorentzscope
