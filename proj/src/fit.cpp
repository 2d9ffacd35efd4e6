#include "lorentzscope/fit.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "lorentzscope/error.hpp"

namespace lorentzscope {

void FitConfig::validate() const {
  if (!(min_width > 0.0 && min_width < max_width)) {
    throw InvalidArgument(
        fmt::format("fit config needs 0 < min_width < max_width, got {} and {}", min_width, max_width));
  }
  if (max_states < 1) throw InvalidArgument("fit config needs max_states >= 1");
  if (residual_tol && !(*residual_tol > 0.0)) {
    throw InvalidArgument("fit config residual_tol must be positive");
  }
  if (!(min_peak_height >= 0.0)) throw InvalidArgument("min_peak_height must be non-negative");
  if (seed_snap < 0.0) throw InvalidArgument("seed_snap must be non-negative");
  if (!(relative_floor > 0.0)) throw InvalidArgument("relative_floor must be positive");
  if (baseline_knot_spacing < 0.0) throw InvalidArgument("baseline_knot_spacing must be non-negative");
}

StateGradient jacobian(const LorentzianState& state, double t) {
  const double x = state.offset(t);
  const double q = 1.0 + x * x;
  const double m = state.amplitude();
  const double w = state.delta_tau();
  return {1.0 / q, m * (4.0 * x / w) / (q * q), m * (2.0 * x * x / w) / (q * q)};
}

StateGradient interval_mean_gradient(const LorentzianState& state, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("interval_mean_gradient needs lo < hi");
  const double a = state.offset(hi);
  const double b = state.offset(lo);
  const double prod = a * b;
  const double d = prod > -1.0 ? std::atan((a - b) / (1.0 + prod)) : std::atan(a) - std::atan(b);
  const double h = hi - lo;
  const double m = state.amplitude();
  const double w = state.delta_tau();
  const double qa = 1.0 + a * a;
  const double qb = 1.0 + b * b;
  StateGradient g;
  g.d_amplitude = w / (2.0 * h) * d;
  g.d_t0 = -m / h * (1.0 / qa - 1.0 / qb);
  g.d_width = m / (2.0 * h) * (d - a / qa + b / qb);
  return g;
}

double rms(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

namespace {

double median(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Half width (seconds) on one side of channel `peak`, measured above
// `base`. Walks outward to the half-height crossing; if the values turn up
// first (an unresolved neighbor), falls back to the Lorentzian relation
// v(d) / v(0) = 1 / (1 + (2d / width)^2) using the adjacent channel.
double half_width_side(std::span<const double> v, std::size_t peak, double base, double w, int dir) {
  const double top = v[peak] - base;
  const double half = 0.5 * top;
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  auto at = [&](std::ptrdiff_t k) { return v[static_cast<std::size_t>(k)] - base; };
  std::ptrdiff_t k = static_cast<std::ptrdiff_t>(peak);
  while (true) {
    const std::ptrdiff_t next = k + dir;
    if (next < 0 || next >= n) return -1.0;
    if (at(next) <= half) {
      const double frac = (at(k) - half) / (at(k) - at(next));
      return (static_cast<double>(std::abs(k - static_cast<std::ptrdiff_t>(peak))) + frac) * w;
    }
    if (at(next) > at(k)) break;
    k = next;
  }
  const std::ptrdiff_t adj = static_cast<std::ptrdiff_t>(peak) + dir;
  const double ratio = std::clamp(at(adj) / top, 0.05, 0.95);
  return w / std::sqrt(1.0 / ratio - 1.0);
}

// Full width at half height around channel `peak`, in seconds.
double estimate_width(std::span<const double> v, std::size_t peak, double base, double w) {
  const double left = half_width_side(v, peak, base, w, -1);
  const double right = half_width_side(v, peak, base, w, +1);
  if (left > 0.0 && right > 0.0) return left + right;
  if (left > 0.0) return 2.0 * left;
  if (right > 0.0) return 2.0 * right;
  return w;
}

double seed_center(const ChannelSeries& series, std::size_t k, const FitConfig& config) {
  double t = series.center(k);
  if (config.seed_snap > 0.0) {
    t = std::round(t / config.seed_snap) * config.seed_snap;
    t = std::clamp(t, series.origin(), series.end());
  }
  return t;
}

// Parameter layout: [baseline coefficients..., t0_0, width_0, M_0, t0_1, ...].
// The baseline is one constant, or the values at evenly spaced knots of a
// piecewise-linear curve evaluated at channel centers.
class Problem {
 public:
  Problem(const ChannelSeries& series, const FitConfig& config)
      : series_(series), config_(config), y_(series.size()), sw_(series.size()) {
    const auto v = series.values();
    const auto rows = static_cast<Eigen::Index>(v.size());
    const double spacing = config.baseline_knot_spacing;
    const double span = series.end() - series.origin();
    if (spacing > 0.0 && span > spacing) {
      const auto intervals = static_cast<Eigen::Index>(std::ceil(span / spacing - 1e-9));
      const double step = span / static_cast<double>(intervals);
      basis_.setZero(rows, intervals + 1);
      for (Eigen::Index j = 0; j <= intervals; ++j) knots_.push_back(series.origin() + static_cast<double>(j) * step);
      for (Eigen::Index k = 0; k < rows; ++k) {
        const double u = (series.center(static_cast<std::size_t>(k)) - series.origin()) / step;
        const auto j = std::min(static_cast<Eigen::Index>(u), intervals - 1);
        const double f = u - static_cast<double>(j);
        basis_(k, j) = 1.0 - f;
        basis_(k, j + 1) = f;
      }
    } else {
      basis_.setOnes(rows, 1);
      knots_.push_back(series.origin());
    }
    for (std::size_t k = 0; k < v.size(); ++k) y_[static_cast<Eigen::Index>(k)] = v[k];
    sw_.setOnes();
    const bool positive = y_.size() > 0 && y_.minCoeff() > 0.0;
    if (config.weighting == Weighting::kRelative ||
        (config.weighting == Weighting::kAuto && positive)) {
      const double floor = std::max(config.relative_floor * y_.cwiseAbs().maxCoeff(), 1e-12);
      for (Eigen::Index k = 0; k < y_.size(); ++k) sw_[k] = 1.0 / (std::abs(y_[k]) + floor);
      sw_ /= sw_.maxCoeff();
    }
  }

  const Eigen::VectorXd& data() const { return y_; }
  const Eigen::VectorXd& sqrt_weights() const { return sw_; }
  Eigen::Index rows() const { return y_.size(); }
  Eigen::Index baseline_size() const { return basis_.cols(); }
  const std::vector<double>& knots() const { return knots_; }
  std::size_t states(const Eigen::VectorXd& p) const {
    return static_cast<std::size_t>((p.size() - baseline_size()) / 3);
  }
  Eigen::Index slot(std::size_t state) const { return baseline_size() + static_cast<Eigen::Index>(3 * state); }
  Eigen::VectorXd baseline(const Eigen::VectorXd& p) const { return basis_ * p.head(baseline_size()); }
  double center(Eigen::Index k) const { return series_.center(static_cast<std::size_t>(k)); }

  // Weighted residual sqrt(w) * (y - model).
  void residual(const Eigen::VectorXd& p, Eigen::VectorXd& out) const {
    predict(p, out);
    out = sw_.cwiseProduct(y_ - out);
  }

  void predict(const Eigen::VectorXd& p, Eigen::VectorXd& out) const {
    out = basis_ * p.head(baseline_size());
    for (Eigen::Index s = baseline_size(); s + 2 < p.size(); s += 3) {
      const LorentzianState st(p[s], p[s + 1], p[s + 2]);
      for (Eigen::Index k = 0; k < rows(); ++k) out[k] += value(st, static_cast<std::size_t>(k));
    }
  }

  double ssr(const Eigen::VectorXd& p, Eigen::VectorXd& scratch) const {
    residual(p, scratch);
    return scratch.squaredNorm();
  }

  void jacobian(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    jac.resize(rows(), p.size());
    jac.leftCols(baseline_size()) = basis_;
    for (Eigen::Index s = baseline_size(); s + 2 < p.size(); s += 3) {
      const LorentzianState st(p[s], p[s + 1], p[s + 2]);
      for (Eigen::Index k = 0; k < rows(); ++k) {
        const StateGradient g = gradient(st, static_cast<std::size_t>(k));
        jac(k, s) = g.d_t0;
        jac(k, s + 1) = g.d_width;
        jac(k, s + 2) = g.d_amplitude;
      }
    }
    jac = sw_.asDiagonal() * jac;
  }

  void project(Eigen::VectorXd& p) const {
    for (Eigen::Index s = baseline_size(); s + 2 < p.size(); s += 3) {
      p[s] = std::clamp(p[s], series_.origin(), series_.end());
      p[s + 1] = std::clamp(p[s + 1], config_.min_width, config_.max_width);
      if (config_.positive_amplitudes) p[s + 2] = std::max(p[s + 2], 0.0);
    }
  }

  void bounds(Eigen::Index size, Eigen::VectorXd& lower, Eigen::VectorXd& upper) const {
    const double inf = std::numeric_limits<double>::infinity();
    lower.setConstant(size, -inf);
    upper.setConstant(size, inf);
    for (Eigen::Index s = baseline_size(); s + 2 < size; s += 3) {
      lower[s] = series_.origin();
      upper[s] = series_.end();
      lower[s + 1] = config_.min_width;
      upper[s + 1] = config_.max_width;
      if (config_.positive_amplitudes) lower[s + 2] = 0.0;
    }
  }

  // Mean (or center value) of a unit-amplitude state over channel k.
  double unit_response(double t0, double width, std::size_t k) const {
    return value(LorentzianState(t0, width, 1.0), k);
  }

 private:
  double value(const LorentzianState& st, std::size_t k) const {
    if (config_.channel_average) {
      return interval_mean(st, series_.left_edge(k), series_.left_edge(k + 1));
    }
    return eval(st, series_.center(k));
  }

  StateGradient gradient(const LorentzianState& st, std::size_t k) const {
    if (config_.channel_average) {
      return interval_mean_gradient(st, series_.left_edge(k), series_.left_edge(k + 1));
    }
    return lorentzscope::jacobian(st, series_.center(k));
  }

  const ChannelSeries& series_;
  const FitConfig& config_;
  Eigen::VectorXd y_;
  Eigen::VectorXd sw_;
  Eigen::MatrixXd basis_;
  std::vector<double> knots_;
};

struct PassOutcome {
  double ssr = 0.0;
  std::size_t iterations = 0;
  bool singular = false;
};

// One damped Gauss-Newton run to a local minimum. Accepted steps strictly
// decrease the sum of squared residuals.
PassOutcome refine(const Problem& problem, Eigen::VectorXd& p, std::size_t budget) {
  Eigen::VectorXd scratch(problem.rows());
  Eigen::MatrixXd jac;
  PassOutcome out;
  out.ssr = problem.ssr(p, scratch);
  double lambda = 1e-3;
  const Eigen::Index m = p.size();
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  problem.bounds(m, lower, upper);

  while (out.iterations < budget && out.ssr > 0.0) {
    ++out.iterations;
    problem.residual(p, scratch);
    const Eigen::VectorXd resid = scratch;
    problem.jacobian(p, jac);
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * resid;
    const double diag_floor = std::max(normal.diagonal().maxCoeff(), 1.0) * 1e-12;

    // Parameters sitting on a bound with the descent direction pointing
    // outward are held fixed for this step.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool pinned = (p[i] <= lower[i] && grad[i] < 0.0) || (p[i] >= upper[i] && grad[i] > 0.0);
      if (!pinned) active.push_back(i);
    }
    if (active.empty()) break;
    const Eigen::MatrixXd reduced = normal(active, active);
    const Eigen::VectorXd reduced_grad = grad(active);

    bool accepted = false;
    double improvement = 0.0;
    while (lambda <= 1e12) {
      Eigen::MatrixXd damped = reduced;
      for (Eigen::Index i = 0; i < damped.rows(); ++i) {
        damped(i, i) += lambda * std::max(reduced(i, i), diag_floor);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = ldlt.solve(reduced_grad);
      Eigen::VectorXd trial = p;
      for (std::size_t i = 0; i < active.size(); ++i) trial[active[i]] += step[static_cast<Eigen::Index>(i)];
      problem.project(trial);
      if (!trial.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const double trial_ssr = problem.ssr(trial, scratch);
      if (trial_ssr < out.ssr) {
        improvement = out.ssr - trial_ssr;
        p = std::move(trial);
        out.ssr = trial_ssr;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // Damping exhausted without a decrease: a local minimum, or a normal
      // matrix that never became positive definite.
      Eigen::LDLT<Eigen::MatrixXd> check(normal);
      out.singular = check.info() != Eigen::Success || !check.isPositive() ||
                     check.vectorD().minCoeff() <= 1e-14 * std::max(1.0, check.vectorD().maxCoeff());
      break;
    }
    if (improvement <= 1e-11 * (out.ssr + improvement)) break;
  }
  return out;
}

Eigen::VectorXd remove_state(const Problem& problem, const Eigen::VectorXd& p, std::size_t idx) {
  Eigen::VectorXd q(p.size() - 3);
  const Eigen::Index start = problem.slot(idx);
  q.head(start) = p.head(start);
  q.tail(p.size() - start - 3) = p.tail(p.size() - start - 3);
  return q;
}

Eigen::VectorXd append_state(const Eigen::VectorXd& p, double t0, double width, double amp) {
  Eigen::VectorXd q(p.size() + 3);
  q.head(p.size()) = p;
  q[p.size()] = t0;
  q[p.size() + 1] = width;
  q[p.size() + 2] = amp;
  return q;
}

constexpr std::size_t kCandidatePeaks = 4;
// Once the model holds states, residual candidates may be smaller than a
// fresh peak; the information criterion decides whether they stay.
constexpr double kCandidateFloor = 0.2;
constexpr double kPruneFraction = 0.1;
constexpr std::size_t kSplitCandidates = 2;
constexpr std::size_t kScreenIterations = 25;
constexpr std::size_t kPatience = 6;

// States whose span (t0 +/- width) carries the most weighted residual
// energy, largest first.
std::vector<std::size_t> split_targets(const Problem& problem, const Eigen::VectorXd& p, std::size_t limit) {
  Eigen::VectorXd resid(problem.rows());
  problem.residual(p, resid);
  std::vector<std::pair<double, std::size_t>> energy;
  for (std::size_t i = 0; i < problem.states(p); ++i) {
    const Eigen::Index s = problem.slot(i);
    double e = 0.0;
    for (Eigen::Index k = 0; k < problem.rows(); ++k) {
      if (std::abs(problem.center(k) - p[s]) <= p[s + 1]) e += resid[k] * resid[k];
    }
    energy.emplace_back(e, i);
  }
  std::stable_sort(energy.begin(), energy.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < energy.size() && j < limit; ++j) out.push_back(energy[j].second);
  return out;
}

// Replaces state idx by two states of half the width a quarter width to
// either side, sharing its area.
Eigen::VectorXd split_state(const Problem& problem, const Eigen::VectorXd& p, std::size_t idx,
                            const FitConfig& config) {
  const Eigen::Index s = problem.slot(idx);
  const double t0 = p[s];
  const double width = p[s + 1];
  const double amp = p[s + 2];
  const double half = std::max(0.5 * width, config.min_width);
  Eigen::VectorXd q = p;
  q[s] = t0 - 0.25 * width;
  q[s + 1] = half;
  q[s + 2] = amp * width / (2.0 * half);
  q = append_state(q, t0 + 0.25 * width, half, amp * width / (2.0 * half));
  return q;
}

// Orders the state triplets by center so they line up with the model.
void sort_states(const Problem& problem, Eigen::VectorXd& p) {
  std::vector<std::array<double, 3>> triplets;
  for (std::size_t i = 0; i < problem.states(p); ++i) {
    const Eigen::Index s = problem.slot(i);
    triplets.push_back({p[s], p[s + 1], p[s + 2]});
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) p[problem.slot(i) + j] = triplets[i][static_cast<std::size_t>(j)];
  }
}

// Merges states whose centers are within half a channel (keeping the larger
// amplitude) and drops states whose amplitude fell below a tenth of
// min_peak_height.
bool tidy_states(const Problem& problem, Eigen::VectorXd& p, double channel_width, const FitConfig& config) {
  bool changed = false;
  const double tiny = std::max(kPruneFraction * config.min_peak_height, 1e-9);
  for (std::size_t i = 0; i < problem.states(p); ++i) {
    const double amp = p[problem.slot(i) + 2];
    if (std::abs(amp) < tiny) {
      p = remove_state(problem, p, i);
      --i;
      changed = true;
    }
  }
  bool merged = true;
  while (merged) {
    merged = false;
    const std::size_t n = problem.states(p);
    for (std::size_t i = 0; i < n && !merged; ++i) {
      for (std::size_t j = i + 1; j < n && !merged; ++j) {
        const Eigen::Index ii = problem.slot(i);
        const Eigen::Index jj = problem.slot(j);
        if (std::abs(p[ii] - p[jj]) < 0.5 * channel_width) {
          p = remove_state(problem, p, std::abs(p[ii + 2]) >= std::abs(p[jj + 2]) ? j : i);
          merged = true;
          changed = true;
        }
      }
    }
  }
  return changed;
}

struct ResidualPeak {
  double t0;
  double width;
  double amplitude;
};

// Candidate states at the largest local maxima of the weighted residual,
// strongest first. A candidate must leave at least floor_fraction of the
// bump a state of height min_peak_height and minimum width would leave.
std::vector<ResidualPeak> residual_peaks(const Problem& problem, const ChannelSeries& series,
                                         const Eigen::VectorXd& p, const FitConfig& config,
                                         std::size_t limit, double floor_fraction) {
  Eigen::VectorXd model(problem.rows());
  problem.predict(p, model);
  const Eigen::VectorXd resid = problem.data() - model;
  std::vector<double> r(resid.data(), resid.data() + resid.size());
  double sign = 1.0;
  if (!config.positive_amplitudes) {
    // Follow the largest excursion of either sign; flip so it reads as a maximum.
    Eigen::Index at = 0;
    resid.cwiseProduct(problem.sqrt_weights()).cwiseAbs().maxCoeff(&at);
    if (r[static_cast<std::size_t>(at)] < 0.0) {
      sign = -1.0;
      for (double& v : r) v = -v;
    }
  }
  const auto& sw = problem.sqrt_weights();
  std::vector<std::pair<double, std::size_t>> maxima;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const bool left_ok = k == 0 || r[k] > r[k - 1];
    const bool right_ok = k + 1 == r.size() || r[k] >= r[k + 1];
    if (!left_ok || !right_ok || !(r[k] > 0.0)) continue;
    const double floor =
        floor_fraction * config.min_peak_height * problem.unit_response(series.center(k), config.min_width, k);
    if (r[k] < floor) continue;
    maxima.emplace_back(r[k] * sw[static_cast<Eigen::Index>(k)], k);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (maxima.size() > limit) maxima.resize(limit);

  std::vector<ResidualPeak> out;
  for (const auto& [score, k] : maxima) {
    const double t0 = seed_center(series, k, config);
    const double width = std::clamp(estimate_width(r, k, 0.0, series.channel_width()),
                                    config.min_width, config.max_width);
    const double unit = problem.unit_response(t0, width, k);
    const double amp = unit > 0.0 ? r[k] / unit : r[k];
    out.push_back({t0, width, sign * amp});
  }
  return out;
}

std::optional<std::vector<StateUncertainty>> uncertainties(const Problem& problem,
                                                           const Eigen::VectorXd& p, double ssr) {
  const auto n = problem.rows();
  const auto m = p.size();
  if (m <= 1 || n <= m) return std::nullopt;
  Eigen::MatrixXd jac;
  problem.jacobian(p, jac);
  const Eigen::MatrixXd normal = jac.transpose() * jac;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    return std::nullopt;
  }
  const Eigen::MatrixXd cov =
      ldlt.solve(Eigen::MatrixXd::Identity(m, m)) * (ssr / static_cast<double>(n - m));
  std::vector<StateUncertainty> out;
  for (Eigen::Index s = problem.baseline_size(); s + 2 < m; s += 3) {
    out.push_back({std::sqrt(std::max(cov(s, s), 0.0)), std::sqrt(std::max(cov(s + 1, s + 1), 0.0)),
                   std::sqrt(std::max(cov(s + 2, s + 2), 0.0))});
  }
  return out;
}

}  // namespace

std::vector<LorentzianState> detect_peaks(const ChannelSeries& series, const FitConfig& config) {
  config.validate();
  const auto v = series.values();
  std::vector<LorentzianState> seeds;
  if (v.size() < 2) return seeds;
  const double base = median(v);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const bool left_ok = k == 0 || v[k] > v[k - 1];
    const bool right_ok = k + 1 == v.size() || v[k] >= v[k + 1];
    if (!left_ok || !right_ok) continue;
    const double height = v[k] - base;
    if (!(height >= config.min_peak_height) || height <= 0.0) continue;
    const double width = std::clamp(estimate_width(v, k, base, series.channel_width()),
                                    config.min_width, config.max_width);
    seeds.emplace_back(seed_center(series, k, config), width, height);
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const auto& a, const auto& b) { return a.t0() < b.t0(); });
  return seeds;
}

FitResult fit_multilevel(const ChannelSeries& series, const std::vector<LorentzianState>& seeds,
                         const FitConfig& config) {
  config.validate();
  const TimeWindow window{series.origin(), series.end()};
  for (const auto& s : seeds) {
    if (!window.contains(s.t0())) {
      throw InvalidArgument(fmt::format("seed at t0 = {} s lies outside the fit window [{}, {}]",
                                        s.t0(), window.lo, window.hi));
    }
  }
  const auto values = series.values();
  const double input_rms = rms(values);
  const double tol = config.residual_tol.value_or(std::max(kDefaultResidualFraction * input_rms, 1e-12));
  const Problem problem(series, config);
  const double n = static_cast<double>(series.size());
  Eigen::VectorXd scratch(problem.rows());
  auto raw_rms = [&](const Eigen::VectorXd& params) {
    problem.predict(params, scratch);
    return std::sqrt((problem.data() - scratch).squaredNorm() / n);
  };

  Eigen::VectorXd p(problem.baseline_size());
  // States only add on top of the baseline, so start it at the floor of the data.
  p.setConstant(config.positive_amplitudes ? *std::min_element(values.begin(), values.end()) : median(values));
  // At most max_states seeds, tallest first.
  std::vector<LorentzianState> kept(seeds.begin(), seeds.end());
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.amplitude()) > std::abs(b.amplitude()); });
  if (kept.size() > config.max_states) kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(config.max_states), kept.end());
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.t0() < b.t0(); });
  for (const auto& s : kept) {
    double amp = s.amplitude();
    if (config.positive_amplitudes) amp = std::max(amp, 0.0);
    p = append_state(p, s.t0(), std::clamp(s.delta_tau(), config.min_width, config.max_width), amp);
  }
  problem.project(p);

  FitResult result;
  if (seeds.empty() && residual_peaks(problem, series, p, config, 1, 1.0).empty()) {
    result.model = MultiLevelModel(0.0, {}, window);
    result.rms_residual = input_rms;
    result.converged = false;
    result.stop_reason = "empty";
    return result;
  }

  std::size_t iterations = 0;
  bool singular = false;
  auto converge = [&](Eigen::VectorXd& params) {
    tidy_states(problem, params, series.channel_width(), config);
    PassOutcome pass;
    // Refine, tidy and refine again until tidying leaves the state set alone.
    for (int round = 0; round < 8; ++round) {
      const std::size_t budget = config.max_iterations > iterations ? config.max_iterations - iterations : 0;
      pass = refine(problem, params, budget);
      iterations += pass.iterations;
      if (!tidy_states(problem, params, series.channel_width(), config) || iterations >= config.max_iterations) {
        break;
      }
    }
    return pass;
  };

  PassOutcome current = converge(p);
  singular = current.singular;
  // Bayesian information criterion of a converged state set. Additions are
  // kept while some later set within kPatience additions scores better, so
  // a pair of states that only pays off together is still found.
  auto score = [&](const PassOutcome& pass, const Eigen::VectorXd& params) {
    return n * std::log(std::max(pass.ssr, 1e-300)) + 3.0 * static_cast<double>(problem.states(params)) * std::log(n);
  };
  Eigen::VectorXd best = p;
  PassOutcome best_pass = current;
  double best_score = score(current, p);
  std::size_t misses = 0;
  std::string reason;
  while (true) {
    if (raw_rms(p) <= tol) {
      reason = "residual_tol";
      best = p;
      best_pass = current;
      break;
    }
    if (iterations >= config.max_iterations) {
      reason = "max_iterations";
      break;
    }
    if (problem.states(p) >= config.max_states) {
      reason = "max_states";
      break;
    }
    const auto peaks = residual_peaks(problem, series, p, config, kCandidatePeaks, kCandidateFloor);
    if (peaks.empty()) {
      reason = singular ? "singular" : "no_residual_peak";
      break;
    }
    std::vector<Eigen::VectorXd> trials;
    for (const auto& peak : peaks) trials.push_back(append_state(p, peak.t0, peak.width, peak.amplitude));
    for (std::size_t idx : split_targets(problem, p, kSplitCandidates)) {
      trials.push_back(split_state(problem, p, idx, config));
    }
    // Screen every candidate with a short refinement, then fully converge
    // them best first until one lowers the sum of squares.
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      problem.project(trials[i]);
      const std::size_t budget =
          std::min(kScreenIterations, config.max_iterations > iterations ? config.max_iterations - iterations : 0);
      const PassOutcome pass = refine(problem, trials[i], budget);
      iterations += pass.iterations;
      order.emplace_back(pass.ssr, i);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    bool advanced = false;
    for (const auto& [screened, i] : order) {
      const PassOutcome pass = converge(trials[i]);
      if (pass.ssr < current.ssr * (1.0 - 1e-9)) {
        p = std::move(trials[i]);
        current = pass;
        singular = pass.singular;
        advanced = true;
        break;
      }
      if (iterations >= config.max_iterations) break;
    }
    if (!advanced) {
      reason = "no_improvement";
      break;
    }
    const double s_now = score(current, p);
    if (s_now < best_score) {
      best = p;
      best_pass = current;
      best_score = s_now;
      misses = 0;
    } else if (++misses >= kPatience) {
      reason = "no_improvement";
      break;
    }
  }
  p = std::move(best);
  current = best_pass;

  sort_states(problem, p);
  std::vector<LorentzianState> states;
  for (std::size_t i = 0; i < problem.states(p); ++i) {
    const Eigen::Index s = problem.slot(i);
    states.emplace_back(p[s], p[s + 1], p[s + 2]);
  }
  const Eigen::VectorXd curve = problem.baseline(p);
  result.model = MultiLevelModel(curve.mean(), std::move(states), window);
  if (problem.baseline_size() > 1) {
    for (std::size_t j = 0; j < problem.knots().size(); ++j) {
      result.baseline_knots.push_back({problem.knots()[j], p[static_cast<Eigen::Index>(j)]});
    }
  }
  result.rms_residual = raw_rms(p);
  result.iterations = iterations;
  result.converged =
      reason == "residual_tol" || reason == "no_residual_peak" || reason == "no_improvement";
  result.stop_reason = reason;
  result.uncertainties = uncertainties(problem, p, current.ssr);
  return result;
}

FitResult fit_component(const ChannelSeries& series, const FitConfig& config) {
  return fit_multilevel(series, detect_peaks(series, config), config);
}

std::vector<TileFit> fit_tiles(const ChannelSeries& series, const FitConfig& config,
                               const TileOptions& options) {
  config.validate();
  const double w = series.channel_width();
  if (!(options.length >= w)) {
    throw InvalidArgument(fmt::format("tile length {} s is shorter than one channel", options.length));
  }
  if (options.margin < 0.0) throw InvalidArgument("tile margin must be non-negative");
  const auto per_tile = static_cast<std::size_t>(std::floor(options.length / w + 1e-9));
  const auto pad = static_cast<std::size_t>(std::ceil(options.margin / w - 1e-9));

  std::vector<TileFit> out;
  for (std::size_t first = 0; first < series.size(); first += per_tile) {
    const std::size_t last = std::min(first + per_tile, series.size());
    out.push_back({TimeWindow{series.left_edge(first), series.left_edge(last)}, {}});
  }

  auto run = [&](std::size_t i) {
    const std::size_t first = i * per_tile;
    const std::size_t last = std::min(first + per_tile, series.size());
    const std::size_t lo = first > pad ? first - pad : 0;
    const std::size_t hi = std::min(last + pad, series.size());
    FitResult r = fit_component(series.slice(lo, hi - lo), config);
    const TimeWindow win = out[i].window;
    std::vector<LorentzianState> kept;
    std::vector<StateUncertainty> kept_errors;
    const auto states = r.model.states();
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (!(states[k].t0() >= win.lo && states[k].t0() < win.hi)) continue;
      kept.push_back(states[k]);
      if (r.uncertainties) kept_errors.push_back((*r.uncertainties)[k]);
    }
    r.model = MultiLevelModel(r.model.baseline(), std::move(kept), win);
    if (r.uncertainties) r.uncertainties = std::move(kept_errors);
    out[i].result = std::move(r);
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, out.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) run(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> workers;
  for (std::size_t j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < out.size(); i = next++) {
        try {
          run(i);
        } catch (...) {
          std::lock_guard<std::mutex> hold(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace lorentzscope
