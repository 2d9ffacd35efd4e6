#include "lorentzscope/stats.hpp"

#include <fmt/format.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lorentzscope/error.hpp"

namespace lorentzscope {

std::string_view to_string(EnsembleKind kind) {
  return kind == EnsembleKind::kSpacing ? "spacing" : "width";
}

EnsembleSample::EnsembleSample(std::vector<double> raw, EnsembleKind kind)
    : raw_(std::move(raw)), kind_(kind), mean_(0.0) {
  if (raw_.empty()) throw PreconditionError("ensemble sample is empty");
  for (double v : raw_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw PreconditionError(fmt::format("ensemble values must be positive, got {}", v));
    }
  }
  mean_ = std::accumulate(raw_.begin(), raw_.end(), 0.0) / static_cast<double>(raw_.size());
  normalized_.reserve(raw_.size());
  for (double v : raw_) normalized_.push_back(v / mean_);
}

EnsembleSample spacings(const MultiLevelModel& model) {
  if (model.size() < 2) {
    throw PreconditionError(
        fmt::format("spacings need at least 2 states, model has {}", model.size()));
  }
  const auto states = model.states();
  std::vector<double> out;
  out.reserve(states.size() - 1);
  for (std::size_t i = 1; i < states.size(); ++i) out.push_back(states[i].t0() - states[i - 1].t0());
  return EnsembleSample(std::move(out), EnsembleKind::kSpacing);
}

EnsembleSample widths(const MultiLevelModel& model) {
  if (model.empty()) throw PreconditionError("widths need at least 1 state");
  std::vector<double> out;
  out.reserve(model.size());
  for (const auto& s : model.states()) out.push_back(s.delta_tau());
  return EnsembleSample(std::move(out), EnsembleKind::kWidth);
}

namespace {

void require_nonnegative(double x) {
  if (!(x >= 0.0)) throw InvalidArgument(fmt::format("density argument must be >= 0, got {}", x));
}

void require_weibull(double b, double c) {
  if (!(b > 0.0 && c > 0.0)) {
    throw InvalidArgument(fmt::format("Weibull parameters must be positive, got b={} c={}", b, c));
  }
}

void require_chisq(double nu, double mean_x) {
  if (!(nu > 0.0 && mean_x > 0.0)) {
    throw InvalidArgument(
        fmt::format("chi-squared parameters must be positive, got nu={} mean={}", nu, mean_x));
  }
}

// Root of an increasing function on [lo, hi] in log space, by bisection.
template <typename F>
double log_bisect(F&& f, double lo, double hi) {
  double a = std::log(lo);
  double b = std::log(hi);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    if (f(std::exp(mid)) > 0.0) {
      b = mid;
    } else {
      a = mid;
    }
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace

double wigner_pdf(double x) {
  require_nonnegative(x);
  return std::numbers::pi / 2.0 * x * std::exp(-std::numbers::pi * x * x / 4.0);
}

double wigner_cdf(double x) {
  require_nonnegative(x);
  return -std::expm1(-std::numbers::pi * x * x / 4.0);
}

double weibull_pdf(double x, double b, double c) {
  require_nonnegative(x);
  require_weibull(b, c);
  if (x == 0.0) {
    if (c < 1.0) return std::numeric_limits<double>::infinity();
    return c == 1.0 ? 1.0 / b : 0.0;
  }
  const double z = x / b;
  return c / b * std::pow(z, c - 1.0) * std::exp(-std::pow(z, c));
}

double weibull_cdf(double x, double b, double c) {
  require_nonnegative(x);
  require_weibull(b, c);
  return -std::expm1(-std::pow(x / b, c));
}

double chisq_pdf(double x, double nu, double mean_x) {
  require_nonnegative(x);
  require_chisq(nu, mean_x);
  const double shape = nu / 2.0;
  const double rate = nu / (2.0 * mean_x);
  if (x == 0.0) {
    if (shape < 1.0) {
      throw InvalidArgument("chi-squared density with nu < 2 is unbounded at x = 0");
    }
    return shape == 1.0 ? rate : 0.0;
  }
  const double log_pdf =
      shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape);
  return std::exp(log_pdf);
}

double chisq_cdf(double x, double nu, double mean_x) {
  require_nonnegative(x);
  require_chisq(nu, mean_x);
  return boost::math::gamma_p(nu / 2.0, nu * x / (2.0 * mean_x));
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kWigner:
      return "wigner";
    case Family::kWeibull:
      return "weibull";
    case Family::kChiSquared:
      return "chisq";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  if (text == "wigner") return Family::kWigner;
  if (text == "weibull") return Family::kWeibull;
  if (text == "chisq" || text == "chi-squared") return Family::kChiSquared;
  throw InvalidArgument(fmt::format("unknown distribution family '{}'", text));
}

double DistributionFit::pdf(double x) const {
  switch (family) {
    case Family::kWigner:
      return wigner_pdf(x);
    case Family::kWeibull:
      return weibull_pdf(x, params.at(0), params.at(1));
    case Family::kChiSquared:
      return chisq_pdf(x, params.at(0), params.at(1));
  }
  return 0.0;
}

double DistributionFit::cdf(double x) const {
  switch (family) {
    case Family::kWigner:
      return wigner_cdf(x);
    case Family::kWeibull:
      return weibull_cdf(x, params.at(0), params.at(1));
    case Family::kChiSquared:
      return chisq_cdf(x, params.at(0), params.at(1));
  }
  return 0.0;
}

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n) {
  if (n == 0) throw InvalidArgument("ks_pvalue needs n >= 1");
  const double en = std::sqrt(static_cast<double>(n));
  return kolmogorov_q((en + 0.12 + 0.11 / en) * d);
}

DistributionFit fit_distribution(const EnsembleSample& sample, Family family) {
  const auto x = sample.normalized();
  if (x.size() < 5) {
    throw PreconditionError(
        fmt::format("distribution fit needs at least 5 values, got {}", x.size()));
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*hi - *lo <= 1e-12 * *hi) {
    throw PreconditionError("distribution fit on a degenerate sample (all values equal)");
  }
  const double n = static_cast<double>(x.size());
  double mean_log = 0.0;
  double mean_x = 0.0;
  for (double v : x) {
    mean_log += std::log(v);
    mean_x += v;
  }
  mean_log /= n;
  mean_x /= n;

  DistributionFit fit;
  fit.family = family;
  fit.n = x.size();
  switch (family) {
    case Family::kWigner:
      break;
    case Family::kWeibull: {
      // Profile-likelihood equation for the shape, increasing in c.
      const double log_max = std::log(*hi);
      auto shape_eq = [&](double c) {
        double s0 = 0.0;
        double s1 = 0.0;
        for (double v : x) {
          const double lv = std::log(v);
          const double wv = std::exp(c * (lv - log_max));
          s0 += wv;
          s1 += wv * lv;
        }
        return s1 / s0 - 1.0 / c - mean_log;
      };
      const double c = log_bisect(shape_eq, 1e-3, 1e3);
      double s = 0.0;
      for (double v : x) s += std::pow(v, c);
      const double b = std::pow(s / n, 1.0 / c);
      fit.params = {b, c};
      break;
    }
    case Family::kChiSquared: {
      const double target = std::log(mean_x) - mean_log;  // > 0 by Jensen
      auto nu_eq = [&](double nu) {
        return target - (std::log(nu / 2.0) - boost::math::digamma(nu / 2.0));
      };
      const double nu = log_bisect(nu_eq, 1e-4, 1e7);
      fit.params = {nu, mean_x};
      break;
    }
  }
  fit.ks_statistic = ks_statistic(x, [&](double v) { return fit.cdf(v); });
  fit.ks_pvalue = ks_pvalue(fit.ks_statistic, fit.n);
  return fit;
}

StrengthFunctionReport strength_function(const MultiLevelModel& model) {
  if (model.size() < 2) {
    throw PreconditionError(
        fmt::format("strength function needs at least 2 states, model has {}", model.size()));
  }
  const auto states = model.states();
  double sum_w = 0.0;
  for (const auto& s : states) sum_w += s.delta_tau();
  StrengthFunctionReport r;
  r.state_count = states.size();
  r.mean_width = sum_w / static_cast<double>(states.size());
  r.mean_spacing = (states.back().t0() - states.front().t0()) / static_cast<double>(states.size() - 1);
  r.ratio = r.mean_width / r.mean_spacing;
  r.ericson_regime = r.ratio > 1.0;
  r.window = model.window();
  return r;
}

StrengthFunctionReport pooled_strength_function(std::span<const MultiLevelModel> windows) {
  if (windows.empty()) throw InvalidArgument("pooled strength function needs at least one window");
  double sum_w = 0.0;
  double span = 0.0;
  std::size_t states = 0;
  std::size_t gaps = 0;
  TimeWindow all = windows.front().window();
  for (const auto& m : windows) {
    for (const auto& s : m.states()) sum_w += s.delta_tau();
    states += m.size();
    if (m.size() >= 2) {
      span += m.states().back().t0() - m.states().front().t0();
      gaps += m.size() - 1;
    }
    all.lo = std::min(all.lo, m.window().lo);
    all.hi = std::max(all.hi, m.window().hi);
  }
  if (gaps == 0) {
    throw PreconditionError("strength function needs a window with at least 2 states");
  }
  StrengthFunctionReport r;
  r.state_count = states;
  r.mean_width = sum_w / static_cast<double>(states);
  r.mean_spacing = span / static_cast<double>(gaps);
  r.ratio = r.mean_width / r.mean_spacing;
  r.ericson_regime = r.ratio > 1.0;
  r.window = all;
  return r;
}

EnsembleSample pooled_spacings(std::span<const MultiLevelModel> windows) {
  std::vector<double> raw;
  for (const auto& m : windows) {
    const auto states = m.states();
    for (std::size_t i = 1; i < states.size(); ++i) raw.push_back(states[i].t0() - states[i - 1].t0());
  }
  if (raw.empty()) throw PreconditionError("spacing ensemble needs a window with at least 2 states");
  return EnsembleSample(std::move(raw), EnsembleKind::kSpacing);
}

EnsembleSample pooled_widths(std::span<const MultiLevelModel> windows) {
  std::vector<double> raw;
  for (const auto& m : windows) {
    for (const auto& s : m.states()) raw.push_back(s.delta_tau());
  }
  if (raw.empty()) throw PreconditionError("width ensemble needs at least 1 state");
  return EnsembleSample(std::move(raw), EnsembleKind::kWidth);
}

RollingRatio rolling_ratio(std::span<const MultiLevelModel> windows) {
  if (windows.size() < 2) {
    throw InvalidArgument(
        fmt::format("rolling ratio needs at least 2 windows, got {}", windows.size()));
  }
  RollingRatio out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].size() < 2) {
      out.skipped.push_back(i);
      continue;
    }
    out.reports.push_back(strength_function(windows[i]));
  }
  if (!out.reports.empty()) {
    double mean = 0.0;
    for (const auto& r : out.reports) mean += r.ratio;
    mean /= static_cast<double>(out.reports.size());
    double var = 0.0;
    for (const auto& r : out.reports) var += (r.ratio - mean) * (r.ratio - mean);
    var /= static_cast<double>(out.reports.size());
    out.coefficient_of_variation = std::sqrt(var) / mean;
  }
  return out;
}

RollingRatio rolling_ratio(std::span<const FitResult> windows) {
  std::vector<MultiLevelModel> models;
  models.reserve(windows.size());
  for (const auto& w : windows) models.push_back(w.model);
  return rolling_ratio(std::span<const MultiLevelModel>(models));
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Histogram freedman_diaconis(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("histogram of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double lo = sorted.front();
  const double range = sorted.back() - lo;
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);

  std::size_t bins = 1;
  double width = range > 0.0 ? range : 1.0;
  if (range > 0.0) {
    if (iqr > 0.0) {
      width = 2.0 * iqr * std::cbrt(1.0 / n);
      bins = static_cast<std::size_t>(std::max(1.0, std::ceil(range / width)));
    } else {
      bins = static_cast<std::size_t>(std::ceil(std::log2(n))) + 1;
      width = range / static_cast<double>(bins);
    }
  }
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + static_cast<double>(i) * width);
  h.counts.assign(bins, 0);
  for (double v : sorted) {
    auto idx = static_cast<std::size_t>(std::floor((v - lo) / width));
    h.counts[std::min(idx, bins - 1)]++;
  }
  for (auto c : h.counts) h.density.push_back(static_cast<double>(c) / (n * width));
  return h;
}

}  // namespace lorentzscope
