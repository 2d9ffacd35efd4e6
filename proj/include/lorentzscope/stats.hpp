#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lorentzscope/fit.hpp"
#include "lorentzscope/lorentz.hpp"

namespace lorentzscope {

enum class EnsembleKind { kSpacing, kWidth };
std::string_view to_string(EnsembleKind kind);

// Positive raw values (seconds) and the same values divided by their mean.
class EnsembleSample {
 public:
  EnsembleSample(std::vector<double> raw, EnsembleKind kind);

  std::span<const double> raw() const { return raw_; }
  std::span<const double> normalized() const { return normalized_; }
  EnsembleKind kind() const { return kind_; }
  double mean() const { return mean_; }
  std::size_t size() const { return raw_.size(); }

 private:
  std::vector<double> raw_;
  std::vector<double> normalized_;
  EnsembleKind kind_;
  double mean_;
};

// Consecutive t0 differences of a model (n states give n - 1 spacings).
EnsembleSample spacings(const MultiLevelModel& model);
// Widths in t0 order.
EnsembleSample widths(const MultiLevelModel& model);

// Unit-mean Wigner surmise (pi/2) x exp(-pi x^2 / 4).
double wigner_pdf(double x);
double wigner_cdf(double x);

// Two-parameter Weibull (c / b^c) x^(c-1) exp(-(x/b)^c).
double weibull_pdf(double x, double b, double c);
double weibull_cdf(double x, double b, double c);

// Chi-squared width law with nu degrees of freedom scaled to mean mean_x,
// normalized with the complete gamma function Gamma(nu/2).
double chisq_pdf(double x, double nu, double mean_x);
double chisq_cdf(double x, double nu, double mean_x);

enum class Family { kWigner, kWeibull, kChiSquared };
std::string_view to_string(Family family);
Family parse_family(std::string_view text);

struct DistributionFit {
  Family family = Family::kWigner;
  // Weibull: {b, c}. Chi-squared: {nu, mean_x}. Wigner: empty.
  std::vector<double> params;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  std::size_t n = 0;

  double pdf(double x) const;
  double cdf(double x) const;
};

// Two-sided one-sample Kolmogorov-Smirnov distance between `sample` and a CDF.
template <typename Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf);

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);
// p-value for distance d over n points with Stephens' small-sample correction.
double ks_pvalue(double d, std::size_t n);

// Maximum-likelihood parameters on the normalized sample plus the KS test
// against the fitted CDF. Needs at least 5 values that are not all equal.
DistributionFit fit_distribution(const EnsembleSample& sample, Family family);

struct StrengthFunctionReport {
  double mean_width = 0.0;
  double mean_spacing = 0.0;
  double ratio = 0.0;
  bool ericson_regime = false;
  TimeWindow window;
  std::size_t state_count = 0;
};

StrengthFunctionReport strength_function(const MultiLevelModel& model);

// One report over several windows: mean width over every state, mean spacing
// as the summed first-to-last spans over the summed gaps. Windows with fewer
// than 2 states contribute widths only. window spans all inputs.
StrengthFunctionReport pooled_strength_function(std::span<const MultiLevelModel> windows);

// Raw spacings (within each window) and widths of several windows, pooled
// before normalization.
EnsembleSample pooled_spacings(std::span<const MultiLevelModel> windows);
EnsembleSample pooled_widths(std::span<const MultiLevelModel> windows);

struct RollingRatio {
  std::vector<StrengthFunctionReport> reports;
  // Indices of input windows skipped for having fewer than 2 states.
  std::vector<std::size_t> skipped;
  // Population standard deviation over mean of the per-window ratios.
  double coefficient_of_variation = 0.0;
};

RollingRatio rolling_ratio(std::span<const FitResult> windows);
RollingRatio rolling_ratio(std::span<const MultiLevelModel> windows);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  // counts / (n * bin width), comparable with a density.
  std::vector<double> density;
};

// Freedman-Diaconis bin width 2 IQR n^(-1/3); Sturges' rule when the IQR is zero.
Histogram freedman_diaconis(std::span<const double> values);

template <typename Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace lorentzscope
