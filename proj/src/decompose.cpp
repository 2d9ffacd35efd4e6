#include "lorentzscope/decompose.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lorentzscope/error.hpp"

namespace lorentzscope {

std::string_view to_string(RenormMode mode) {
  return mode == RenormMode::kSubtract ? "subtract" : "divide";
}

RenormMode parse_renorm_mode(std::string_view text) {
  if (text == "subtract") return RenormMode::kSubtract;
  if (text == "divide") return RenormMode::kDivide;
  throw InvalidArgument(fmt::format("unknown renormalization mode '{}'", text));
}

namespace {

std::size_t kernel_channels(double window, double width) {
  auto n = static_cast<std::size_t>(std::floor(window / width + 1e-9));
  if (n % 2 == 0 && n > 0) --n;
  return n;
}

// Mirror an out-of-range index back into [0, n) without repeating the edge sample.
std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Linear interpolation of `coarse` (sampled at channel centers) onto the
// centers of `fine`, extrapolating the edge segments.
std::vector<double> interpolate_onto(const ChannelSeries& coarse, const ChannelSeries& fine) {
  const auto cv = coarse.values();
  std::vector<double> out(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    const double pos = (fine.center(k) - coarse.center(0)) / coarse.channel_width();
    std::size_t left = 0;
    if (pos > 0.0) {
      left = std::min(static_cast<std::size_t>(std::floor(pos)), cv.size() - 2);
    }
    const double frac = pos - static_cast<double>(left);
    out[k] = cv[left] + frac * (cv[left + 1] - cv[left]);
  }
  return out;
}

}  // namespace

ChannelSeries smooth(const ChannelSeries& series, double window) {
  const std::size_t n = kernel_channels(window, series.channel_width());
  if (n < 3) {
    throw InvalidArgument(fmt::format("smoothing window {} s is shorter than 3 channels of {} s",
                                      window, series.channel_width()));
  }
  const auto v = series.values();
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    double sum = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
      sum += v[mirror(static_cast<std::ptrdiff_t>(k) + j, v.size())];
    }
    out[k] = sum / static_cast<double>(n);
  }
  return ChannelSeries(series.channel_width(), series.origin(), std::move(out));
}

ChannelSeries renorm(const ChannelSeries& series, const ChannelSeries& background,
                     RenormMode mode) {
  if (!series.same_grid(background)) {
    throw InvalidArgument("renorm: series and background are on different grids");
  }
  const auto s = series.values();
  const auto b = background.values();
  std::vector<double> out(s.size());
  if (mode == RenormMode::kSubtract) {
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = s[k] - b[k];
  } else {
    if (std::any_of(b.begin(), b.end(), [](double x) { return !(x > 0.0); })) {
      throw PreconditionError("renorm: divide mode needs a strictly positive background");
    }
    const double scale = mean_of(b);
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = (s[k] / b[k] - 1.0) * scale;
  }
  return ChannelSeries(series.channel_width(), series.origin(), std::move(out));
}

std::vector<double> Decomposition::reconstruct() const {
  const auto g = gross.values();
  const auto i1 = intermediate1.values();
  const auto i2 = intermediate2.values();
  const auto f = fine.values();
  std::vector<double> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mode == RenormMode::kSubtract) {
      out[k] = g[k] + i1[k] + i2[k] + f[k];
    } else {
      const double u = unit_scale;
      out[k] = g[k] * (1.0 + i1[k] / u) * (1.0 + i2[k] / u) * (1.0 + f[k] / u);
    }
  }
  return out;
}

double Decomposition::reconstruction_error() const {
  const auto rec = reconstruct();
  const auto in = input.values();
  double max_err = 0.0;
  double max_in = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    max_err = std::max(max_err, std::abs(rec[k] - in[k]));
    max_in = std::max(max_in, std::abs(in[k]));
  }
  return max_in > 0.0 ? max_err / max_in : max_err;
}

Decomposition decompose(const TimeSeries& series, const DecomposeOptions& options) {
  const auto& sc = options.scales;
  if (!(sc.gross > sc.intermediate1 && sc.intermediate1 > sc.intermediate2 &&
        sc.intermediate2 > 0.0)) {
    throw InvalidArgument(fmt::format("scales must be strictly decreasing, got {}, {}, {}",
                                      sc.gross, sc.intermediate1, sc.intermediate2));
  }
  const double fine_dt = std::max(options.fine_interval, series.interval());
  if (options.gross_interval < fine_dt) {
    throw InvalidArgument("gross grid must be coarser than the fine grid");
  }
  const std::size_t needed_coarse = kernel_channels(sc.gross, options.gross_interval);
  const std::size_t per_coarse =
      static_cast<std::size_t>(std::llround(options.gross_interval / series.interval()));
  if (series.size() / std::max<std::size_t>(per_coarse, 1) < std::max<std::size_t>(needed_coarse, 2)) {
    throw PreconditionError(fmt::format(
        "series of {} s is too short to smooth at the {} s gross scale",
        static_cast<double>(series.size()) * series.interval(), sc.gross));
  }

  ChannelSeries input = resample(series, fine_dt);
  const ChannelSeries coarse = resample(series, options.gross_interval);
  const ChannelSeries coarse_smooth = smooth(coarse, sc.gross);
  ChannelSeries gross(fine_dt, input.origin(), interpolate_onto(coarse_smooth, input));

  const ChannelSeries r1 = renorm(input, gross, options.mode);
  const double w = fine_dt;
  const double o = input.origin();
  const std::size_t n = input.size();

  if (options.mode == RenormMode::kSubtract) {
    ChannelSeries i1 = smooth(r1, sc.intermediate1);
    ChannelSeries r2 = renorm(r1, i1, RenormMode::kSubtract);
    ChannelSeries i2 = smooth(r2, sc.intermediate2);
    ChannelSeries f = renorm(r2, i2, RenormMode::kSubtract);
    return Decomposition{std::move(input), std::move(gross), std::move(i1), std::move(i2),
                         std::move(f), options.mode, sc, 1.0};
  }

  // Divide mode: chain relative deviations, rescaled to index points by u.
  const double u = mean_of(gross.values());
  ChannelSeries i1 = smooth(r1, sc.intermediate1);
  std::vector<double> r2v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double denom = u + i1.values()[k];
    if (!(denom > 0.0)) {
      throw PreconditionError("divide mode: intermediate-I factor is not positive");
    }
    r2v[k] = ((u + r1.values()[k]) / denom - 1.0) * u;
  }
  ChannelSeries r2(w, o, std::move(r2v));
  ChannelSeries i2 = smooth(r2, sc.intermediate2);
  std::vector<double> fv(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double denom = u + i2.values()[k];
    if (!(denom > 0.0)) {
      throw PreconditionError("divide mode: intermediate-II factor is not positive");
    }
    fv[k] = ((u + r2.values()[k]) / denom - 1.0) * u;
  }
  ChannelSeries f(w, o, std::move(fv));
  return Decomposition{std::move(input), std::move(gross), std::move(i1), std::move(i2),
                       std::move(f), options.mode, sc, u};
}

}  // namespace lorentzscope
