#include "lorentzscope/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "lorentzscope/error.hpp"
#include "text_util.hpp"

namespace lorentzscope {

TimeSeries::TimeSeries(double t_start, double interval, std::vector<double> values)
    : t_start_(t_start), interval_(interval), values_(std::move(values)) {
  if (!(interval_ > 0.0) || !std::isfinite(interval_)) {
    throw InvalidArgument(fmt::format("time series interval must be positive, got {}", interval_));
  }
  if (values_.size() < 2) {
    throw InvalidArgument("time series needs at least 2 samples");
  }
}

ChannelSeries::ChannelSeries(double channel_width, double origin, std::vector<double> values)
    : width_(channel_width), origin_(origin), values_(std::move(values)) {
  if (!(width_ > 0.0) || !std::isfinite(width_)) {
    throw InvalidArgument(fmt::format("channel width must be positive, got {}", width_));
  }
  if (values_.empty()) {
    throw InvalidArgument("channel series is empty");
  }
}

bool ChannelSeries::same_grid(const ChannelSeries& other) const {
  const double tol = 1e-9 * width_;
  return values_.size() == other.values_.size() && std::abs(width_ - other.width_) <= tol &&
         std::abs(origin_ - other.origin_) <= tol;
}

ChannelSeries ChannelSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > values_.size() || count == 0) {
    throw InvalidArgument(fmt::format("channel slice [{}, {}) out of range (size {})", first,
                                      first + count, values_.size()));
  }
  std::vector<double> sub(values_.begin() + static_cast<std::ptrdiff_t>(first),
                          values_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return ChannelSeries(width_, left_edge(first), std::move(sub));
}

std::string LoadReport::summary() const {
  return fmt::format("rows read: {}\ngaps filled: {}\ninferred interval: {} s\n", rows_read,
                     gaps_filled, interval);
}

std::optional<double> parse_timestamp(const std::string& raw) {
  const std::string text = detail::trim(raw);
  if (text.empty()) return std::nullopt;
  if (text.find(':') == std::string::npos) {
    return detail::parse_double(text);
  }
  const auto parts = detail::split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  double total = 0.0;
  const double scale[] = {3600.0, 60.0, 1.0};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto v = detail::parse_double(parts[i]);
    if (!v || *v < 0.0) return std::nullopt;
    if (i > 0 && *v >= 60.0) return std::nullopt;
    total += *v * scale[i];
  }
  return total;
}

LoadedSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(fmt::format("cannot read input file '{}'", path.string()));
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(fmt::format("'{}': missing header row", path.string()));
  }
  const auto header = detail::split_csv(line);
  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError(fmt::format("'{}': no column named '{}'", path.string(), name));
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t tcol = find_col(schema.time_column);
  const std::size_t vcol = find_col(schema.value_column);

  std::vector<double> times;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() <= std::max(tcol, vcol)) {
      throw ParseError(fmt::format("'{}' line {}: too few fields", path.string(), lineno));
    }
    auto t = parse_timestamp(fields[tcol]);
    if (!t) {
      throw ParseError(
          fmt::format("'{}' line {}: bad timestamp '{}'", path.string(), lineno, fields[tcol]));
    }
    auto v = detail::parse_double(fields[vcol]);
    if (!v || !std::isfinite(*v)) {
      throw ParseError(
          fmt::format("'{}' line {}: non-numeric value '{}'", path.string(), lineno, fields[vcol]));
    }
    if (!times.empty() && *t <= times.back()) {
      throw ParseError(
          fmt::format("'{}' line {}: timestamps not strictly increasing", path.string(), lineno));
    }
    times.push_back(*t);
    values.push_back(*v);
  }
  if (times.size() < 2) {
    throw ParseError(fmt::format("'{}': need at least 2 data rows", path.string()));
  }

  // Modal spacing, compared on a microsecond lattice.
  std::map<long long, std::size_t> counts;
  for (std::size_t i = 1; i < times.size(); ++i) {
    ++counts[std::llround((times[i] - times[i - 1]) * 1e6)];
  }
  const auto mode = std::max_element(counts.begin(), counts.end(), [](auto& a, auto& b) {
    return a.second < b.second || (a.second == b.second && a.first > b.first);
  });
  const double interval = static_cast<double>(mode->first) * 1e-6;

  std::vector<double> grid;
  grid.reserve(times.size());
  grid.push_back(values.front());
  std::size_t missing = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double steps = (times[i] - times[i - 1]) / interval;
    const double whole = std::round(steps);
    if (whole < 1.0 || std::abs(steps - whole) > 1e-6 * std::max(1.0, steps)) {
      throw ParseError(fmt::format("'{}': timestamp step {} s is not a multiple of {} s",
                                   path.string(), times[i] - times[i - 1], interval));
    }
    const auto n = static_cast<std::size_t>(whole);
    for (std::size_t j = 1; j < n; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(n);
      grid.push_back(values[i - 1] + frac * (values[i] - values[i - 1]));
    }
    missing += n - 1;
    grid.push_back(values[i]);
  }
  if (static_cast<double>(missing) > kMaxMissingFraction * static_cast<double>(grid.size())) {
    throw ParseError(fmt::format("'{}': {} of {} samples missing (limit {}%)", path.string(),
                                 missing, grid.size(), kMaxMissingFraction * 100.0));
  }

  LoadReport report;
  report.rows_read = times.size();
  report.gaps_filled = missing;
  report.interval = interval;
  report.clock_offset = times.front();
  return LoadedSeries{TimeSeries(0.0, interval, std::move(grid)), report};
}

ChannelSeries resample(const TimeSeries& series, double target_interval) {
  if (!(target_interval > 0.0)) {
    throw InvalidArgument("resample target interval must be positive");
  }
  if (target_interval < series.interval() * (1.0 - 1e-9)) {
    throw InvalidArgument(fmt::format("resample to {} s would upsample a {} s series",
                                      target_interval, series.interval()));
  }
  const double ratio = target_interval / series.interval();
  const double per = std::round(ratio);
  if (std::abs(ratio - per) > 1e-9 * ratio) {
    throw InvalidArgument(fmt::format("target interval {} s is not an integer multiple of {} s",
                                      target_interval, series.interval()));
  }
  const auto k = static_cast<std::size_t>(per);
  const std::size_t channels = series.size() / k;
  if (channels == 0) {
    throw InvalidArgument(fmt::format("series of {} samples too short for {} s channels",
                                      series.size(), target_interval));
  }
  const auto raw = series.values();
  std::vector<double> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += raw[c * k + j];
    out[c] = sum / static_cast<double>(k);
  }
  return ChannelSeries(target_interval, series.t_start(), std::move(out));
}

std::size_t channel_of(double time, double channel_width, double origin) {
  if (!(channel_width > 0.0)) {
    throw InvalidArgument("channel width must be positive");
  }
  if (time < origin) {
    throw InvalidArgument(fmt::format("time {} precedes channel origin {}", time, origin));
  }
  return static_cast<std::size_t>(std::floor((time - origin) / channel_width));
}

double channel_center(std::size_t channel, double channel_width, double origin) {
  if (!(channel_width > 0.0)) {
    throw InvalidArgument("channel width must be positive");
  }
  return origin + (static_cast<double>(channel) + 0.5) * channel_width;
}

}  // namespace lorentzscope
