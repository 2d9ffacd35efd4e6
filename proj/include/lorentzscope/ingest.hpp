#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lorentzscope {

// Uniformly sampled signal. Times are seconds since session open; sample k
// sits at t_start + k * interval.
class TimeSeries {
 public:
  TimeSeries(double t_start, double interval, std::vector<double> values);

  double t_start() const { return t_start_; }
  double interval() const { return interval_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double time_at(std::size_t k) const { return t_start_ + static_cast<double>(k) * interval_; }

 private:
  double t_start_;
  double interval_;
  std::vector<double> values_;
};

// Fixed-width time bins. Channel k covers
// [origin + k * channel_width, origin + (k + 1) * channel_width).
class ChannelSeries {
 public:
  ChannelSeries(double channel_width, double origin, std::vector<double> values);

  double channel_width() const { return width_; }
  double origin() const { return origin_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double left_edge(std::size_t k) const { return origin_ + static_cast<double>(k) * width_; }
  double center(std::size_t k) const { return left_edge(k) + 0.5 * width_; }
  double end() const { return left_edge(values_.size()); }

  bool same_grid(const ChannelSeries& other) const;

  // Channels [first, first + count) as a new series.
  ChannelSeries slice(std::size_t first, std::size_t count) const;

 private:
  double width_;
  double origin_;
  std::vector<double> values_;
};

struct CsvSchema {
  std::string time_column = "time";
  std::string value_column = "value";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t gaps_filled = 0;
  double interval = 0.0;
  // Seconds of the first sample on the source clock (wall-clock seconds since
  // midnight, or epoch seconds). Used for labeling only.
  double clock_offset = 0.0;

  std::string summary() const;
};

struct LoadedSeries {
  TimeSeries series;
  LoadReport report;
};

// Maximum fraction of grid points that may be missing and interpolated.
inline constexpr double kMaxMissingFraction = 0.05;

LoadedSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

// Parses "HH:MM", "HH:MM:SS" or integer/decimal epoch seconds.
std::optional<double> parse_timestamp(const std::string& text);

// Averages consecutive samples into channels of target_interval seconds. The
// target must be a positive integer multiple of the series interval; a
// trailing partial channel is dropped.
ChannelSeries resample(const TimeSeries& series, double target_interval);

// Index of the channel containing `time`.
std::size_t channel_of(double time, double channel_width, double origin = 0.0);
double channel_center(std::size_t channel, double channel_width, double origin = 0.0);

}  // namespace lorentzscope
