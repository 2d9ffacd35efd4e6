#pragma once

#include <string_view>
#include <vector>

#include "lorentzscope/ingest.hpp"

namespace lorentzscope {

enum class RenormMode { kSubtract, kDivide };

std::string_view to_string(RenormMode mode);
RenormMode parse_renorm_mode(std::string_view text);

// Smoothing windows in seconds, strictly decreasing.
struct DecomposeScales {
  double gross = 120.0 * 60.0;
  double intermediate1 = 50.0 * 60.0;
  double intermediate2 = 12.0 * 60.0;
};

struct DecomposeOptions {
  DecomposeScales scales;
  RenormMode mode = RenormMode::kSubtract;
  // Finest analysis grid. Raised to the input interval when the input is coarser.
  double fine_interval = 30.0;
  // Grid the gross component is smoothed on before interpolation.
  double gross_interval = 600.0;
};

// The four structural layers of one series, all on the fine grid.
//
// Subtract mode: gross + intermediate1 + intermediate2 + fine == input.
// Divide mode: components are relative deviations rescaled by unit_scale (the
// gross window mean) so they stay in index points, and
// gross * (1 + I1/u) * (1 + I2/u) * (1 + F/u) == input.
struct Decomposition {
  ChannelSeries input;
  ChannelSeries gross;
  ChannelSeries intermediate1;
  ChannelSeries intermediate2;
  ChannelSeries fine;
  RenormMode mode;
  DecomposeScales scales;
  double unit_scale = 1.0;

  std::vector<double> reconstruct() const;
  // Max |reconstruct - input| / max(|input|, tiny).
  double reconstruction_error() const;
};

// Centered moving average over an odd number of channels (window / width,
// rounded down to odd) with mirror padding at both ends.
ChannelSeries smooth(const ChannelSeries& series, double window);

// Removes a slower background. Subtract: series - background. Divide:
// (series / background - 1) * mean(background).
ChannelSeries renorm(const ChannelSeries& series, const ChannelSeries& background, RenormMode mode);

Decomposition decompose(const TimeSeries& series, const DecomposeOptions& options = {});

}  // namespace lorentzscope
