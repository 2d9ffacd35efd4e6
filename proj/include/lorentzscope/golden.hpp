#pragma once

#include <array>

#include "lorentzscope/lorentz.hpp"

namespace lorentzscope::golden {

// Fine-structure states of the DJIA, 2:45-3:45 p.m. on April 3, 2012, in
// seconds after 2:45 p.m.: channel number (30 s channels), t0, width in
// channels, width in seconds, peak height in renormalized index units.
struct Table3Row {
  int channel;
  double t0;
  double width_channels;
  double delta_tau;
  double amplitude;
};

inline constexpr std::array<Table3Row, 32> kTable3 = {{
    {1, 30, 2.5, 75, 3},       {7, 210, 3, 90, 3.2},      {10, 300, 1, 30, 3.2},
    {11, 330, 1, 30, 2.5},     {15, 450, 2.5, 75, 9},     {18, 540, 2, 60, 6.3},
    {23, 690, 2, 60, 4.6},     {27, 810, 2.5, 75, 9},     {29, 870, 2, 60, 9},
    {34, 1020, 2, 60, 5},      {39, 1170, 1.5, 45, 1.8},  {41, 1230, 1, 30, 2.2},
    {45, 1350, 2.5, 75, 5.8},  {49, 1470, 1.5, 45, 3.8},  {51, 1530, 2, 60, 5.7},
    {55, 1650, 0.7, 21, 1.5},  {58, 1740, 2, 60, 7},      {60, 1800, 1.5, 45, 6},
    {63, 1890, 2.5, 75, 7.5},  {65, 1950, 1.5, 45, 3.7},  {69, 2070, 2, 60, 5.5},
    {74, 2220, 2.5, 75, 4.5},  {81, 2430, 2, 60, 1.7},    {86, 2580, 2, 60, 1.4},
    {88, 2640, 2, 60, 4.9},    {92, 2760, 2, 60, 9.8},    {98, 2940, 3, 90, 12},
    {104, 3120, 1, 30, 1.7},   {107, 3210, 1.5, 45, 4.2}, {110, 3300, 1, 30, 2.5},
    {113, 3390, 1, 30, 1.5},   {115, 3450, 2, 60, 5.8},
}};

inline constexpr double kTable3ChannelWidth = 30.0;
inline constexpr TimeWindow kTable3Window{0.0, 3600.0};

inline MultiLevelModel table3_model() {
  std::vector<LorentzianState> states;
  for (const auto& row : kTable3) states.emplace_back(row.t0, row.delta_tau, row.amplitude);
  return MultiLevelModel(0.0, std::move(states), kTable3Window);
}

}  // namespace lorentzscope::golden
