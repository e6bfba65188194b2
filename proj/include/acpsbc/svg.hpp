#pragma once

#include <string>
#include <vector>

#include "acpsbc/sim.hpp"

namespace acpsbc {

/// Robot paths, obstacles, and start/goal markers over the workspace frame.
void write_trajectory_svg(const TrajectoryLog& log, const Scenario& scenario, const std::string& path);

/// Minimum-distance series with the zero reference line.
void write_min_distance_svg(const MinDistanceSeries& series, double dt, const std::string& path);

/// Overlay of one labeled series per sweep value.
void write_series_overlay_svg(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                              double dt, const std::string& path);

}  // namespace acpsbc
