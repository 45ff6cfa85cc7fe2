#pragma once

#include <string>
#include <vector>

#include "ball3d/geometry.hpp"

namespace ball3d {

struct PlotSeries {
    std::string label;
    std::string color;  ///< any SVG colour
    std::vector<Vec3> points;
};

/// Two orthographic panels, side (x horizontal, y up) and top (x horizontal, z up), with one
/// polyline per series. Both panels share the x scale. Output depends only on the input.
std::string render_trajectory_svg(const std::vector<PlotSeries>& series, const std::string& title);

}  // namespace ball3d
