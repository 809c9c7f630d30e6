#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/grid.hpp"

namespace jumpdesign {

struct Disk {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

// Simple polygon, either orientation. Boundary points count as inside.
struct Polygon {
  std::vector<std::array<double, 2>> vertices;
};

struct Region {
  std::variant<Disk, Polygon> shape;
  double jump = 0.0;  // level shift inside the region
};

bool region_contains(const Region& region, double x, double y);

// g(x, y) = offset + slope_x * x + slope_y * y
struct PlaneBackground {
  double offset = 0.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
};

// m(x) = g(x) + sum of region jumps over the regions containing x.
struct SyntheticSpec {
  GridShape grid;
  PlaneBackground background;
  // Overrides the plane when set. Must be continuous for the model to hold.
  std::function<double(double, double)> custom_background;
  std::vector<Region> regions;
};

// The jump mask marks each cell that lies inside some region whose
// 4-neighbour lies outside that same region (the inner boundary pixels).
// Throws std::invalid_argument for an empty grid, degenerate regions, or a
// region that does not overlap the grid at all.
GroundTruth make_synthetic(const SyntheticSpec& spec);

// Line-oriented text form:
//   grid W H
//   background OFFSET [SLOPE_X SLOPE_Y]
//   disk CX CY RADIUS JUMP
//   polygon JUMP X1 Y1 X2 Y2 X3 Y3 ...
// '#' starts a comment. Throws ParseError with the offending line.
SyntheticSpec parse_synthetic_spec(std::string_view text);
std::string format_synthetic_spec(const SyntheticSpec& spec);

// Built-in reference surfaces: "step" (left half 0, right half 1), "disk"
// (one disk on a gentle ramp), "flat" (constant 0.5), "image1" (201x201,
// several shapes) and "image2" (347x392, several shapes). grid overrides the
// default size where given.
SyntheticSpec synthetic_preset(std::string_view name, std::optional<GridShape> grid = std::nullopt);
std::vector<std::string> synthetic_preset_names();

}  // namespace jumpdesign
