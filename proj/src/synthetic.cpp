#include "jumpdesign/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "jumpdesign/image_io.hpp"

namespace jumpdesign {

namespace {

bool on_segment(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
  if (cross != 0.0) return false;
  return px >= std::min(a[0], b[0]) && px <= std::max(a[0], b[0]) && py >= std::min(a[1], b[1]) &&
         py <= std::max(a[1], b[1]);
}

bool polygon_contains(const Polygon& poly, double x, double y) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(x, y, v[j], v[i])) return true;
    if ((v[i][1] > y) != (v[j][1] > y)) {
      const double xc = v[j][0] + (y - v[j][1]) * (v[i][0] - v[j][0]) / (v[i][1] - v[j][1]);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

std::array<double, 4> region_extent(const Region& r) {
  if (const auto* d = std::get_if<Disk>(&r.shape)) {
    return {d->cx - d->radius, d->cy - d->radius, d->cx + d->radius, d->cy + d->radius};
  }
  const auto& v = std::get<Polygon>(r.shape).vertices;
  std::array<double, 4> e{v[0][0], v[0][1], v[0][0], v[0][1]};
  for (const auto& p : v) {
    e[0] = std::min(e[0], p[0]);
    e[1] = std::min(e[1], p[1]);
    e[2] = std::max(e[2], p[0]);
    e[3] = std::max(e[3], p[1]);
  }
  return e;
}

void validate_region(const Region& r, const GridShape& grid, std::size_t which) {
  const std::string tag = "region " + std::to_string(which);
  if (!std::isfinite(r.jump)) throw std::invalid_argument(tag + ": jump must be finite");
  if (const auto* d = std::get_if<Disk>(&r.shape)) {
    if (!(d->radius > 0.0) || !std::isfinite(d->cx) || !std::isfinite(d->cy)) {
      throw std::invalid_argument(tag + ": disk needs a finite center and positive radius");
    }
  } else {
    const auto& v = std::get<Polygon>(r.shape).vertices;
    if (v.size() < 3) throw std::invalid_argument(tag + ": polygon needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      area2 += v[j][0] * v[i][1] - v[i][0] * v[j][1];
    }
    if (area2 == 0.0) throw std::invalid_argument(tag + ": polygon has zero area");
  }
  const auto e = region_extent(r);
  const double w = static_cast<double>(grid.width - 1);
  const double h = static_cast<double>(grid.height - 1);
  if (e[2] < 0.0 || e[3] < 0.0 || e[0] > w || e[1] > h) {
    throw std::invalid_argument(tag + " lies outside the grid bounds");
  }
}

[[noreturn]] void spec_error(const std::string& what, std::size_t line, std::size_t byte) {
  throw ParseError(what, line, byte);
}

}  // namespace

bool region_contains(const Region& region, double x, double y) {
  if (const auto* d = std::get_if<Disk>(&region.shape)) {
    const double dx = x - d->cx;
    const double dy = y - d->cy;
    return dx * dx + dy * dy <= d->radius * d->radius;
  }
  return polygon_contains(std::get<Polygon>(region.shape), x, y);
}

GroundTruth make_synthetic(const SyntheticSpec& spec) {
  if (spec.grid.empty()) throw std::invalid_argument("synthetic grid must be positive");
  for (std::size_t b = 0; b < spec.regions.size(); ++b) validate_region(spec.regions[b], spec.grid, b);

  auto shared = std::make_shared<const SyntheticSpec>(spec);
  GroundTruth t;
  t.bounds = Box::of_grid(spec.grid);
  t.grid = spec.grid;
  t.eval = [shared](std::span<const double> c) {
    const double x = c[0];
    const double y = c[1];
    const auto& s = *shared;
    double v = s.custom_background
                   ? s.custom_background(x, y)
                   : s.background.offset + s.background.slope_x * x + s.background.slope_y * y;
    for (const auto& r : s.regions) {
      if (region_contains(r, x, y)) v += r.jump;
    }
    return v;
  };

  const auto& g = spec.grid;
  t.jump_mask = Mask(g);
  std::vector<std::uint8_t> inside(g.size());
  for (const auto& r : spec.regions) {
    if (r.jump == 0.0) continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      inside[i] = region_contains(r, static_cast<double>(g.x_of(i)), static_cast<double>(g.y_of(i)));
    }
    for (std::size_t y = 0; y < g.height; ++y) {
      for (std::size_t x = 0; x < g.width; ++x) {
        const std::size_t i = g.index(x, y);
        if (!inside[i]) continue;
        const bool edge = (x > 0 && !inside[i - 1]) || (x + 1 < g.width && !inside[i + 1]) ||
                          (y > 0 && !inside[i - g.width]) || (y + 1 < g.height && !inside[i + g.width]);
        if (edge) t.jump_mask.set(i);
      }
    }
  }
  return t;
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  bool have_grid = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    ++line_no;
    const std::size_t start = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);

    std::istringstream in(line);
    std::string keyword;
    if (!(in >> keyword)) {
      if (eol == text.size()) break;
      continue;
    }
    std::vector<double> nums;
    std::string tok;
    while (in >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        spec_error("expected a number, found '" + tok + "'", line_no, start);
      }
      nums.push_back(v);
    }

    if (keyword == "grid") {
      if (nums.size() != 2 || nums[0] < 1 || nums[1] < 1 || nums[0] != std::floor(nums[0]) ||
          nums[1] != std::floor(nums[1])) {
        spec_error("grid expects two positive integers", line_no, start);
      }
      spec.grid = {static_cast<std::size_t>(nums[0]), static_cast<std::size_t>(nums[1])};
      have_grid = true;
    } else if (keyword == "background") {
      if (nums.size() != 1 && nums.size() != 3) {
        spec_error("background expects OFFSET or OFFSET SLOPE_X SLOPE_Y", line_no, start);
      }
      spec.background = {nums[0], nums.size() == 3 ? nums[1] : 0.0, nums.size() == 3 ? nums[2] : 0.0};
    } else if (keyword == "disk") {
      if (nums.size() != 4) spec_error("disk expects CX CY RADIUS JUMP", line_no, start);
      spec.regions.push_back({Disk{nums[0], nums[1], nums[2]}, nums[3]});
    } else if (keyword == "polygon") {
      if (nums.size() < 7 || nums.size() % 2 != 1) {
        spec_error("polygon expects JUMP followed by at least 3 vertex pairs", line_no, start);
      }
      Polygon poly;
      for (std::size_t i = 1; i < nums.size(); i += 2) poly.vertices.push_back({nums[i], nums[i + 1]});
      spec.regions.push_back({std::move(poly), nums[0]});
    } else {
      spec_error("unknown keyword '" + keyword + "'", line_no, start);
    }
    if (eol == text.size()) break;
  }
  if (!have_grid) throw ParseError("synthetic spec has no 'grid' line", line_no, text.size());
  return spec;
}

std::string format_synthetic_spec(const SyntheticSpec& spec) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "grid " << spec.grid.width << ' ' << spec.grid.height << '\n';
  out << "background " << spec.background.offset << ' ' << spec.background.slope_x << ' '
      << spec.background.slope_y << '\n';
  for (const auto& r : spec.regions) {
    if (const auto* d = std::get_if<Disk>(&r.shape)) {
      out << "disk " << d->cx << ' ' << d->cy << ' ' << d->radius << ' ' << r.jump << '\n';
    } else {
      out << "polygon " << r.jump;
      for (const auto& v : std::get<Polygon>(r.shape).vertices) out << ' ' << v[0] << ' ' << v[1];
      out << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> synthetic_preset_names() {
  return {"step", "disk", "flat", "image1", "image2"};
}

SyntheticSpec synthetic_preset(std::string_view name, std::optional<GridShape> grid) {
  SyntheticSpec s;
  const auto size_or = [&](std::size_t w, std::size_t h) { return grid ? *grid : GridShape{w, h}; };
  if (name == "step") {
    s.grid = size_or(101, 101);
    const double x0 = (static_cast<double>(s.grid.width) - 1.0) / 2.0;
    const double xr = static_cast<double>(s.grid.width - 1);
    const double yb = static_cast<double>(s.grid.height - 1);
    s.regions.push_back({Polygon{{{x0, 0.0}, {xr, 0.0}, {xr, yb}, {x0, yb}}}, 1.0});
  } else if (name == "disk") {
    s.grid = size_or(101, 101);
    const double w = static_cast<double>(s.grid.width - 1);
    const double h = static_cast<double>(s.grid.height - 1);
    s.background = {0.1, 0.1 / std::max(w, 1.0), 0.0};
    s.regions.push_back({Disk{w / 2.0, h / 2.0, 0.25 * std::min(w, h)}, 0.8});
  } else if (name == "flat") {
    s.grid = size_or(101, 101);
    s.background = {0.5, 0.0, 0.0};
  } else if (name == "image1") {
    s.grid = size_or(201, 201);
    const double sx = static_cast<double>(s.grid.width - 1) / 200.0;
    const double sy = static_cast<double>(s.grid.height - 1) / 200.0;
    s.background = {0.1, 0.1 / (200.0 * sx), 0.0};
    s.regions.push_back({Disk{70 * sx, 65 * sy, 38 * std::min(sx, sy)}, 0.6});
    s.regions.push_back(
        {Polygon{{{110 * sx, 110 * sy}, {180 * sx, 120 * sy}, {170 * sx, 185 * sy}, {100 * sx, 175 * sy}}},
         0.7});
    s.regions.push_back({Disk{160 * sx, 45 * sy, 18 * std::min(sx, sy)}, 0.45});
  } else if (name == "image2") {
    s.grid = size_or(347, 392);
    const double sx = static_cast<double>(s.grid.width - 1) / 346.0;
    const double sy = static_cast<double>(s.grid.height - 1) / 391.0;
    s.background = {0.15, 0.0, 0.1 / (391.0 * sy)};
    s.regions.push_back({Disk{90 * sx, 100 * sy, 55 * std::min(sx, sy)}, 0.55});
    s.regions.push_back({Polygon{{{200 * sx, 40 * sy}, {320 * sx, 70 * sy}, {250 * sx, 170 * sy}}}, 0.6});
    s.regions.push_back({Disk{260 * sx, 270 * sy, 60 * std::min(sx, sy)}, 0.7});
    s.regions.push_back(
        {Polygon{{{40 * sx, 250 * sy}, {140 * sx, 250 * sy}, {140 * sx, 360 * sy}, {40 * sx, 360 * sy}}},
         0.5});
  } else {
    throw std::invalid_argument("unknown synthetic preset '" + std::string(name) + "'");
  }
  return s;
}

}  // namespace jumpdesign
