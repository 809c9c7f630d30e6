#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace jumpdesign {

// Pixel grid with integer coordinates x in [0, width), y in [0, height).
// Storage is row-major: index = y * width + x.
struct GridShape {
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t size() const { return width * height; }
  bool empty() const { return size() == 0; }
  std::size_t index(std::size_t x, std::size_t y) const { return y * width + x; }
  std::size_t x_of(std::size_t idx) const { return idx % width; }
  std::size_t y_of(std::size_t idx) const { return idx / width; }
  std::array<double, 2> coords(std::size_t idx) const {
    return {static_cast<double>(x_of(idx)), static_cast<double>(y_of(idx))};
  }
  // Grid index of the pixel whose center equals (x, y), or size() if (x, y)
  // is not an exact pixel center inside the grid.
  std::size_t index_of(double x, double y) const;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct Image {
  GridShape shape;
  std::vector<double> pixels;

  Image() = default;
  Image(GridShape s, double fill = 0.0) : shape(s), pixels(s.size(), fill) {}

  double& at(std::size_t x, std::size_t y) { return pixels[shape.index(x, y)]; }
  double at(std::size_t x, std::size_t y) const { return pixels[shape.index(x, y)]; }
};

struct Mask {
  GridShape shape;
  std::vector<std::uint8_t> cells;

  Mask() = default;
  explicit Mask(GridShape s) : shape(s), cells(s.size(), 0) {}

  bool test(std::size_t idx) const { return cells[idx] != 0; }
  void set(std::size_t idx, bool on = true) { cells[idx] = on ? 1 : 0; }
  std::size_t count() const;
  bool any() const { return count() > 0; }
};

}  // namespace jumpdesign
