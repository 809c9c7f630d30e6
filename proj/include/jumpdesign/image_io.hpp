#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/grid.hpp"

namespace jumpdesign {

enum class ImageFormat { Pgm, CsvGrid };

// Malformed input. line is 1-based; byte is the 0-based offset into the file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t byte);
  std::size_t line() const { return line_; }
  std::size_t byte() const { return byte_; }

 private:
  std::size_t line_;
  std::size_t byte_;
};

ImageFormat format_from_path(const std::filesystem::path& path);

// Raw pixel values, no rescaling. PGM accepts P2 (plain) and P5 (binary, 8 or
// 16 bit). CSV grids have one row per y and one numeric cell per x.
Image parse_image(std::string_view content, ImageFormat format);
Image read_image(const std::filesystem::path& path, ImageFormat format);

// Divides by the maximum so it becomes exactly 1. Returns false (and leaves
// the image untouched) when the maximum is not positive.
bool normalize_max(Image& image);

struct LoadedImage {
  Image image;       // normalized intensities
  Dataset dataset;   // one observation per pixel
  GroundTruth truth; // nearest-pixel evaluation of image
};

// Reads an image, rescales it so the maximum intensity is 1, and exposes it
// both as a full-grid dataset and as a ground truth for noise injection.
// Throws std::invalid_argument for empty images.
LoadedImage load_image(const std::filesystem::path& path, ImageFormat format);

// Builds a ground truth over image's grid. Off-grid coordinates evaluate at
// the nearest pixel.
GroundTruth truth_from_image(const Image& image, Mask jump_mask = {});

// Binary PGM mask: pixels above half the maxval are on. Shape must match.
Mask read_mask(const std::filesystem::path& path, const GridShape& expected);
Mask parse_mask(std::string_view content, const GridShape& expected);

// Values are clamped to [0, 1] and quantised to maxval levels.
void write_pgm(std::ostream& out, const Image& image, bool binary = false, int maxval = 65535);
void write_pgm(const std::filesystem::path& path, const Image& image, bool binary = false,
               int maxval = 65535);
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);
// Lossless round trip (17 significant digits).
void write_csv_grid(std::ostream& out, const Image& image);
void write_csv_grid(const std::filesystem::path& path, const Image& image);

}  // namespace jumpdesign
