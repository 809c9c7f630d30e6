#include "jumpdesign/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

namespace jumpdesign {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t byte)
    : std::runtime_error(what + " (line " + std::to_string(line) + ", byte " +
                         std::to_string(byte) + ")"),
      line_(line),
      byte_(byte) {}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Whitespace/comment tokenizer for the PGM header and P2 body.
class PnmCursor {
 public:
  explicit PnmCursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  bool at_end() const { return pos_ >= text_.size(); }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, pos_); }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (is_space(c)) {
        if (c == '\n') ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '#') ++pos_;
    return text_.substr(start, pos_ - start);
  }

  long long integer(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    auto tok = token();
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      pos_ = start;
      fail(std::string("expected integer ") + what);
    }
    return v;
  }

  // Consumes the single whitespace byte that separates a P5 header from data.
  void single_space() {
    if (pos_ >= text_.size() || !is_space(text_[pos_])) fail("expected whitespace after PGM header");
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  std::string_view rest() const { return text_.substr(pos_); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

struct PgmRaster {
  GridShape shape;
  int maxval = 0;
  std::vector<double> values;
};

PgmRaster parse_pgm(std::string_view content) {
  PnmCursor cur(content);
  cur.skip_space_and_comments();
  const auto magic = cur.token();
  if (magic != "P2" && magic != "P5") cur.fail("unsupported PGM magic '" + std::string(magic) + "'");
  const bool binary = magic == "P5";
  const long long w = cur.integer("width");
  const long long h = cur.integer("height");
  const long long maxval = cur.integer("maxval");
  if (w < 0 || h < 0) cur.fail("negative image dimension");
  if (maxval <= 0 || maxval > 65535) cur.fail("maxval must be in [1, 65535]");

  PgmRaster r;
  r.shape = {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  r.maxval = static_cast<int>(maxval);
  const std::size_t n = r.shape.size();
  r.values.resize(n);

  if (binary) {
    cur.single_space();
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    auto data = cur.rest();
    if (data.size() < n * bytes_per) {
      throw ParseError("truncated P5 raster: expected " + std::to_string(n * bytes_per) +
                           " bytes, found " + std::to_string(data.size()),
                       cur.line(), cur.pos() + data.size());
    }
    for (std::size_t i = 0; i < n; ++i) {
      unsigned v = static_cast<unsigned char>(data[i * bytes_per]);
      if (bytes_per == 2) v = (v << 8) | static_cast<unsigned char>(data[i * bytes_per + 1]);
      if (v > static_cast<unsigned>(maxval)) {
        throw ParseError("pixel exceeds maxval", cur.line(), cur.pos() + i * bytes_per);
      }
      r.values[i] = static_cast<double>(v);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      cur.skip_space_and_comments();
      if (cur.at_end()) cur.fail("truncated P2 raster: expected " + std::to_string(n) + " pixels");
      const long long v = cur.integer("pixel value");
      if (v < 0 || v > maxval) cur.fail("pixel value out of range [0, maxval]");
      r.values[i] = static_cast<double>(v);
    }
  }
  return r;
}

Image parse_csv_grid(std::string_view content) {
  Image img;
  std::vector<double>& px = img.pixels;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    ++line;
    const std::size_t line_start = pos;
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view row = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (std::all_of(row.begin(), row.end(), is_space)) continue;

    std::size_t cells = 0;
    std::size_t cpos = 0;
    while (true) {
      std::size_t comma = row.find(',', cpos);
      const std::size_t end = comma == std::string_view::npos ? row.size() : comma;
      std::string_view cell = row.substr(cpos, end - cpos);
      std::size_t lead = 0;
      while (lead < cell.size() && is_space(cell[lead])) ++lead;
      cell.remove_prefix(lead);
      while (!cell.empty() && is_space(cell.back())) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("non-numeric CSV cell '" + std::string(cell) + "'", line,
                         line_start + cpos + lead);
      }
      px.push_back(v);
      ++cells;
      if (comma == std::string_view::npos) break;
      cpos = comma + 1;
    }
    if (rows == 0) {
      width = cells;
    } else if (cells != width) {
      throw ParseError("CSV row has " + std::to_string(cells) + " cells, expected " +
                           std::to_string(width),
                       line, line_start);
    }
    ++rows;
  }
  img.shape = {width, rows};
  return img;
}

}  // namespace

ImageFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return ImageFormat::Pgm;
  if (ext == ".csv") return ImageFormat::CsvGrid;
  throw std::invalid_argument("cannot infer image format from '" + path.string() +
                              "' (expected .pgm or .csv)");
}

Image parse_image(std::string_view content, ImageFormat format) {
  if (format == ImageFormat::CsvGrid) return parse_csv_grid(content);
  auto r = parse_pgm(content);
  Image img;
  img.shape = r.shape;
  img.pixels = std::move(r.values);
  return img;
}

Image read_image(const std::filesystem::path& path, ImageFormat format) {
  return parse_image(slurp(path), format);
}

bool normalize_max(Image& image) {
  if (image.pixels.empty()) return false;
  const double mx = *std::max_element(image.pixels.begin(), image.pixels.end());
  if (!(mx > 0.0)) return false;
  for (double& v : image.pixels) v /= mx;
  return true;
}

GroundTruth truth_from_image(const Image& image, Mask jump_mask) {
  if (image.shape.empty()) throw std::invalid_argument("empty image");
  if (jump_mask.shape.empty()) jump_mask = Mask(image.shape);
  if (!(jump_mask.shape == image.shape)) {
    throw std::invalid_argument("jump mask shape does not match the image");
  }
  GroundTruth t;
  t.bounds = Box::of_grid(image.shape);
  t.grid = image.shape;
  t.jump_mask = std::move(jump_mask);
  auto pixels = std::make_shared<const Image>(image);
  t.eval = [pixels](std::span<const double> x) {
    const auto& s = pixels->shape;
    const auto clampi = [](double v, std::size_t n) {
      const double r = std::round(v);
      if (!(r > 0.0)) return std::size_t{0};
      return std::min(static_cast<std::size_t>(r), n - 1);
    };
    return pixels->at(clampi(x[0], s.width), clampi(x[1], s.height));
  };
  return t;
}

LoadedImage load_image(const std::filesystem::path& path, ImageFormat format) {
  Image img = read_image(path, format);
  if (img.shape.empty()) throw std::invalid_argument("image " + path.string() + " is empty");
  normalize_max(img);
  Dataset data(2, Box::of_grid(img.shape));
  for (std::size_t i = 0; i < img.shape.size(); ++i) {
    const auto c = img.shape.coords(i);
    data.insert(c, img.pixels[i]);
  }
  GroundTruth truth = truth_from_image(img);
  return LoadedImage{std::move(img), std::move(data), std::move(truth)};
}

Mask parse_mask(std::string_view content, const GridShape& expected) {
  auto r = parse_pgm(content);
  if (!(r.shape == expected)) {
    throw std::invalid_argument("mask is " + std::to_string(r.shape.width) + "x" +
                                std::to_string(r.shape.height) + ", image is " +
                                std::to_string(expected.width) + "x" +
                                std::to_string(expected.height));
  }
  Mask m(r.shape);
  for (std::size_t i = 0; i < r.values.size(); ++i) m.set(i, r.values[i] * 2.0 > r.maxval);
  return m;
}

Mask read_mask(const std::filesystem::path& path, const GridShape& expected) {
  return parse_mask(slurp(path), expected);
}

void write_pgm(std::ostream& out, const Image& image, bool binary, int maxval) {
  if (maxval <= 0 || maxval > 65535) throw std::invalid_argument("maxval must be in [1, 65535]");
  out << (binary ? "P5" : "P2") << '\n'
      << image.shape.width << ' ' << image.shape.height << '\n'
      << maxval << '\n';
  const auto quantise = [maxval](double v) {
    if (!(v > 0.0)) return 0u;
    if (v >= 1.0) return static_cast<unsigned>(maxval);
    return static_cast<unsigned>(std::lround(v * maxval));
  };
  for (std::size_t y = 0; y < image.shape.height; ++y) {
    for (std::size_t x = 0; x < image.shape.width; ++x) {
      const unsigned q = quantise(image.at(x, y));
      if (binary) {
        if (maxval > 255) out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
      } else {
        out << (x ? " " : "") << q;
      }
    }
    if (!binary) out << '\n';
  }
}

void write_pgm(const std::filesystem::path& path, const Image& image, bool binary, int maxval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_pgm(out, image, binary, maxval);
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  Image img(mask.shape);
  for (std::size_t i = 0; i < mask.cells.size(); ++i) img.pixels[i] = mask.test(i) ? 1.0 : 0.0;
  write_pgm(path, img, false, 255);
}

void write_csv_grid(std::ostream& out, const Image& image) {
  out << std::setprecision(17);
  for (std::size_t y = 0; y < image.shape.height; ++y) {
    for (std::size_t x = 0; x < image.shape.width; ++x) out << (x ? "," : "") << image.at(x, y);
    out << '\n';
  }
}

void write_csv_grid(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv_grid(out, image);
}

}  // namespace jumpdesign
