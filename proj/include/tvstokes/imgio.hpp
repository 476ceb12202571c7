#pragma once

// Grayscale image files: PGM (P2 ascii, P5 binary, maxval <= 255) and
// 8-bit grayscale PNG. Needs libpng (target tvstokes::imgio).

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvstokes/fields.hpp"

namespace tvs {

/// Unreadable/unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File readable but not a supported image.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

inline void spill(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void require_image_dims(std::size_t h, std::size_t w, const std::string& what) {
  if (h < 2 || w < 2) throw FormatError(what + ": image dimensions must be at least 2x2");
}

// Header token reader for PGM: skips whitespace and '#' comments.
class PgmCursor {
 public:
  PgmCursor(const std::vector<unsigned char>& b, std::string name) : b_(b), name_(std::move(name)) {}

  unsigned long number() {
    skip();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) fail("expected a number");
    unsigned long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1'000'000'000UL) fail("number out of range");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from P5 raster data.
  void single_space() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) fail("missing separator before raster");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(name_ + ": " + msg); }

 private:
  void skip() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& b_;
  std::string name_;
  std::size_t pos_ = 2;
};

inline ScalarField parse_pgm(const std::vector<unsigned char>& b, const std::string& name) {
  const bool ascii = b[1] == '2';
  PgmCursor cur(b, name);
  const std::size_t w = cur.number();
  const std::size_t h = cur.number();
  const unsigned long maxval = cur.number();
  if (maxval == 0 || maxval > 255) cur.fail("only 8-bit PGM (maxval 1..255) is supported");
  require_image_dims(h, w, name);
  ScalarField img(h, w);
  if (ascii) {
    for (auto& v : img) {
      const unsigned long x = cur.number();
      if (x > maxval) cur.fail("sample exceeds maxval");
      v = double(x);
    }
  } else {
    cur.single_space();
    const std::size_t start = cur.pos();
    if (b.size() - start < h * w) cur.fail("truncated raster");
    for (std::size_t k = 0; k < h * w; ++k) {
      if (b[start + k] > maxval) cur.fail("sample exceeds maxval");
      img[k] = double(b[start + k]);
    }
  }
  return img;
}

inline ScalarField parse_png(const std::vector<unsigned char>& b, const std::string& name) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&im, b.data(), b.size())) {
    throw FormatError(name + ": " + im.message);
  }
  const bool gray = (im.format & PNG_FORMAT_FLAG_COLOR) == 0;
  const bool eight_bit = (im.format & PNG_FORMAT_FLAG_LINEAR) == 0;
  if (!gray) {
    png_image_free(&im);
    throw FormatError(name + ": color PNG is not supported, convert to grayscale first");
  }
  if (!eight_bit) {
    png_image_free(&im);
    throw FormatError(name + ": only 8-bit PNG is supported");
  }
  const std::size_t h = im.height;
  const std::size_t w = im.width;
  if (h < 2 || w < 2) {
    png_image_free(&im);
    require_image_dims(h, w, name);
  }
  im.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> px(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = im.message;
    png_image_free(&im);
    throw FormatError(name + ": " + msg);
  }
  ScalarField img(h, w);
  for (std::size_t k = 0; k < h * w; ++k) img[k] = double(px[k]);
  return img;
}

inline bool has_png_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace detail

/// Reads P2/P5 PGM or 8-bit grayscale PNG, detected by content.
inline ScalarField read_image(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  const std::string name = path.string();
  static constexpr unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(png_sig, png_sig + 8, bytes.begin())) {
    return detail::parse_png(bytes, name);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
    return detail::parse_pgm(bytes, name);
  }
  throw FormatError(name + ": unrecognized image format (expected P2/P5 PGM or PNG)");
}

/// Clamps to [0, min(peak, 255)] and rounds to 8 bits.
inline std::vector<unsigned char> quantize_8bit(const ScalarField& img, double peak = 255.0) {
  if (!(peak > 0.0)) throw std::invalid_argument("peak must be positive");
  if (!img.all_finite()) throw NumericalError("cannot write an image containing NaN or Inf");
  std::vector<unsigned char> px(img.size());
  for (std::size_t k = 0; k < img.size(); ++k) {
    px[k] = static_cast<unsigned char>(std::lround(std::clamp(img[k], 0.0, std::min(peak, 255.0))));
  }
  return px;
}

/// Writes PNG when the extension is .png, binary PGM (P5) otherwise.
inline void write_image(const std::filesystem::path& path, const ScalarField& img,
                        double peak = 255.0) {
  const auto px = quantize_8bit(img, peak);
  if (detail::has_png_extension(path)) {
    png_image im;
    std::memset(&im, 0, sizeof(im));
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.width());
    im.height = static_cast<png_uint_32>(img.height());
    im.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&im, nullptr, &size, 0, px.data(), 0, nullptr)) {
      throw IoError(path.string() + ": " + im.message);
    }
    std::vector<unsigned char> out(size);
    if (!png_image_write_to_memory(&im, out.data(), &size, 0, px.data(), 0, nullptr)) {
      throw IoError(path.string() + ": " + im.message);
    }
    out.resize(size);
    detail::spill(path, out);
    return;
  }
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.insert(out.end(), px.begin(), px.end());
  detail::spill(path, out);
}

/// Writes ASCII PGM (P2), mainly for fixtures and interchange.
inline void write_pgm_ascii(const std::filesystem::path& path, const ScalarField& img,
                            double peak = 255.0) {
  const auto px = quantize_8bit(img, peak);
  std::string s = "P2\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  for (std::size_t i = 0; i < img.height(); ++i) {
    for (std::size_t j = 0; j < img.width(); ++j) {
      if (j) s += ' ';
      s += std::to_string(px[i * img.width() + j]);
    }
    s += '\n';
  }
  detail::spill(path, std::vector<unsigned char>(s.begin(), s.end()));
}

}  // namespace tvs
