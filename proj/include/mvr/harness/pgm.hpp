#pragma once

#include "mvr/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace mvr {

class PgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 0;
  Vec pixels;  // row-major, values in [0, 1]
};

namespace detail {

inline int read_pgm_int(std::istream& is) {
  // Skips whitespace and '#' comments.
  int c = is.peek();
  while (is && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string dummy;
      std::getline(is, dummy);
    } else {
      is.get();
    }
    c = is.peek();
  }
  int v = -1;
  if (!(is >> v)) throw PgmError("pgm: malformed header");
  return v;
}

}  // namespace detail

/// Binary (P5) PGM with 8- or 16-bit samples. Sample s maps to s / maxval.
inline PgmImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PgmError("pgm: cannot open '" + path + "'");
  char magic[2] = {0, 0};
  is.read(magic, 2);
  if (!is || magic[0] != 'P') throw PgmError("pgm: malformed header in '" + path + "'");
  if (magic[1] != '5') throw PgmError("pgm: unsupported format P" + std::string(1, magic[1]) + " in '" + path + "'");
  PgmImage img;
  img.width = detail::read_pgm_int(is);
  img.height = detail::read_pgm_int(is);
  img.maxval = detail::read_pgm_int(is);
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535) {
    throw PgmError("pgm: malformed header in '" + path + "'");
  }
  if (!std::isspace(is.get())) throw PgmError("pgm: malformed header in '" + path + "'");
  const Eigen::Index n = static_cast<Eigen::Index>(img.width) * img.height;
  const int bytes = img.maxval > 255 ? 2 : 1;
  std::string raw(static_cast<std::size_t>(n * bytes), '\0');
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) throw PgmError("pgm: truncated data in '" + path + "'");
  img.pixels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int s;
    if (bytes == 2) {
      s = (static_cast<unsigned char>(raw[2 * i]) << 8) | static_cast<unsigned char>(raw[2 * i + 1]);
    } else {
      s = static_cast<unsigned char>(raw[i]);
    }
    if (s > img.maxval) throw PgmError("pgm: sample exceeds maxval in '" + path + "'");
    img.pixels[i] = static_cast<double>(s) / img.maxval;
  }
  return img;
}

/// Writes values clamped to [0, 1] as round(v * maxval).
inline void write_pgm(const std::string& path, ConstVecRef pixels, int width, int height, int maxval = 65535) {
  require_size(pixels.size(), static_cast<Eigen::Index>(width) * height, "write_pgm");
  if (maxval <= 0 || maxval > 65535) throw PgmError("pgm: maxval must be in [1, 65535]");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw PgmError("pgm: cannot write '" + path + "'");
  os << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::string raw;
  raw.reserve(static_cast<std::size_t>(pixels.size() * (wide ? 2 : 1)));
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    const double v = std::isfinite(pixels[i]) ? std::clamp(pixels[i], 0.0, 1.0) : 0.0;
    const int s = static_cast<int>(std::lround(v * maxval));
    if (wide) raw.push_back(static_cast<char>(s >> 8));
    raw.push_back(static_cast<char>(s & 0xff));
  }
  os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!os) throw PgmError("pgm: write failed for '" + path + "'");
}

}  // namespace mvr
