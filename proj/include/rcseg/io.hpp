#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "rcseg/contour.hpp"
#include "rcseg/raster.hpp"

namespace rcseg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decoding failure. offset() is the byte position where it was detected.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { MalformedHeader, TruncatedPayload, UnsupportedType };

  FormatError(Kind kind, const std::string& what, std::optional<std::size_t> offset = {})
      : std::runtime_error(offset ? what + " (byte " + std::to_string(*offset) + ")" : what),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const { return kind_; }
  std::optional<std::size_t> offset() const { return offset_; }

 private:
  Kind kind_;
  std::optional<std::size_t> offset_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Writes to a temporary sibling, then renames over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

namespace detail {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : b_(bytes) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long long integer(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > (1ll << 40))
        throw FormatError(FormatError::Kind::MalformedHeader, std::string(what) + " too large",
                          start);
      ++pos_;
    }
    if (pos_ == start)
      throw FormatError(FormatError::Kind::MalformedHeader,
                        std::string("expected integer ") + what, start);
    return v;
  }

  void single_whitespace() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
      throw FormatError(FormatError::Kind::MalformedHeader, "expected whitespace after header",
                        pos_);
    ++pos_;
  }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline void put_u16_be(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

inline void put_u16_le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

inline Image decode_pgm(std::string_view bytes) {
  using K = FormatError::Kind;
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
    throw FormatError(K::MalformedHeader, "not a PGM (P2/P5) file", 0);
  const bool binary = bytes[1] == '5';
  detail::HeaderReader h(bytes.substr(2));
  const std::size_t base = 2;
  const long long w = h.integer("width");
  const long long hh = h.integer("height");
  const long long maxval = h.integer("maxval");
  if (w < 1 || hh < 1) throw FormatError(K::MalformedHeader, "PGM extents must be positive", base);
  if (maxval < 1 || maxval > 65535)
    throw FormatError(K::UnsupportedType, "PGM maxval must be in [1, 65535]", base + h.pos());
  const Shape shape{static_cast<int>(w), static_cast<int>(hh)};
  Image out(shape);
  if (binary) {
    h.single_whitespace();
    const std::size_t start = base + h.pos();
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = static_cast<std::size_t>(shape.size()) * bpp;
    if (bytes.size() - start < need)
      throw FormatError(K::TruncatedPayload,
                        "PGM payload has " + std::to_string(bytes.size() - start) +
                            " bytes, expected " + std::to_string(need),
                        bytes.size());
    for (Index i = 0; i < shape.size(); ++i) {
      const std::size_t o = start + static_cast<std::size_t>(i) * bpp;
      unsigned v = static_cast<unsigned char>(bytes[o]);
      if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[o + 1]);
      if (v > maxval) throw FormatError(K::MalformedHeader, "PGM sample exceeds maxval", o);
      out[i] = v;
    }
  } else {
    for (Index i = 0; i < shape.size(); ++i) {
      long long v;
      try {
        v = h.integer("sample");
      } catch (const FormatError&) {
        throw FormatError(K::TruncatedPayload, "PGM (P2) has too few samples",
                          base + h.pos());
      }
      if (v > maxval)
        throw FormatError(K::MalformedHeader, "PGM sample exceeds maxval", base + h.pos());
      out[i] = static_cast<double>(v);
    }
  }
  return out;
}

namespace detail {

struct NrrdHeader {
  int dimension = 0;
  std::vector<int> sizes;
  std::string type;
  std::string encoding;
  std::string endian = "little";
  std::string data_file;
  std::size_t payload_offset = 0;
};

inline NrrdHeader parse_nrrd_header(std::string_view bytes) {
  using K = FormatError::Kind;
  if (bytes.substr(0, 4) != "NRRD") throw FormatError(K::MalformedHeader, "not a NRRD file", 0);
  NrrdHeader h;
  std::size_t pos = bytes.find('\n');
  if (pos == std::string_view::npos)
    throw FormatError(K::MalformedHeader, "NRRD header not terminated", bytes.size());
  ++pos;
  bool ended = false;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    const std::string_view line = bytes.substr(pos, eol - pos);
    const std::size_t line_start = pos;
    pos = eol + 1;
    if (trim(line).empty()) {
      ended = true;
      break;
    }
    if (line[0] == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos)
      throw FormatError(K::MalformedHeader, "NRRD line without ':'", line_start);
    const std::string key = trim(line.substr(0, colon));
    std::string value = trim(line.substr(colon + 1));
    if (!value.empty() && value[0] == '=') value = trim(value.substr(1));
    if (key == "dimension") {
      h.dimension = std::atoi(value.c_str());
    } else if (key == "sizes") {
      std::istringstream ss(value);
      int s;
      while (ss >> s) h.sizes.push_back(s);
    } else if (key == "type") {
      h.type = value;
    } else if (key == "encoding") {
      h.encoding = value;
    } else if (key == "endian") {
      h.endian = value;
    } else if (key == "data file" || key == "datafile") {
      h.data_file = value;
    }
  }
  if (!ended && h.data_file.empty())
    throw FormatError(K::MalformedHeader, "NRRD header not terminated by a blank line",
                      bytes.size());
  h.payload_offset = std::min(pos, bytes.size());
  if (h.dimension != 2 && h.dimension != 3)
    throw FormatError(K::UnsupportedType, "NRRD dimension must be 2 or 3");
  if (static_cast<int>(h.sizes.size()) != h.dimension)
    throw FormatError(K::MalformedHeader, "NRRD sizes do not match dimension");
  for (int s : h.sizes)
    if (s < 1) throw FormatError(K::MalformedHeader, "NRRD sizes must be positive");
  if (h.encoding != "raw") throw FormatError(K::UnsupportedType, "NRRD encoding must be raw");
  if (h.endian != "little") throw FormatError(K::UnsupportedType, "NRRD endian must be little");
  return h;
}

inline int nrrd_type_size(const std::string& type) {
  if (type == "uchar" || type == "unsigned char" || type == "uint8" || type == "uint8_t")
    return 1;
  if (type == "ushort" || type == "unsigned short" || type == "uint16" || type == "uint16_t" ||
      type == "unsigned short int")
    return 2;
  if (type == "float") return 4;
  throw FormatError(FormatError::Kind::UnsupportedType, "unsupported NRRD type: " + type);
}

}  // namespace detail

/// Decodes a NRRD file. Detached payloads are resolved against `dir`.
inline Image decode_nrrd(std::string_view bytes, const std::filesystem::path& dir = {}) {
  using K = FormatError::Kind;
  const detail::NrrdHeader h = detail::parse_nrrd_header(bytes);
  const int tsize = detail::nrrd_type_size(h.type);
  const Shape shape{std::span<const int>(h.sizes)};
  std::string detached;
  std::string_view payload;
  std::size_t base = 0;
  if (!h.data_file.empty()) {
    detached = read_file(dir / h.data_file);
    payload = detached;
  } else {
    payload = bytes.substr(h.payload_offset);
    base = h.payload_offset;
  }
  const std::size_t need = static_cast<std::size_t>(shape.size()) * tsize;
  if (payload.size() < need)
    throw FormatError(K::TruncatedPayload,
                      "NRRD payload has " + std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(need),
                      base + payload.size());
  Image out(shape);
  for (Index i = 0; i < shape.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(payload.data()) + i * tsize;
    if (tsize == 1) {
      out[i] = p[0];
    } else if (tsize == 2) {
      out[i] = static_cast<double>(p[0] | (p[1] << 8));
    } else {
      const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                              (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) |
                              (static_cast<std::uint32_t>(p[3]) << 24);
      float f;
      std::memcpy(&f, &u, sizeof f);
      out[i] = f;
    }
  }
  return out;
}

/// Reads binary/plain PGM (2D) or raw little-endian NRRD (2D/3D).
inline Image read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.rfind("NRRD", 0) == 0) return decode_nrrd(bytes, path.parent_path());
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes);
  throw FormatError(FormatError::Kind::MalformedHeader, "unrecognized image format", 0);
}

inline LabelImage read_labels(const std::filesystem::path& path) {
  const Image img = read_image(path);
  LabelImage out(img.shape());
  for (Index i = 0; i < img.size(); ++i) {
    const double v = img[i];
    if (v < 0.0 || v != std::floor(v)) throw IoError("label file holds non-integer values");
    out[i] = static_cast<Label>(v);
  }
  return out;
}

inline std::string encode_pgm(const Raster<std::uint16_t>& img, unsigned maxval) {
  if (img.dim() != 2) throw std::invalid_argument("PGM output requires a 2D raster");
  std::string out = "P5\n" + std::to_string(img.shape().extent(0)) + " " +
                    std::to_string(img.shape().extent(1)) + "\n" + std::to_string(maxval) + "\n";
  for (std::uint16_t v : img.values()) {
    if (maxval < 256)
      out.push_back(static_cast<char>(v));
    else
      detail::put_u16_be(out, v);
  }
  return out;
}

inline std::string nrrd_header(const Shape& shape, const std::string& type) {
  std::string h = "NRRD0004\ntype: " + type + "\ndimension: " + std::to_string(shape.dim()) +
                  "\nsizes:";
  for (int e : shape.extents()) h += " " + std::to_string(e);
  h += "\nencoding: raw\nendian: little\n\n";
  return h;
}

inline std::string encode_labels(const LabelImage& labels) {
  Raster<std::uint16_t> u(labels.shape());
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] > 65535) throw IoError("label exceeds 65535; cannot write 16-bit output");
    u[i] = static_cast<std::uint16_t>(labels[i]);
  }
  if (labels.dim() == 2) return encode_pgm(u, 65535);
  std::string out = nrrd_header(labels.shape(), "ushort");
  for (std::uint16_t v : u.values()) detail::put_u16_le(out, v);
  return out;
}

/// 16-bit P5 in 2D, ushort NRRD in 3D; label values verbatim.
inline void write_labels(const LabelImage& labels, const std::filesystem::path& path) {
  write_atomic(path, encode_labels(labels));
}

enum class ImageFormat { FloatNrrd, Pgm };

/// Float NRRD, or PGM. Images holding integers in [0, 65535] are written to
/// PGM verbatim with maxval = max(1, peak); anything else is scaled so the
/// peak maps to 65535.
inline void write_image(const Image& image, const std::filesystem::path& path,
                        ImageFormat format) {
  if (format == ImageFormat::FloatNrrd) {
    std::string out = nrrd_header(image.shape(), "float");
    for (double v : image.values()) {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
    }
    write_atomic(path, out);
    return;
  }
  double peak = 0.0;
  bool integral = true;
  for (double v : image.values()) {
    peak = std::max(peak, v);
    integral &= v >= 0.0 && v <= 65535.0 && v == std::floor(v);
  }
  Raster<std::uint16_t> u(image.shape());
  unsigned maxval = 65535;
  if (integral) {
    maxval = std::max(1u, static_cast<unsigned>(peak));
    for (Index i = 0; i < image.size(); ++i) u[i] = static_cast<std::uint16_t>(image[i]);
  } else {
    for (Index i = 0; i < image.size(); ++i) {
      const double v = peak > 0.0 ? std::max(0.0, image[i]) / peak * 65535.0 : 0.0;
      u[i] = static_cast<std::uint16_t>(std::lround(v));
    }
  }
  write_atomic(path, encode_pgm(u, maxval));
}

/// 8-bit mask, 255 on every pixel hosting a foreground-owned particle.
inline Raster<std::uint8_t> contour_mask(const LabelImage& labels, const Connectivity& conn) {
  const ContourState contour = scan_contour(labels, conn);
  Raster<std::uint8_t> mask(labels.shape(), 0);
  for (const Particle& p : contour.particles())
    if (p.owner != kBackground) mask[p.pixel] = 255;
  return mask;
}

inline void write_contour_mask(const LabelImage& labels, const Connectivity& conn,
                               const std::filesystem::path& path) {
  const Raster<std::uint8_t> mask = contour_mask(labels, conn);
  if (labels.dim() == 2) {
    write_atomic(path, encode_pgm(raster_cast<std::uint16_t>(mask), 255));
    return;
  }
  std::string out = nrrd_header(labels.shape(), "uchar");
  for (std::uint8_t v : mask.values()) out.push_back(static_cast<char>(v));
  write_atomic(path, out);
}

}  // namespace rcseg
