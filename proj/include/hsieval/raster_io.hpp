#pragma once

// Readers and writers for the HSC cube format, binary PPM (P6) images,
// annotation masks, raw label files, and palette renderings of label arrays.
//
// HSC layout:
//   HSC1\n width=<int>\n height=<int>\n bands=<int>\n dtype=f32\n interleave=bsq\n \n
//   followed by width*height*bands little-endian float32 values, band-sequential.
//
// Raw label files (HSL1) use the same header style with width/height only and
// little-endian int32 labels in row-major pixel order.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "hsieval/core.hpp"

namespace hsieval {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

/// Line-oriented reader over the ASCII header of HSC/HSL files.
class HeaderCursor {
 public:
  explicit HeaderCursor(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::string line() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
    if (pos_ >= bytes_.size()) throw FormatError("unterminated header line", start);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(start), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    ++pos_;
    return s;
  }

  void expect(const std::string& literal) {
    const std::size_t at = pos_;
    if (line() != literal) throw FormatError("expected header line '" + literal + "'", at);
  }

  std::size_t count(const std::string& key) {
    const std::size_t at = pos_;
    const std::string s = line();
    const std::string prefix = key + "=";
    if (s.rfind(prefix, 0) != 0) throw FormatError("expected '" + prefix + "<int>'", at);
    const std::string digits = s.substr(prefix.size());
    if (digits.empty() || digits.size() > 18 ||
        !std::all_of(digits.begin(), digits.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      throw FormatError("malformed count in '" + s + "'", at);
    }
    const std::size_t v = std::stoull(digits);
    if (v == 0) throw FormatError(key + " must be >= 1", at);
    return v;
  }

  std::size_t position() const noexcept { return pos_; }

  /// Product of header counts; anything beyond 2^40 elements cannot be a real raster.
  static std::size_t element_count(std::initializer_list<std::size_t> dims, std::size_t at) {
    constexpr std::size_t limit = std::size_t{1} << 40;
    std::size_t n = 1;
    for (std::size_t d : dims) {
      if (d > limit / n) throw FormatError("header dimensions are implausibly large", at);
      n *= d;
    }
    return n;
  }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_cube(const HyperCube& cube) {
  std::string out = "HSC1\nwidth=" + std::to_string(cube.width()) + "\nheight=" + std::to_string(cube.height()) +
                    "\nbands=" + std::to_string(cube.bands()) + "\ndtype=f32\ninterleave=bsq\n\n";
  out.reserve(out.size() + cube.data().size() * 4);
  for (float v : cube.data()) detail::append_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline HyperCube decode_cube(const std::vector<unsigned char>& bytes) {
  detail::HeaderCursor h(bytes);
  h.expect("HSC1");
  const std::size_t width = h.count("width");
  const std::size_t height = h.count("height");
  const std::size_t bands = h.count("bands");
  h.expect("dtype=f32");
  h.expect("interleave=bsq");
  h.expect("");
  const std::size_t start = h.position();
  const std::size_t n = detail::HeaderCursor::element_count({width, height, bands}, start);
  const std::size_t available = bytes.size() - start;
  if (available < n * 4) {
    throw FormatError("truncated payload: expected " + std::to_string(n * 4) + " bytes, found " +
                          std::to_string(available),
                      bytes.size());
  }
  if (available > n * 4) {
    throw FormatError("payload longer than width*height*bands float32 values", start + n * 4);
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<float>(detail::load_u32_le(bytes.data() + start + 4 * i));
    if (!std::isfinite(data[i])) throw FormatError("non-finite value in payload", start + 4 * i);
  }
  return HyperCube(width, height, bands, std::move(data));
}

inline HyperCube read_cube(const std::filesystem::path& path) { return decode_cube(detail::read_file_bytes(path)); }

inline void write_cube(const HyperCube& cube, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_cube(cube));
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

inline std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const Rgb& p : image.pixels) {
    out.push_back(static_cast<char>(p.r));
    out.push_back(static_cast<char>(p.g));
    out.push_back(static_cast<char>(p.b));
  }
  return out;
}

inline RgbImage decode_ppm(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space_and_comments();
    const std::size_t at = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 30)) throw FormatError(std::string("PPM ") + what + " too large", at);
      ++pos;
    }
    if (pos == at) throw FormatError(std::string("PPM ") + what + " missing", at);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)", 0);
  pos = 2;
  const std::size_t width = read_int("width");
  const std::size_t height = read_int("height");
  const std::size_t maxval_at = pos;
  const std::size_t maxval = read_int("maxval");
  if (maxval != 255) throw FormatError("only maxval 255 is supported", maxval_at);
  if (width == 0 || height == 0) throw FormatError("PPM dimensions must be >= 1", 2);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("missing whitespace before raster", pos);
  ++pos;
  const std::size_t need = width * height * 3;
  if (bytes.size() - pos < need) throw FormatError("truncated PPM raster", bytes.size());
  std::vector<Rgb> px(width * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = Rgb{bytes[pos + 3 * i], bytes[pos + 3 * i + 1], bytes[pos + 3 * i + 2]};
  }
  return RgbImage(width, height, std::move(px));
}

inline RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(detail::read_file_bytes(path)); }

inline void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_ppm(image));
}

// ---------------------------------------------------------------------------
// Annotation masks

enum class MaskReadMode {
  strict,    ///< every pixel must be exactly black or white
  tolerant,  ///< luminance >= 128 counts as white
};

inline AnnotationMask mask_from_image(const RgbImage& image, MaskReadMode mode = MaskReadMode::strict) {
  std::vector<int> ids(image.pixels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Rgb& p = image.pixels[i];
    if (mode == MaskReadMode::tolerant) {
      // Rec. 601 luma in integer thousandths so that grey 128 lands exactly on the threshold
      const int luma = 299 * p.r + 587 * p.g + 114 * p.b;
      ids[i] = luma >= 128000 ? AnnotationMask::kDeteriorated : AnnotationMask::kIntact;
    } else if (p == kWhite) {
      ids[i] = AnnotationMask::kDeteriorated;
    } else if (p == kBlack) {
      ids[i] = AnnotationMask::kIntact;
    } else {
      throw AnnotationError("annotation pixel is neither black nor white", i % image.width, i / image.width);
    }
  }
  return AnnotationMask(image.width, image.height, std::move(ids));
}

inline RgbImage mask_to_image(const AnnotationMask& mask) {
  std::vector<Rgb> px(mask.identifiers.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.positive(i) ? kWhite : kBlack;
  return RgbImage(mask.width, mask.height, std::move(px));
}

inline AnnotationMask read_mask(const std::filesystem::path& path, MaskReadMode mode = MaskReadMode::strict) {
  return mask_from_image(read_ppm(path), mode);
}

inline void write_mask(const AnnotationMask& mask, const std::filesystem::path& path) {
  write_ppm(mask_to_image(mask), path);
}

// ---------------------------------------------------------------------------
// Raw label files

inline std::string encode_labels(const LabelArray& labels, std::size_t width, std::size_t height) {
  if (labels.size() != width * height) throw DimensionError("label count does not match width*height");
  std::string out = "HSL1\nwidth=" + std::to_string(width) + "\nheight=" + std::to_string(height) + "\n\n";
  for (int l : labels.values()) detail::append_u32_le(out, static_cast<std::uint32_t>(l));
  return out;
}

inline LabelImage decode_labels(const std::vector<unsigned char>& bytes) {
  detail::HeaderCursor h(bytes);
  h.expect("HSL1");
  const std::size_t width = h.count("width");
  const std::size_t height = h.count("height");
  h.expect("");
  const std::size_t start = h.position();
  const std::size_t n = detail::HeaderCursor::element_count({width, height}, start);
  if (bytes.size() - start != n * 4) throw FormatError("label payload size mismatch", bytes.size());
  LabelImage img{width, height, std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    img.pixels[i] = static_cast<int>(static_cast<std::int32_t>(detail::load_u32_le(bytes.data() + start + 4 * i)));
  }
  try {
    (void)LabelArray(img.pixels);
  } catch (const InvariantError& e) {
    throw FormatError(std::string("invalid labels: ") + e.what(), start);
  }
  return img;
}

inline LabelImage read_labels(const std::filesystem::path& path) { return decode_labels(detail::read_file_bytes(path)); }

inline void write_labels(const LabelArray& labels, std::size_t width, std::size_t height,
                         const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_labels(labels, width, height));
}

// ---------------------------------------------------------------------------

/// Label l renders as palette[l]; noise renders as the palette's noise colour.
inline RgbImage render_labels(const LabelArray& labels, std::size_t width, std::size_t height, const Palette& palette) {
  if (labels.size() != width * height) throw DimensionError("label count does not match width*height");
  if (labels.n_clusters() > palette.size()) {
    throw PaletteError("palette has " + std::to_string(palette.size()) + " colours but labels need " +
                       std::to_string(labels.n_clusters()));
  }
  std::vector<Rgb> px(labels.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const int l = labels[i];
    px[i] = l == kNoise ? palette.noise() : palette[static_cast<std::size_t>(l)];
  }
  return RgbImage(width, height, std::move(px));
}

}  // namespace hsieval
