#pragma once

// Core data model: hyperspectral cubes, pixel feature matrices, label arrays
// and the RGB carriers used for composites, masks and cluster renderings.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsieval/error.hpp"

namespace hsieval {

/// Reserved label for pixels that a density method assigns to no cluster.
inline constexpr int kNoise = -1;

/// H x W x C reflectance raster, band-sequential, row-major within a band.
class HyperCube {
 public:
  HyperCube() = default;

  HyperCube(std::size_t width, std::size_t height, std::size_t bands, std::vector<float> data)
      : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
    if (width_ == 0 || height_ == 0 || bands_ == 0) {
      throw InvariantError("cube dimensions must be >= 1");
    }
    if (data_.size() != width_ * height_ * bands_) {
      throw InvariantError("cube data length " + std::to_string(data_.size()) + " != width*height*bands = " +
                           std::to_string(width_ * height_ * bands_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw InvariantError("cube value at flat index " + std::to_string(i) + " is not finite");
      }
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }

  float at(std::size_t x, std::size_t y, std::size_t band) const {
    return data_[band * pixel_count() + y * width_ + x];
  }

  std::span<const float> band(std::size_t b) const {
    return std::span<const float>(data_).subspan(b * pixel_count(), pixel_count());
  }

  std::span<const float> data() const noexcept { return data_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
};

/// N x F matrix of per-pixel feature vectors, stored row-major.
class PixelMatrix {
 public:
  PixelMatrix() = default;

  PixelMatrix(std::size_t n_pixels, std::size_t n_features, std::vector<double> values)
      : rows_(n_pixels), cols_(n_features), values_(std::move(values)) {
    if (cols_ == 0) throw InvariantError("pixel matrix needs at least one feature");
    if (values_.size() != rows_ * cols_) {
      throw InvariantError("pixel matrix storage length does not match n_pixels * n_features");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw InvariantError("pixel matrix entry (" + std::to_string(i / cols_) + ", " + std::to_string(i % cols_) +
                             ") is not finite");
      }
    }
  }

  /// Builds from nested rows; every row must have the same length.
  static PixelMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvariantError("pixel matrix needs at least one row");
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("ragged rows in pixel matrix");
      values.insert(values.end(), r.begin(), r.end());
    }
    return PixelMatrix(rows.size(), cols, std::move(values));
  }

  std::size_t n_pixels() const noexcept { return rows_; }
  std::size_t n_features() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols_, cols_);
  }

  std::span<const double> values() const noexcept { return values_; }

  PixelMatrix select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size() * cols_);
    for (std::size_t i : indices) {
      const auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return PixelMatrix(indices.size(), cols_, std::move(out));
  }

  PixelMatrix scaled(double factor) const {
    std::vector<double> out(values_);
    for (double& v : out) v *= factor;
    return PixelMatrix(rows_, cols_, std::move(out));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Cluster assignment per pixel. Non-noise labels are exactly {0, ..., K-1}.
class LabelArray {
 public:
  LabelArray() = default;

  explicit LabelArray(std::vector<int> labels) : labels_(std::move(labels)) {
    int max_label = kNoise;
    for (int l : labels_) {
      if (l < kNoise) throw InvariantError("label " + std::to_string(l) + " is below the noise sentinel");
      max_label = std::max(max_label, l);
    }
    std::vector<char> seen(static_cast<std::size_t>(max_label + 1), 0);
    for (int l : labels_) {
      if (l >= 0) seen[static_cast<std::size_t>(l)] = 1;
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (!seen[k]) throw InvariantError("non-noise labels are not contiguous: label " + std::to_string(k) + " unused");
    }
    n_clusters_ = seen.size();
  }

  /// Renumbers arbitrary non-negative labels to 0..K-1 preserving their numeric
  /// order; negative labels become noise.
  static LabelArray compacted(std::span<const int> raw) {
    std::vector<int> used;
    for (int l : raw) {
      if (l >= 0) used.push_back(l);
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::vector<int> out(raw.size(), kNoise);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] >= 0) {
        out[i] = static_cast<int>(std::lower_bound(used.begin(), used.end(), raw[i]) - used.begin());
      }
    }
    return LabelArray(std::move(out));
  }

  std::size_t size() const noexcept { return labels_.size(); }
  /// K, the number of distinct non-noise labels. Zero only for all-noise output.
  std::size_t n_clusters() const noexcept { return n_clusters_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  std::span<const int> values() const noexcept { return labels_; }

  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), kNoise));
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(n_clusters_, 0);
    for (int l : labels_) {
      if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    }
    return sizes;
  }

 private:
  std::vector<int> labels_;
  std::size_t n_clusters_ = 0;
};

/// Label raster, height rows of width labels.
struct LabelImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> pixels;

  int at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// 1-based band indices for a natural-colour composite.
struct ChannelTriplet {
  std::size_t red = 15;
  std::size_t green = 6;
  std::size_t blue = 3;

  friend bool operator==(const ChannelTriplet&, const ChannelTriplet&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend auto operator<=>(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, std::vector<Rgb> px) : width(w), height(h), pixels(std::move(px)) {
    if (pixels.size() != width * height) throw DimensionError("rgb image pixel count != width*height");
  }

  const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Colour per cluster label plus a reserved noise colour; all colours distinct.
class Palette {
 public:
  Palette(std::vector<Rgb> colors, Rgb noise) : colors_(std::move(colors)), noise_(noise) {
    std::vector<Rgb> all(colors_);
    all.push_back(noise_);
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      throw PaletteError("palette colours must be pairwise distinct and differ from the noise colour");
    }
  }

  /// The fixed six-label palette; noise renders grey.
  static Palette default_palette() {
    return Palette({{230, 25, 75}, {60, 180, 75}, {255, 225, 25}, {0, 130, 200}, {245, 130, 48}, {145, 30, 180}},
                   {128, 128, 128});
  }

  /// Default palette grown to at least `n` colours. Extra colours walk the hue
  /// circle by the golden angle and skip anything already taken.
  static Palette extended(std::size_t n) {
    Palette base = default_palette();
    std::vector<Rgb> colors = base.colors_;
    double hue = 0.11;
    while (colors.size() < n) {
      hue = std::fmod(hue + 0.618033988749895, 1.0);
      const double value = 0.55 + 0.4 * std::fmod(static_cast<double>(colors.size()) * 0.37, 1.0);
      const Rgb c = hsv_to_rgb(hue, 0.75, value);
      if (c != base.noise_ && std::find(colors.begin(), colors.end(), c) == colors.end()) colors.push_back(c);
    }
    return Palette(std::move(colors), base.noise_);
  }

  std::size_t size() const noexcept { return colors_.size(); }
  const Rgb& operator[](std::size_t i) const { return colors_[i]; }
  const Rgb& noise() const noexcept { return noise_; }
  std::span<const Rgb> colors() const noexcept { return colors_; }

  /// Index of `c` among label colours, or nullopt.
  std::optional<std::size_t> find(const Rgb& c) const {
    auto it = std::find(colors_.begin(), colors_.end(), c);
    if (it == colors_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - colors_.begin());
  }

 private:
  static Rgb hsv_to_rgb(double h, double s, double v) {
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(i) % 6) {
      case 0: r = v, g = t, b = p; break;
      case 1: r = q, g = v, b = p; break;
      case 2: r = p, g = v, b = t; break;
      case 3: r = p, g = q, b = v; break;
      case 4: r = t, g = p, b = v; break;
      default: r = v, g = p, b = q; break;
    }
    auto u8 = [](double x) { return static_cast<std::uint8_t>(std::floor(x * 255.0 + 0.5)); };
    return {u8(r), u8(g), u8(b)};
  }

  std::vector<Rgb> colors_;
  Rgb noise_;
};

/// Binary ground truth per pixel: identifier 10 marks deterioration, 0 intact.
struct AnnotationMask {
  static constexpr int kIntact = 0;
  static constexpr int kDeteriorated = 10;

  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> identifiers;

  AnnotationMask() = default;
  AnnotationMask(std::size_t w, std::size_t h, std::vector<int> ids) : width(w), height(h), identifiers(std::move(ids)) {
    if (identifiers.size() != width * height) throw DimensionError("mask identifier count != width*height");
    for (int v : identifiers) {
      if (v != kIntact && v != kDeteriorated) throw InvariantError("mask identifiers must be 0 or 10");
    }
  }

  bool positive(std::size_t i) const { return identifiers[i] == kDeteriorated; }

  std::size_t positive_count() const {
    return static_cast<std::size_t>(std::count(identifiers.begin(), identifiers.end(), kDeteriorated));
  }
};

// ---------------------------------------------------------------------------
// Operations

/// Row p = y*width + x holds the band vector of pixel (x, y). Values are copied unchanged.
inline PixelMatrix flatten(const HyperCube& cube) {
  const std::size_t n = cube.pixel_count();
  const std::size_t c = cube.bands();
  std::vector<double> values(n * c);
  for (std::size_t b = 0; b < c; ++b) {
    const auto plane = cube.band(b);
    for (std::size_t p = 0; p < n; ++p) values[p * c + b] = static_cast<double>(plane[p]);
  }
  return PixelMatrix(n, c, std::move(values));
}

inline LabelImage unflatten_labels(const LabelArray& labels, std::size_t width, std::size_t height) {
  if (labels.size() != width * height) {
    throw DimensionError("label count " + std::to_string(labels.size()) + " does not match " + std::to_string(width) +
                         "x" + std::to_string(height));
  }
  return LabelImage{width, height, std::vector<int>(labels.values().begin(), labels.values().end())};
}

inline LabelArray flatten_labels(const LabelImage& image) { return LabelArray(image.pixels); }

enum class NormalizationMode { none, minmax, zscore };

inline std::string_view to_string(NormalizationMode m) {
  switch (m) {
    case NormalizationMode::none: return "none";
    case NormalizationMode::minmax: return "minmax";
    case NormalizationMode::zscore: return "zscore";
  }
  return "none";
}

inline NormalizationMode parse_normalization(std::string_view s) {
  if (s == "none") return NormalizationMode::none;
  if (s == "minmax" || s == "min-max") return NormalizationMode::minmax;
  if (s == "zscore" || s == "z-score") return NormalizationMode::zscore;
  throw ParameterError("unknown normalization mode '" + std::string(s) + "'");
}

/// Per-band rescaling. Constant bands map to all zeros under both scaling modes.
inline PixelMatrix normalize(const PixelMatrix& m, NormalizationMode mode) {
  if (mode == NormalizationMode::none) return m;
  const std::size_t n = m.n_pixels(), c = m.n_features();
  std::vector<double> out(m.values().begin(), m.values().end());
  for (std::size_t b = 0; b < c; ++b) {
    if (mode == NormalizationMode::minmax) {
      double lo = m(0, b), hi = m(0, b);
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, m(i, b));
        hi = std::max(hi, m(i, b));
      }
      const double range = hi - lo;
      for (std::size_t i = 0; i < n; ++i) out[i * c + b] = range > 0 ? (m(i, b) - lo) / range : 0.0;
    } else {
      double mean = 0;
      for (std::size_t i = 0; i < n; ++i) mean += m(i, b);
      mean /= static_cast<double>(n);
      double var = 0;
      for (std::size_t i = 0; i < n; ++i) var += (m(i, b) - mean) * (m(i, b) - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) out[i * c + b] = sd > 0 ? (m(i, b) - mean) / sd : 0.0;
    }
  }
  return PixelMatrix(n, c, std::move(out));
}

/// Natural-colour composite: each selected band is min-max scaled to 0..255
/// independently and rounded half-up.
inline RgbImage rgb_composite(const HyperCube& cube, const ChannelTriplet& triplet) {
  const std::size_t indices[3] = {triplet.red, triplet.green, triplet.blue};
  for (std::size_t idx : indices) {
    if (idx < 1 || idx > cube.bands()) {
      throw ChannelError("band index " + std::to_string(idx) + " outside [1, " + std::to_string(cube.bands()) + "]");
    }
  }
  const std::size_t n = cube.pixel_count();
  std::vector<Rgb> px(n);
  for (int ch = 0; ch < 3; ++ch) {
    const auto plane = cube.band(indices[ch] - 1);
    const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
    const double lo = *lo_it, range = static_cast<double>(*hi_it) - lo;
    for (std::size_t p = 0; p < n; ++p) {
      const double v = range > 0 ? (static_cast<double>(plane[p]) - lo) / range : 0.0;
      const auto q = static_cast<std::uint8_t>(std::min(255.0, std::floor(v * 255.0 + 0.5)));
      (ch == 0 ? px[p].r : ch == 1 ? px[p].g : px[p].b) = q;
    }
  }
  return RgbImage(cube.width(), cube.height(), std::move(px));
}

}  // namespace hsieval
