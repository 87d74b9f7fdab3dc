#pragma once

// Batch driver: read cube -> flatten -> normalize -> cluster -> validity ->
// best match against the mask, for every (image, method) pair, then per-method
// averages.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsieval/clustering.hpp"
#include "hsieval/groundtruth.hpp"
#include "hsieval/pipeline/config.hpp"
#include "hsieval/raster_io.hpp"
#include "hsieval/validity.hpp"

namespace hsieval {

/// One (image, method) row. Empty optionals are cells excluded from averages:
/// an index that is undefined (fewer than two clusters, all noise) or hit the
/// +infinity sentinel, or scores when no cluster exists.
struct EntryResult {
  std::string image;
  std::string method;  // the method label
  std::size_t k_used = 0;
  std::size_t noise_count = 0;
  std::optional<double> chi, dbi, silhouette;
  std::optional<int> best_label;
  std::optional<double> accuracy, precision, recall, f1;
  std::optional<double> seconds;
  std::map<std::string, double> resolved;
  std::vector<std::string> warnings;

  /// Metric cells in column order: chi, dbi, silhouette, accuracy, precision, recall, f1.
  std::array<const std::optional<double>*, 7> metrics() const {
    return {&chi, &dbi, &silhouette, &accuracy, &precision, &recall, &f1};
  }
};

inline constexpr std::array<std::string_view, 7> kMetricNames = {"chi", "dbi", "silhouette", "accuracy",
                                                                  "precision", "recall", "f1"};

struct FailureRecord {
  std::string image;
  std::string method;  // empty when the image itself could not be loaded
  std::string message;
};

struct MethodAverage {
  std::string method;
  std::size_t n_images = 0;
  std::array<std::optional<double>, 7> means;  // kMetricNames order; empty when no finite value exists
  std::size_t degenerate_count = 0;            // metric cells left out of the means
};

struct EvaluationReport {
  std::uint64_t seed = 0;
  std::string normalization;
  std::string criterion;
  std::string chi_formula;
  std::vector<std::string> methods;  // labels in config order
  std::vector<EntryResult> entries;  // image-major, then method in config order
  std::vector<FailureRecord> failures;
  std::vector<MethodAverage> averages;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

/// Seed for one (image, method) fit. Keyed on names, not positions, so that
/// editing the dataset list leaves every other row untouched.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view image, std::string_view method_label,
                                 std::uint64_t method_seed) {
  std::uint64_t h = detail::splitmix64(run_seed);
  h = detail::splitmix64(h ^ detail::fnv1a(image));
  h = detail::splitmix64(h ^ detail::fnv1a(method_label));
  return detail::splitmix64(h ^ method_seed);
}

/// Averages over the finite cells of each method's rows.
inline std::vector<MethodAverage> aggregate(const std::vector<std::string>& methods,
                                            const std::vector<EntryResult>& entries) {
  std::vector<MethodAverage> out;
  for (const auto& label : methods) {
    MethodAverage avg;
    avg.method = label;
    std::array<double, 7> sum{};
    std::array<std::size_t, 7> count{};
    for (const auto& e : entries) {
      if (e.method != label) continue;
      ++avg.n_images;
      const auto cells = e.metrics();
      for (std::size_t m = 0; m < cells.size(); ++m) {
        if (cells[m]->has_value() && std::isfinite(**cells[m])) {
          sum[m] += **cells[m];
          ++count[m];
        } else {
          ++avg.degenerate_count;
        }
      }
    }
    for (std::size_t m = 0; m < sum.size(); ++m) {
      if (count[m] > 0) avg.means[m] = sum[m] / static_cast<double>(count[m]);
    }
    out.push_back(std::move(avg));
  }
  return out;
}

namespace detail {

inline std::optional<double> finite_or_empty(const IndexValue& v) {
  if (v.degenerate || !std::isfinite(v.value)) return std::nullopt;
  return v.value;
}

template <class F>
std::optional<double> guarded_index(F&& f) {
  try {
    return finite_or_empty(f());
  } catch (const UndefinedIndexError&) {
    return std::nullopt;
  } catch (const EmptyPartitionError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Fits and scores one method on an already normalized image.
inline EntryResult evaluate_entry(const RunConfig& config, const DatasetEntry& image, const MethodSpec& method,
                                  const PixelMatrix& x, const AnnotationMask& mask) {
  EntryResult e;
  e.image = image.name;
  e.method = method.label;
  ClusterParams params = method.params;
  params.seed = derive_seed(config.seed, image.name, method.label, method.params.seed);

  const auto t0 = std::chrono::steady_clock::now();
  ClusterResult fit = cluster(x, params);
  const auto t1 = std::chrono::steady_clock::now();
  if (config.report_timing) e.seconds = std::chrono::duration<double>(t1 - t0).count();

  const LabelArray& labels = fit.labels;
  e.k_used = labels.n_clusters();
  e.noise_count = labels.noise_count();
  e.resolved = fit.resolved;
  e.warnings = fit.warnings;

  e.chi = detail::guarded_index([&] { return calinski_harabasz(x, labels, config.chi_formula); });
  e.dbi = detail::guarded_index([&] { return davies_bouldin(x, labels); });
  e.silhouette = detail::guarded_index([&] { return silhouette(x, labels, config.silhouette_sample_cap, params.seed); });

  try {
    const auto match = best_match(identifiers_from_mask(mask), identifiers_from_labels(labels), config.criterion);
    const auto& s = match.best();
    e.best_label = match.best_label;
    e.accuracy = s.accuracy;
    e.precision = s.precision;
    e.recall = s.recall;
    e.f1 = s.f1;
  } catch (const EmptyClusteringError&) {
    e.warnings.push_back("no clusters to match against the mask");
  }

  if (config.write_images) {
    const auto dir = config.output_dir / "labels";
    std::filesystem::create_directories(dir);
    const auto stem = image.name + "__" + method.label;
    const Palette palette = e.k_used <= Palette::default_palette().size() ? Palette::default_palette()
                                                                            : Palette::extended(e.k_used);
    write_ppm(render_labels(labels, mask.width, mask.height, palette), dir / (stem + ".ppm"));
    write_labels(labels, mask.width, mask.height, dir / (stem + ".hsl"));
  }
  return e;
}

/// Runs every (image, method) pair. Per-image and per-fit failures are
/// recorded and skipped; config errors throw before any work.
/// `progress` (optional) is called after each pair.
inline EvaluationReport run_pipeline(const RunConfig& config,
                                     const std::function<void(const EntryResult&)>& progress = {}) {
  config.validate();
  EvaluationReport report;
  report.seed = config.seed;
  report.normalization = std::string(to_string(config.normalization));
  report.criterion = std::string(to_string(config.criterion));
  report.chi_formula = config.chi_formula == ChiFormula::standard ? "standard" : "as_printed";
  for (const auto& m : config.methods) report.methods.push_back(m.label);

  for (const auto& image : config.dataset) {
    PixelMatrix x;
    AnnotationMask mask;
    try {
      const HyperCube cube = read_cube(image.cube);
      mask = read_mask(image.mask, config.mask_mode);
      if (mask.width != cube.width() || mask.height != cube.height()) {
        throw DimensionError("mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                             ", cube is " + std::to_string(cube.width()) + "x" + std::to_string(cube.height()));
      }
      x = normalize(flatten(cube), config.normalization);
    } catch (const Error& err) {
      report.failures.push_back({image.name, "", err.what()});
      continue;
    }
    for (const auto& method : config.methods) {
      try {
        report.entries.push_back(evaluate_entry(config, image, method, x, mask));
        if (progress) progress(report.entries.back());
      } catch (const Error& err) {
        report.failures.push_back({image.name, method.label, err.what()});
      } catch (const std::filesystem::filesystem_error& err) {
        report.failures.push_back({image.name, method.label, err.what()});
      }
    }
  }
  report.averages = aggregate(report.methods, report.entries);
  return report;
}

}  // namespace hsieval
