#pragma once

// Batch run configuration, read from a single JSON document.
//
//   {
//     "dataset": [{"cube": "a.hsc", "mask": "a_mask.ppm", "name": "a"}],
//     "methods": ["kmeans", {"method": "dbscan", "label": "dbscan_tight", "eps": 0.05}],
//     "normalization": "minmax",
//     "rgb": [15, 6, 3],
//     "silhouette_sample_cap": 5000,
//     "seed": 0,
//     "output_dir": "out"
//   }
//
// Relative paths resolve against the directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsieval/clustering/common.hpp"
#include "hsieval/core.hpp"
#include "hsieval/groundtruth.hpp"
#include "hsieval/raster_io.hpp"
#include "hsieval/validity.hpp"

namespace hsieval {

struct DatasetEntry {
  std::string name;
  std::filesystem::path cube;
  std::filesystem::path mask;
};

struct MethodSpec {
  std::string label;  // unique within a run; defaults to the method name
  ClusterParams params;
};

struct RunConfig {
  std::vector<DatasetEntry> dataset;
  std::vector<MethodSpec> methods;
  NormalizationMode normalization = NormalizationMode::minmax;
  ChannelTriplet rgb;
  std::size_t silhouette_sample_cap = 5000;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  MatchCriterion criterion = MatchCriterion::f1;
  ChiFormula chi_formula = ChiFormula::standard;
  MaskReadMode mask_mode = MaskReadMode::strict;
  bool report_timing = true;  // false leaves the seconds column empty so runs compare byte for byte
  bool write_images = false;  // label PPM + raw label file per (image, method)

  void validate() const {
    if (dataset.empty()) throw ConfigError("config lists no dataset entries");
    if (methods.empty()) throw ConfigError("config lists no methods");
    if (silhouette_sample_cap == 0) throw ConfigError("silhouette_sample_cap must be >= 1");
    std::set<std::string> names, labels;
    for (const auto& e : dataset) {
      if (e.name.empty()) throw ConfigError("dataset entry has an empty name");
      if (!names.insert(e.name).second) throw ConfigError("duplicate dataset name '" + e.name + "'");
      if (e.cube.empty() || e.mask.empty()) throw ConfigError("dataset entry '" + e.name + "' needs cube and mask");
      if (e.cube.lexically_normal() == e.mask.lexically_normal()) {
        throw ConfigError("dataset entry '" + e.name + "' uses the same path for cube and mask");
      }
    }
    for (const auto& m : methods) {
      if (!labels.insert(m.label).second) throw ConfigError("duplicate method label '" + m.label + "'");
      try {
        m.params.validate();
      } catch (const ParameterError& e) {
        throw ConfigError("method '" + m.label + "': " + e.what());
      }
    }
  }
};

namespace detail {

inline void apply_param(ClusterParams& p, const std::string& key, const nlohmann::json& v) {
  if (key == "k") p.k = v.get<std::size_t>();
  else if (key == "eps") p.eps = v.get<double>();
  else if (key == "min_pts") p.min_pts = v.get<std::size_t>();
  else if (key == "bandwidth") p.bandwidth = v.get<double>();
  else if (key == "xi") p.xi = v.get<double>();
  else if (key == "birch_threshold") p.birch_threshold = v.get<double>();
  else if (key == "birch_branching") p.birch_branching = v.get<std::size_t>();
  else if (key == "seed") p.seed = v.get<std::uint64_t>();
  else if (key == "max_iter") p.max_iter = v.get<std::size_t>();
  else if (key == "tol") p.tol = v.get<double>();
  else if (key == "spectral_neighbors") p.spectral_neighbors = v.get<std::size_t>();
  else if (key == "spectral_sample") p.spectral_sample = v.get<std::size_t>();
  else throw ConfigError("unknown method parameter '" + key + "'");
}

inline nlohmann::json params_to_json(const ClusterParams& p) {
  nlohmann::json j;
  j["method"] = std::string(to_string(p.method));
  j["k"] = p.k;
  if (p.eps) j["eps"] = *p.eps;
  if (p.min_pts) j["min_pts"] = *p.min_pts;
  if (p.bandwidth) j["bandwidth"] = *p.bandwidth;
  j["xi"] = p.xi;
  j["birch_threshold"] = p.birch_threshold;
  j["birch_branching"] = p.birch_branching;
  j["seed"] = p.seed;
  j["max_iter"] = p.max_iter;
  j["tol"] = p.tol;
  j["spectral_neighbors"] = p.spectral_neighbors;
  j["spectral_sample"] = p.spectral_sample;
  return j;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

inline MethodSpec method_from_json(const nlohmann::json& j) {
  MethodSpec m;
  if (j.is_string()) {
    m.params.method = parse_method(j.get<std::string>());
    m.label = j.get<std::string>();
    return m;
  }
  if (!j.is_object() || !j.contains("method")) throw ConfigError("method entries must be a name or an object with \"method\"");
  m.params.method = parse_method(j.at("method").get<std::string>());
  m.label = std::string(to_string(m.params.method));
  for (const auto& [key, value] : j.items()) {
    if (key == "method") continue;
    if (key == "label") m.label = value.get<std::string>();
    else detail::apply_param(m.params, key, value);
  }
  return m;
}

/// Parses a config document; `base_dir` anchors relative paths.
inline RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") {
        for (const auto& e : v) {
          DatasetEntry d;
          d.cube = detail::resolve(base_dir, e.at("cube").get<std::string>());
          d.mask = detail::resolve(base_dir, e.at("mask").get<std::string>());
          d.name = e.contains("name") ? e.at("name").get<std::string>() : d.cube.stem().string();
          c.dataset.push_back(std::move(d));
        }
      } else if (key == "methods") {
        for (const auto& m : v) c.methods.push_back(method_from_json(m));
      } else if (key == "normalization") {
        c.normalization = parse_normalization(v.get<std::string>());
      } else if (key == "rgb") {
        const auto t = v.get<std::vector<std::size_t>>();
        if (t.size() != 3) throw ConfigError("rgb must list three channels");
        c.rgb = {t[0], t[1], t[2]};
      } else if (key == "silhouette_sample_cap") {
        c.silhouette_sample_cap = v.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "output_dir") {
        c.output_dir = detail::resolve(base_dir, v.get<std::string>());
      } else if (key == "criterion") {
        c.criterion = parse_criterion(v.get<std::string>());
      } else if (key == "chi_as_printed") {
        c.chi_formula = v.get<bool>() ? ChiFormula::as_printed : ChiFormula::standard;
      } else if (key == "tolerant_masks") {
        c.mask_mode = v.get<bool>() ? MaskReadMode::tolerant : MaskReadMode::strict;
      } else if (key == "report_timing") {
        c.report_timing = v.get<bool>();
      } else if (key == "write_images") {
        c.write_images = v.get<bool>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["dataset"] = nlohmann::json::array();
  for (const auto& e : c.dataset) {
    j["dataset"].push_back({{"name", e.name}, {"cube", e.cube.generic_string()}, {"mask", e.mask.generic_string()}});
  }
  j["methods"] = nlohmann::json::array();
  for (const auto& m : c.methods) {
    auto p = detail::params_to_json(m.params);
    p["label"] = m.label;
    j["methods"].push_back(std::move(p));
  }
  j["normalization"] = std::string(to_string(c.normalization));
  j["rgb"] = {c.rgb.red, c.rgb.green, c.rgb.blue};
  j["silhouette_sample_cap"] = c.silhouette_sample_cap;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.generic_string();
  j["criterion"] = std::string(to_string(c.criterion));
  j["chi_as_printed"] = c.chi_formula == ChiFormula::as_printed;
  j["tolerant_masks"] = c.mask_mode == MaskReadMode::tolerant;
  j["report_timing"] = c.report_timing;
  j["write_images"] = c.write_images;
  return j;
}

}  // namespace hsieval
