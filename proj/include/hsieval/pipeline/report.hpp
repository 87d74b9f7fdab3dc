#pragma once

// CSV / JSON emission for an EvaluationReport. Numbers use the shortest
// representation that round-trips; empty cells mark excluded values.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hsieval/pipeline/run.hpp"

namespace hsieval {

inline const std::vector<std::string> kPerImageColumns = {"image",  "method",    "k_used", "chi",      "dbi",
                                                          "silhouette", "best_label", "accuracy", "precision",
                                                          "recall", "f1",        "seconds"};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\n";
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> json_optional(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline std::string per_image_csv(const EvaluationReport& r) {
  std::string out = detail::csv_line(kPerImageColumns);
  for (const auto& e : r.entries) {
    out += detail::csv_line({e.image, e.method, std::to_string(e.k_used), detail::format_cell(e.chi),
                             detail::format_cell(e.dbi), detail::format_cell(e.silhouette),
                             e.best_label ? std::to_string(*e.best_label) : std::string(),
                             detail::format_cell(e.accuracy), detail::format_cell(e.precision),
                             detail::format_cell(e.recall), detail::format_cell(e.f1), detail::format_cell(e.seconds)});
  }
  return out;
}

inline std::string averages_csv(const EvaluationReport& r) {
  std::vector<std::string> header = {"method", "n_images"};
  header.insert(header.end(), kMetricNames.begin(), kMetricNames.end());
  header.emplace_back("degenerate_count");
  std::string out = detail::csv_line(header);
  for (const auto& a : r.averages) {
    std::vector<std::string> row = {a.method, std::to_string(a.n_images)};
    for (const auto& m : a.means) row.push_back(detail::format_cell(m));
    row.push_back(std::to_string(a.degenerate_count));
    out += detail::csv_line(row);
  }
  return out;
}

/// Averages regrouped as the three bar-chart panels: indexes, accuracy + f1, precision + recall.
inline std::vector<std::pair<std::string, std::string>> plotdata_csvs(const EvaluationReport& r) {
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> groups = {
      {"plotdata_indexes.csv", {0, 1, 2}},
      {"plotdata_accuracy_f1.csv", {3, 6}},
      {"plotdata_precision_recall.csv", {4, 5}},
  };
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& [name, cols] : groups) {
    std::vector<std::string> header = {"method"};
    for (std::size_t c : cols) header.emplace_back(kMetricNames[c]);
    std::string body = detail::csv_line(header);
    for (const auto& a : r.averages) {
      std::vector<std::string> row = {a.method};
      for (std::size_t c : cols) row.push_back(detail::format_cell(a.means[c]));
      body += detail::csv_line(row);
    }
    files.emplace_back(name, std::move(body));
  }
  return files;
}

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["normalization"] = r.normalization;
  j["criterion"] = r.criterion;
  j["chi_formula"] = r.chi_formula;
  j["methods"] = r.methods;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json row;
    row["image"] = e.image;
    row["method"] = e.method;
    row["k_used"] = e.k_used;
    row["noise_count"] = e.noise_count;
    const auto cells = e.metrics();
    for (std::size_t m = 0; m < cells.size(); ++m) row[std::string(kMetricNames[m])] = detail::optional_json(*cells[m]);
    row["best_label"] = e.best_label ? nlohmann::json(*e.best_label) : nlohmann::json(nullptr);
    row["seconds"] = detail::optional_json(e.seconds);
    row["resolved"] = e.resolved;
    row["warnings"] = e.warnings;
    j["entries"].push_back(std::move(row));
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& f : r.failures) {
    j["failures"].push_back({{"image", f.image}, {"method", f.method}, {"message", f.message}});
  }
  j["averages"] = nlohmann::json::array();
  for (const auto& a : r.averages) {
    nlohmann::json row;
    row["method"] = a.method;
    row["n_images"] = a.n_images;
    for (std::size_t m = 0; m < a.means.size(); ++m) row[std::string(kMetricNames[m])] = detail::optional_json(a.means[m]);
    row["degenerate_count"] = a.degenerate_count;
    j["averages"].push_back(std::move(row));
  }
  return j;
}

/// Inverse of report_to_json. Averages are taken from the document, not recomputed.
inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.normalization = j.at("normalization").get<std::string>();
    r.criterion = j.at("criterion").get<std::string>();
    r.chi_formula = j.at("chi_formula").get<std::string>();
    r.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& row : j.at("entries")) {
      EntryResult e;
      e.image = row.at("image").get<std::string>();
      e.method = row.at("method").get<std::string>();
      e.k_used = row.at("k_used").get<std::size_t>();
      e.noise_count = row.at("noise_count").get<std::size_t>();
      e.chi = detail::json_optional(row.at("chi"));
      e.dbi = detail::json_optional(row.at("dbi"));
      e.silhouette = detail::json_optional(row.at("silhouette"));
      e.accuracy = detail::json_optional(row.at("accuracy"));
      e.precision = detail::json_optional(row.at("precision"));
      e.recall = detail::json_optional(row.at("recall"));
      e.f1 = detail::json_optional(row.at("f1"));
      if (!row.at("best_label").is_null()) e.best_label = row.at("best_label").get<int>();
      e.seconds = detail::json_optional(row.at("seconds"));
      e.resolved = row.at("resolved").get<std::map<std::string, double>>();
      e.warnings = row.at("warnings").get<std::vector<std::string>>();
      r.entries.push_back(std::move(e));
    }
    for (const auto& f : j.at("failures")) {
      r.failures.push_back(
          {f.at("image").get<std::string>(), f.at("method").get<std::string>(), f.at("message").get<std::string>()});
    }
    for (const auto& row : j.at("averages")) {
      MethodAverage a;
      a.method = row.at("method").get<std::string>();
      a.n_images = row.at("n_images").get<std::size_t>();
      for (std::size_t m = 0; m < a.means.size(); ++m) a.means[m] = detail::json_optional(row.at(std::string(kMetricNames[m])));
      a.degenerate_count = row.at("degenerate_count").get<std::size_t>();
      r.averages.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report document: ") + e.what(), 0);
  }
  return r;
}

inline EvaluationReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what(), e.byte);
  }
}

/// Writes every file to a temporary name first and swaps them in only after all
/// writes succeed. If a swap fails, files already moved are rolled back to their
/// previous contents, so the directory holds either the old set or the new one.
inline void write_files_atomically(const std::filesystem::path& outdir,
                                   const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create output directory " + outdir.string() + ": " + ec.message());
  std::vector<fs::path> temps, backups;
  auto remove_all = [](const std::vector<fs::path>& paths) {
    std::error_code ignored;
    for (const auto& p : paths) fs::remove(p, ignored);
  };
  for (const auto& [name, body] : files) {
    const auto tmp = outdir / ("." + name + ".tmp");
    temps.push_back(tmp);
    backups.push_back(outdir / ("." + name + ".bak"));
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.close();
    if (!out) {
      remove_all(temps);
      throw IoError("cannot write " + tmp.string());
    }
  }
  std::vector<bool> had_old(files.size(), false);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto target = outdir / files[i].first;
    if (fs::is_directory(target)) {
      remove_all(temps);
      throw IoError("cannot replace " + target.string() + ": it is a directory");
    }
  }
  auto rollback = [&](std::size_t moved) {
    std::error_code ignored;
    for (std::size_t i = 0; i < moved; ++i) {
      const auto target = outdir / files[i].first;
      fs::remove(target, ignored);
      if (had_old[i]) fs::rename(backups[i], target, ignored);
    }
    remove_all(temps);
  };
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto target = outdir / files[i].first;
    if (fs::exists(target)) {
      fs::rename(target, backups[i], ec);
      if (ec) {
        rollback(i);
        throw IoError("cannot set aside " + target.string() + ": " + ec.message());
      }
      had_old[i] = true;
    }
    fs::rename(temps[i], target, ec);
    if (ec) {
      if (had_old[i]) {
        std::error_code ignored;
        fs::rename(backups[i], target, ignored);
        had_old[i] = false;
      }
      rollback(i);
      throw IoError("cannot move " + temps[i].string() + " into place: " + ec.message());
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (had_old[i]) fs::remove(backups[i], ec);
  }
}

/// per_image.csv, averages.csv, report.json and the three plotdata files.
inline void emit_reports(const EvaluationReport& r, const std::filesystem::path& outdir) {
  std::vector<std::pair<std::string, std::string>> files = {
      {"per_image.csv", per_image_csv(r)},
      {"averages.csv", averages_csv(r)},
      {"report.json", report_to_json(r).dump(2) + "\n"},
  };
  for (auto& f : plotdata_csvs(r)) files.push_back(std::move(f));
  write_files_atomically(outdir, files);
}

/// Only the plotdata files, e.g. when regenerating charts from a saved report.json.
inline void emit_plotdata(const EvaluationReport& r, const std::filesystem::path& outdir) {
  write_files_atomically(outdir, plotdata_csvs(r));
}

}  // namespace hsieval
