// hsieval: command-line front end for the clustering evaluation pipeline.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 batch finished with
// per-image failures.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hsieval/hsieval.hpp"

using namespace hsieval;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct MethodFlags {
  std::string method = "kmeans";
  std::optional<std::size_t> k, min_pts, max_iter, branching, neighbors, spectral_sample;
  std::optional<double> eps, bandwidth, xi, threshold, tol;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("-m,--method", method, "kmeans, meanshift, spectral, birch, dbscan or optics")->capture_default_str();
    app->add_option("-k", k, "target cluster count (kmeans, spectral, birch)");
    app->add_option("--eps", eps, "dbscan radius; knee heuristic when omitted");
    app->add_option("--min-pts", min_pts, "dbscan / optics core threshold");
    app->add_option("--bandwidth", bandwidth, "mean-shift kernel radius");
    app->add_option("--xi", xi, "optics steepness");
    app->add_option("--threshold", threshold, "birch subcluster radius");
    app->add_option("--branching", branching, "birch branching factor");
    app->add_option("--neighbors", neighbors, "spectral kNN degree");
    app->add_option("--spectral-sample", spectral_sample, "spectral eigensolve sample size");
    app->add_option("--max-iter", max_iter);
    app->add_option("--tol", tol);
    app->add_option("--seed", seed)->capture_default_str();
  }

  ClusterParams params() const {
    ClusterParams p;
    p.method = parse_method(method);
    if (k) p.k = *k;
    p.eps = eps;
    p.min_pts = min_pts;
    p.bandwidth = bandwidth;
    if (xi) p.xi = *xi;
    if (threshold) p.birch_threshold = *threshold;
    if (branching) p.birch_branching = *branching;
    if (neighbors) p.spectral_neighbors = *neighbors;
    if (spectral_sample) p.spectral_sample = *spectral_sample;
    if (max_iter) p.max_iter = *max_iter;
    if (tol) p.tol = *tol;
    p.seed = seed;
    p.validate();
    return p;
  }
};

/// Labels from a raw .hsl file or a rendered PPM in the default palette.
LabelArray load_labels(const fs::path& path, std::size_t& width, std::size_t& height) {
  if (path.extension() == ".ppm") {
    const auto img = read_ppm(path);
    width = img.width;
    height = img.height;
    const auto ids = rgb_to_identifiers(img, IdentifierDomain::clustered);
    std::vector<int> raw(ids.ids.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = ids.ids[i] - 1;
    return LabelArray::compacted(raw);
  }
  const auto img = read_labels(path);
  width = img.width;
  height = img.height;
  return flatten_labels(img);
}

json scores_json(const BinaryScores& s) {
  return {{"accuracy", s.accuracy}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"tp", s.tp},             {"fp", s.fp},               {"tn", s.tn},         {"fn", s.fn}};
}

json index_json(const IndexValue& v) { return v.degenerate ? json(nullptr) : json(v.value); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering and evaluation of hyperspectral cubes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hsieval 1.0");

  // composite
  auto* composite = app.add_subcommand("composite", "render an RGB composite of a cube");
  fs::path comp_cube, comp_out;
  std::vector<std::size_t> comp_rgb = {15, 6, 3};
  composite->add_option("cube", comp_cube)->required();
  composite->add_option("-o,--output", comp_out, "output PPM")->required();
  composite->add_option("--rgb", comp_rgb, "1-based bands for red, green, blue")->expected(3)->capture_default_str();

  // cluster
  auto* clus = app.add_subcommand("cluster", "cluster one cube and write label image + label file");
  fs::path clus_cube, clus_out;
  std::string clus_norm = "minmax";
  MethodFlags clus_flags;
  clus->add_option("cube", clus_cube)->required();
  clus->add_option("-o,--output", clus_out, "output stem; writes <stem>.ppm and <stem>.hsl")->required();
  clus->add_option("--normalization", clus_norm)->capture_default_str();
  clus_flags.add_to(clus);

  // validate
  auto* val = app.add_subcommand("validate", "internal validity indices of a labelling");
  fs::path val_cube, val_labels;
  std::string val_norm = "minmax";
  std::size_t val_cap = 5000;
  std::uint64_t val_seed = 0;
  bool val_printed = false;
  val->add_option("cube", val_cube)->required();
  val->add_option("labels", val_labels, ".hsl label file or label PPM")->required();
  val->add_option("--normalization", val_norm)->capture_default_str();
  val->add_option("--sample-cap", val_cap, "silhouette sample size")->capture_default_str();
  val->add_option("--seed", val_seed)->capture_default_str();
  val->add_flag("--chi-as-printed", val_printed, "CHI with both terms over K-1 and an unsquared between-term");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a labelling against an annotation mask");
  fs::path eval_labels, eval_mask;
  std::string eval_criterion = "f1";
  bool eval_tolerant = false;
  eval->add_option("labels", eval_labels, ".hsl label file or label PPM")->required();
  eval->add_option("mask", eval_mask, "black/white PPM")->required();
  eval->add_option("--criterion", eval_criterion, "f1 or accuracy")->capture_default_str();
  eval->add_flag("--tolerant", eval_tolerant, "threshold mask luminance at 128");

  // batch
  auto* batch = app.add_subcommand("batch", "run every method on every image of a config");
  fs::path batch_config;
  std::optional<fs::path> batch_out;
  std::optional<std::uint64_t> batch_seed;
  std::optional<std::size_t> batch_cap;
  std::optional<std::string> batch_norm, batch_criterion;
  bool batch_no_timing = false, batch_images = false, batch_tolerant = false, batch_quiet = false;
  batch->add_option("config", batch_config, "JSON run configuration")->required();
  batch->add_option("-o,--output", batch_out, "output directory (overrides config)");
  batch->add_option("--seed", batch_seed);
  batch->add_option("--sample-cap", batch_cap);
  batch->add_option("--normalization", batch_norm);
  batch->add_option("--criterion", batch_criterion);
  batch->add_flag("--no-timing", batch_no_timing, "leave the seconds column empty");
  batch->add_flag("--write-images", batch_images, "write label PPM and .hsl per fit");
  batch->add_flag("--tolerant", batch_tolerant, "threshold mask luminance at 128");
  batch->add_flag("-q,--quiet", batch_quiet);

  // report
  auto* rep = app.add_subcommand("report", "regenerate plot-data CSVs from report.json");
  fs::path rep_json, rep_out;
  bool rep_all = false;
  rep->add_option("report", rep_json)->required();
  rep->add_option("-o,--output", rep_out)->required();
  rep->add_flag("--all", rep_all, "also rewrite per_image.csv, averages.csv and report.json");

  // synth
  auto* syn = app.add_subcommand("synth", "write a synthetic dataset and a matching config");
  fs::path syn_dir;
  std::size_t syn_images = 5;
  SyntheticSpec syn_spec;
  syn->add_option("dir", syn_dir)->required();
  syn->add_option("--images", syn_images)->capture_default_str();
  syn->add_option("--width", syn_spec.width)->capture_default_str();
  syn->add_option("--height", syn_spec.height)->capture_default_str();
  syn->add_option("--bands", syn_spec.bands)->capture_default_str();
  syn->add_option("--blobs", syn_spec.blobs)->capture_default_str();
  syn->add_option("--sigma", syn_spec.noise_sigma, "per-band noise")->capture_default_str();
  syn->add_option("--corrosion", syn_spec.corrosion_fraction, "disc share of the image; 0 = 1/blobs");
  syn->add_option("--seed", syn_spec.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const int threads = configure_threads_from_env();

    if (*composite) {
      if (comp_rgb.size() != 3) throw ParameterError("--rgb needs three bands");
      write_ppm(rgb_composite(read_cube(comp_cube), {comp_rgb[0], comp_rgb[1], comp_rgb[2]}), comp_out);
      return kExitOk;
    }

    if (*clus) {
      const auto cube = read_cube(clus_cube);
      const auto x = normalize(flatten(cube), parse_normalization(clus_norm));
      const auto fit = cluster(x, clus_flags.params());
      const std::size_t k = fit.labels.n_clusters();
      const Palette pal = k <= 6 ? Palette::default_palette() : Palette::extended(k);
      if (clus_out.has_parent_path()) fs::create_directories(clus_out.parent_path());
      write_ppm(render_labels(fit.labels, cube.width(), cube.height(), pal), fs::path(clus_out.string() + ".ppm"));
      write_labels(fit.labels, cube.width(), cube.height(), fs::path(clus_out.string() + ".hsl"));
      json out = {{"k", k}, {"noise", fit.labels.noise_count()}, {"iterations", fit.iterations},
                  {"converged", fit.converged}, {"resolved", fit.resolved}, {"warnings", fit.warnings}};
      if (fit.inertia) out["inertia"] = *fit.inertia;
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (*val) {
      const auto cube = read_cube(val_cube);
      std::size_t w = 0, h = 0;
      const auto labels = load_labels(val_labels, w, h);
      if (w != cube.width() || h != cube.height()) throw DimensionError("labels and cube differ in size");
      const auto x = normalize(flatten(cube), parse_normalization(val_norm));
      const auto formula = val_printed ? ChiFormula::as_printed : ChiFormula::standard;
      json out = {{"k_used", labels.n_clusters()}, {"n_used", labels.size() - labels.noise_count()}};
      out["chi"] = index_json(calinski_harabasz(x, labels, formula));
      out["dbi"] = index_json(davies_bouldin(x, labels));
      out["silhouette"] = silhouette(x, labels, val_cap, val_seed).value;
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (*eval) {
      std::size_t w = 0, h = 0;
      const auto labels = load_labels(eval_labels, w, h);
      const auto mask = read_mask(eval_mask, eval_tolerant ? MaskReadMode::tolerant : MaskReadMode::strict);
      if (w != mask.width || h != mask.height) throw DimensionError("labels and mask differ in size");
      const auto m = best_match(identifiers_from_mask(mask), identifiers_from_labels(labels),
                                parse_criterion(eval_criterion));
      json per = json::array();
      for (const auto& s : m.per_label) {
        auto row = scores_json(s.scores);
        row["label"] = s.label;
        per.push_back(row);
      }
      std::cout << json{{"best_label", m.best_label}, {"best", scores_json(m.best())}, {"per_label", per}}.dump(2)
                << "\n";
      return kExitOk;
    }

    if (*batch) {
      RunConfig config = load_config(batch_config);
      if (batch_out) config.output_dir = *batch_out;
      if (batch_seed) config.seed = *batch_seed;
      if (batch_cap) config.silhouette_sample_cap = *batch_cap;
      if (batch_norm) config.normalization = parse_normalization(*batch_norm);
      if (batch_criterion) config.criterion = parse_criterion(*batch_criterion);
      if (batch_no_timing) config.report_timing = false;
      if (batch_images) config.write_images = true;
      if (batch_tolerant) config.mask_mode = MaskReadMode::tolerant;
      config.validate();
      if (!batch_quiet) {
        std::fprintf(stderr, "%zu image(s) x %zu method(s), %d thread(s)\n", config.dataset.size(),
                     config.methods.size(), threads);
      }
      const auto report = run_pipeline(config, [&](const EntryResult& e) {
        if (batch_quiet) return;
        std::fprintf(stderr, "  %-20s %-12s K=%-3zu f1=%s\n", e.image.c_str(), e.method.c_str(), e.k_used,
                     e.f1 ? detail::format_number(*e.f1).c_str() : "-");
      });
      emit_reports(report, config.output_dir);
      for (const auto& f : report.failures) {
        std::fprintf(stderr, "failed: %s%s%s: %s\n", f.image.c_str(), f.method.empty() ? "" : " / ",
                     f.method.c_str(), f.message.c_str());
      }
      return report.failures.empty() ? kExitOk : kExitPartial;
    }

    if (*rep) {
      const auto report = read_report(rep_json);
      if (rep_all) {
        emit_reports(report, rep_out);
      } else {
        emit_plotdata(report, rep_out);
      }
      return kExitOk;
    }

    if (*syn) {
      const auto entries = write_synthetic_dataset(syn_dir, syn_images, syn_spec);
      RunConfig config;
      config.dataset = entries;
      for (Method m : kAllMethods) {
        MethodSpec s;
        s.label = std::string(to_string(m));
        s.params.method = m;
        s.params.k = syn_spec.blobs;
        config.methods.push_back(s);
      }
      config.output_dir = "out";
      auto j = config_to_json(config);
      // store paths relative to the config so the directory can be moved
      for (auto& e : j["dataset"]) {
        e["cube"] = fs::path(e["cube"].get<std::string>()).filename().string();
        e["mask"] = fs::path(e["mask"].get<std::string>()).filename().string();
      }
      std::ofstream(syn_dir / "config.json") << j.dump(2) << "\n";
      std::fprintf(stderr, "wrote %zu scene(s) and config.json to %s\n", entries.size(), syn_dir.string().c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hsieval: %s\n", e.what());
    return kExitError;
  }
  return kExitOk;
}
