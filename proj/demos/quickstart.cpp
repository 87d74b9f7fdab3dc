// Cluster one synthetic scene with k-means and DBSCAN, then score both against
// the planted corrosion mask.

#include <cstdio>

#include "hsieval/hsieval.hpp"

using namespace hsieval;

int main() {
  SyntheticSpec spec;
  spec.seed = 1;
  const auto scene = make_synthetic(spec);
  const auto x = normalize(flatten(scene.cube), NormalizationMode::minmax);
  const auto truth = identifiers_from_mask(scene.mask);

  for (Method m : {Method::kmeans, Method::dbscan}) {
    ClusterParams p;
    p.method = m;
    p.k = spec.blobs;
    const auto fit = cluster(x, p);
    const auto v = evaluate_validity(x, fit.labels);
    const auto match = best_match(truth, identifiers_from_labels(fit.labels));
    std::printf("%-7s K=%zu  chi=%.1f  dbi=%.3f  sil=%.3f  best label %d: f1=%.3f\n",
                std::string(to_string(m)).c_str(), fit.labels.n_clusters(), v.chi, v.dbi, v.silhouette,
                match.best_label, match.best().f1);
  }
  return 0;
}
