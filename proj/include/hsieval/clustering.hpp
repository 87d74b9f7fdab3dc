#pragma once

#include "hsieval/clustering/birch.hpp"
#include "hsieval/clustering/common.hpp"
#include "hsieval/clustering/dbscan.hpp"
#include "hsieval/clustering/heuristics.hpp"
#include "hsieval/clustering/kmeans.hpp"
#include "hsieval/clustering/meanshift.hpp"
#include "hsieval/clustering/optics.hpp"
#include "hsieval/clustering/spectral.hpp"

namespace hsieval {

/// Runs the method named in `p.method`.
inline ClusterResult cluster(const PixelMatrix& x, const ClusterParams& p) {
  switch (p.method) {
    case Method::kmeans: return kmeans(x, p);
    case Method::meanshift: return meanshift(x, p);
    case Method::spectral: return spectral(x, p);
    case Method::birch: return birch(x, p);
    case Method::dbscan: return dbscan(x, p);
    case Method::optics: return optics(x, p);
  }
  throw ParameterError("unknown clustering method");
}

}  // namespace hsieval
