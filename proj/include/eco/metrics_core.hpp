#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "eco/geometry.hpp"
#include "eco/snapshot.hpp"

namespace eco {
namespace detail {

// Eight fixed accumulator lanes: strict FP ordering would otherwise keep the
// compiler from vectorizing the sqrt/div reduction, and the all-pairs sweeps
// below are the hot path of every step. Lane-to-index binding is fixed, so
// sums stay deterministic.
inline constexpr std::size_t kSimLanes = 8;

inline double row_against(double xi, double yi, std::span<const double> xs,
                          std::span<const double> ys, double dist_floor) {
  double acc[kSimLanes] = {};
  const std::size_t n = xs.size();
  std::size_t j = 0;
  for (; j + kSimLanes <= n; j += kSimLanes) {
    for (std::size_t l = 0; l < kSimLanes; ++l) {
      const double dx = xi - xs[j + l];
      const double dy = yi - ys[j + l];
      acc[l] += 1.0 / std::max(std::sqrt(dx * dx + dy * dy), dist_floor);
    }
  }
  double tail = 0.0;
  for (; j < n; ++j) {
    const double dx = xi - xs[j];
    const double dy = yi - ys[j];
    tail += 1.0 / std::max(std::sqrt(dx * dx + dy * dy), dist_floor);
  }
  return (((acc[0] + acc[1]) + (acc[2] + acc[3])) +
          ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
         tail;
}

// Sum of 1/max(d, floor) from every point to every other point. The self
// term is constant (1/floor) and subtracted afterwards, which keeps the
// inner sweep branch-free.
inline std::vector<double> row_similarity_sums(std::span<const double> xs,
                                               std::span<const double> ys,
                                               double dist_floor) {
  const std::size_t n = xs.size();
  std::vector<double> row(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = row_against(xs[i], ys[i], xs, ys, dist_floor) - 1.0 / dist_floor;
  }
  return row;
}

inline double pair_similarity_sum(std::span<const double> xs,
                                  std::span<const double> ys,
                                  double dist_floor) {
  double acc = 0.0;
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += row_against(xs[i], ys[i], xs.subspan(i + 1), ys.subspan(i + 1),
                       dist_floor);
  }
  return acc;
}

inline double cross_similarity_sum(std::span<const double> axs,
                                   std::span<const double> ays,
                                   std::span<const double> bxs,
                                   std::span<const double> bys,
                                   double dist_floor) {
  double acc = 0.0;
  for (std::size_t i = 0; i < axs.size(); ++i) {
    acc += row_against(axs[i], ays[i], bxs, bys, dist_floor);
  }
  return acc;
}

}  // namespace detail

// Modularity of several clusterings over one point set in a single sweep.
//
//   QS = sum_c ( IS(c)/TS - (DS(c)/TS)^2 )
//
// with similarity 1/max(d, dist_floor). TS runs over all object pairs,
// IS(c) over pairs inside c, DS(c) over pairs joining c to a different
// cluster; pairs touching an outlier count in TS only. The expensive
// all-pairs distance work is shared across the clusterings:
// DS(c) = sum_{o in c} rowsum(o) - 2*IS(c) - cross(c, outliers).
//
// Requires at least two objects; returns nullopt per clustering otherwise.
template <typename ClusteringT>
std::vector<std::optional<double>> modularity_batch(
    std::span<const std::pair<ObjectId, PlanarPoint>> points,
    std::initializer_list<const ClusteringT*> clusterings, double dist_floor) {
  std::vector<std::optional<double>> results;
  const std::size_t n = points.size();
  if (n < 2) {
    results.assign(clusterings.size(), std::nullopt);
    return results;
  }

  std::vector<double> xs(n), ys(n);
  std::unordered_map<ObjectId, std::size_t> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points[i].second.x;
    ys[i] = points[i].second.y;
    index.emplace(points[i].first, i);
  }

  const std::vector<double> rowsum =
      detail::row_similarity_sums(xs, ys, dist_floor);
  double ts = 0.0;
  for (double r : rowsum) ts += r;
  ts *= 0.5;

  for (const ClusteringT* clustering : clusterings) {
    std::vector<std::size_t> outliers;
    std::unordered_map<int, std::vector<std::size_t>> members;
    for (const auto& [id, pt] : points) {
      auto it = clustering->cluster_of.find(id);
      if (it == clustering->cluster_of.end()) {
        outliers.push_back(index.at(id));
      } else {
        members[it->second].push_back(index.at(id));
      }
    }

    std::vector<double> oxs(outliers.size()), oys(outliers.size());
    for (std::size_t i = 0; i < outliers.size(); ++i) {
      oxs[i] = xs[outliers[i]];
      oys[i] = ys[outliers[i]];
    }

    double qs = 0.0;
    std::vector<double> cxs, cys;
    for (const auto& [cid, ids] : members) {
      cxs.resize(ids.size());
      cys.resize(ids.size());
      double row_total = 0.0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        cxs[i] = xs[ids[i]];
        cys[i] = ys[ids[i]];
        row_total += rowsum[ids[i]];
      }
      const double is = detail::pair_similarity_sum(cxs, cys, dist_floor);
      const double out = detail::cross_similarity_sum(cxs, cys, oxs, oys, dist_floor);
      const double ds = std::max(0.0, row_total - 2.0 * is - out);
      qs += is / ts - (ds / ts) * (ds / ts);
    }
    results.emplace_back(qs);
  }
  return results;
}

}  // namespace eco
