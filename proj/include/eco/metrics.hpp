#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "eco/dbscan.hpp"
#include "eco/metrics_core.hpp"

namespace eco {

struct StepMetrics {
  std::optional<double> qs;
  std::optional<double> nmi_with_prev;
  double processing_seconds = 0.0;
  std::size_t objects = 0;
  std::size_t clusters = 0;
  std::size_t outliers = 0;
  std::size_t smoothed = 0;  // objects whose adjusted location moved
};

inline std::optional<double> modularity(
    const Clustering& clustering,
    std::span<const std::pair<ObjectId, PlanarPoint>> points,
    double dist_floor) {
  return modularity_batch(points, {&clustering}, dist_floor)[0];
}

// Normalized mutual information between consecutive clusterings, computed
// over the objects present in both. All outliers of a step share one noise
// label. When either side carries no information (single label), the value
// collapses to 1 for identical partitions and 0 otherwise.
inline std::optional<double> nmi(const Clustering& prev, const Clustering& cur) {
  constexpr int kNoise = -1;
  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> left, right;
  std::size_t total = 0;

  for (const auto& [id, label] : prev.labels) {
    auto cur_it = cur.labels.find(id);
    if (cur_it == cur.labels.end()) continue;
    auto cluster_label = [kNoise](const Clustering& c, ObjectId oid) {
      auto it = c.cluster_of.find(oid);
      return it == c.cluster_of.end() ? kNoise : it->second;
    };
    const int a = cluster_label(prev, id);
    const int b = cluster_label(cur, id);
    ++joint[{a, b}];
    ++left[a];
    ++right[b];
    ++total;
  }
  if (total == 0) return std::nullopt;

  const auto entropy = [total](const std::map<int, std::size_t>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log(p);
    }
    return h;
  };
  const double h1 = entropy(left);
  const double h2 = entropy(right);
  if (h1 == 0.0 || h2 == 0.0) {
    // Degenerate marginal: identical iff the other side is single-label too.
    return (left.size() == 1 && right.size() == 1) ? 1.0 : 0.0;
  }

  double info = 0.0;
  for (const auto& [labels, c] : joint) {
    const double pxy = static_cast<double>(c) / static_cast<double>(total);
    const double px = static_cast<double>(left.at(labels.first)) / static_cast<double>(total);
    const double py = static_cast<double>(right.at(labels.second)) / static_cast<double>(total);
    info += pxy * std::log(pxy / (px * py));
  }
  return std::clamp(info / std::sqrt(h1 * h2), 0.0, 1.0);
}

}  // namespace eco
