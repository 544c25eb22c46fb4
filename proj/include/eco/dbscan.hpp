#pragma once

#include <deque>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "eco/grid_index.hpp"
#include "eco/metrics_core.hpp"
#include "eco/minimal_groups.hpp"
#include "eco/snapshot.hpp"

namespace eco {

enum class PointLabel { core, border, outlier };

struct Clustering {
  StepIndex k = 0;
  double eps_used = 0.0;
  std::map<int, std::vector<ObjectId>> clusters;  // members sorted
  std::map<ObjectId, PointLabel> labels;
  std::unordered_map<ObjectId, int> cluster_of;   // non-outliers only
};

struct ClusterEvent {
  enum class Kind { evolve, form, dissolve };
  Kind kind = Kind::form;
  int cur_id = -1;   // -1 for dissolve
  int prev_id = -1;  // -1 for form
};

// Grid-accelerated DBSCAN over the adjusted locations. Two shortcuts mark
// core points without a range query: a cell holding minPts objects (its
// diagonal is eps), and a current minimal-group seed whose group already has
// minPts members within group_radius <= eps. Expansion is breadth-first from
// cores in ascending-id order; border points keep the first cluster that
// reaches them.
inline Clustering cluster(std::span<const std::pair<ObjectId, PlanarPoint>> points,
                          const GridIndex& idx, double eps, int min_pts,
                          const GroupSet* groups = nullptr,
                          double group_radius = 0.0, StepIndex k = 0) {
  Clustering out;
  out.k = k;
  out.eps_used = eps;

  const auto threshold = static_cast<std::size_t>(min_pts);
  std::unordered_map<ObjectId, bool> is_core;
  is_core.reserve(points.size());

  for (const auto& [cell, members] : idx.cells) {
    if (members.size() >= threshold) {
      for (const auto& [id, p] : members) is_core[id] = true;
    }
  }
  if (groups != nullptr && group_radius <= eps) {
    for (const auto& [seed, group] : groups->groups) {
      if (group.member_ids.size() >= threshold) is_core[seed] = true;
    }
  }
  for (const auto& [id, p] : points) {
    if (is_core.contains(id)) continue;
    is_core[id] = neighbors_within(p, eps, idx).size() >= threshold;
  }

  int next_cluster = 0;
  for (const auto& [id, p] : points) {
    if (!is_core.at(id) || out.cluster_of.contains(id)) continue;
    const int cid = next_cluster++;
    out.cluster_of[id] = cid;
    std::deque<ObjectId> queue{id};
    while (!queue.empty()) {
      const ObjectId cur = queue.front();
      queue.pop_front();
      for (ObjectId nb : neighbors_within(idx.point_of.at(cur), eps, idx)) {
        if (out.cluster_of.contains(nb)) continue;
        out.cluster_of[nb] = cid;
        if (is_core.at(nb)) queue.push_back(nb);
      }
    }
  }

  for (const auto& [id, p] : points) {
    auto member = out.cluster_of.find(id);
    if (member == out.cluster_of.end()) {
      out.labels[id] = PointLabel::outlier;
    } else {
      out.labels[id] = is_core.at(id) ? PointLabel::core : PointLabel::border;
      out.clusters[member->second].push_back(id);
    }
  }
  return out;
}

// One epsilon probe per step: recluster at eps +/- delta_eps, keep the move
// whose modularity is strictly best, stand still on ties. The current
// clustering's modularity falls out of the probe for free; callers that want
// it pass qs_out.
inline double adapt_epsilon(std::span<const std::pair<ObjectId, PlanarPoint>> points,
                            const Clustering& current, double eps, double delta_eps,
                            int min_pts, double dist_floor,
                            const GroupSet* groups = nullptr,
                            double group_radius = 0.0,
                            std::optional<double>* qs_out = nullptr) {
  if (delta_eps <= 0) throw std::invalid_argument("delta_eps must be > 0");
  if (eps - delta_eps <= 0) {  // cannot probe below zero; stand still
    if (qs_out) *qs_out = modularity_batch(points, {&current}, dist_floor)[0];
    return eps;
  }

  const double hi = eps + delta_eps;
  const double lo = eps - delta_eps;
  const GridIndex idx_hi = build_grid(points, hi);
  const GridIndex idx_lo = build_grid(points, lo);
  const Clustering c_hi = cluster(points, idx_hi, hi, min_pts, groups, group_radius, current.k);
  const Clustering c_lo = cluster(points, idx_lo, lo, min_pts, groups, group_radius, current.k);

  const auto qs = modularity_batch(points, {&current, &c_hi, &c_lo}, dist_floor);
  if (qs_out) *qs_out = qs[0];
  if (!qs[0] || !qs[1] || !qs[2]) return eps;
  const double qs_m = *qs[0];
  const double qs_h = *qs[1];
  const double qs_l = *qs[2];
  if (qs_h > qs_m && qs_h > qs_l) return hi;
  if (qs_l > qs_m && qs_l > qs_h) return lo;
  return eps;
}

// First-step calibration: keep applying the probe rule until modularity
// stops improving or the iteration budget runs out.
inline double initial_epsilon(std::span<const std::pair<ObjectId, PlanarPoint>> points,
                              double eps0, double delta_eps, int min_pts,
                              int max_iters, double dist_floor,
                              const GroupSet* groups = nullptr,
                              double group_radius = 0.0) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  double eps = eps0;
  for (int i = 0; i < max_iters; ++i) {
    const GridIndex idx = build_grid(points, eps);
    const Clustering c = cluster(points, idx, eps, min_pts, groups, group_radius);
    const double next = adapt_epsilon(points, c, eps, delta_eps, min_pts,
                                      dist_floor, groups, group_radius);
    if (next == eps) break;
    eps = next;
  }
  return eps;
}

// Lineage between consecutive clusterings: a current cluster evolves from
// the previous cluster it overlaps most, if the overlap covers at least half
// of the smaller of the two; each previous cluster backs at most one current
// cluster (largest overlap wins). Everything else forms or dissolves.
inline std::vector<ClusterEvent> map_clusters(const Clustering& prev,
                                              const Clustering& cur) {
  struct Candidate {
    int cur_id;
    int prev_id;
    std::size_t overlap;
  };
  std::vector<Candidate> candidates;

  for (const auto& [cid, members] : cur.clusters) {
    int best_prev = -1;
    std::size_t best_overlap = 0;
    for (const auto& [pid, prev_members] : prev.clusters) {
      std::size_t overlap = 0;
      for (ObjectId id : members) {
        auto it = prev.cluster_of.find(id);
        if (it != prev.cluster_of.end() && it->second == pid) ++overlap;
      }
      const std::size_t smaller = std::min(members.size(), prev_members.size());
      if (2 * overlap < smaller || overlap == 0) continue;
      if (overlap > best_overlap) {  // ties keep the smaller prev id
        best_overlap = overlap;
        best_prev = pid;
      }
    }
    if (best_prev >= 0) candidates.push_back({cid, best_prev, best_overlap});
  }

  // At most one evolve per previous cluster: the current cluster with the
  // largest overlap keeps it, ties to the smaller current id.
  std::map<int, Candidate> winner_for_prev;
  for (const Candidate& c : candidates) {
    auto [it, inserted] = winner_for_prev.try_emplace(c.prev_id, c);
    if (!inserted && c.overlap > it->second.overlap) it->second = c;
  }

  std::map<int, int> evolve_target;  // cur -> prev
  for (const auto& [pid, c] : winner_for_prev) evolve_target[c.cur_id] = pid;

  std::vector<ClusterEvent> events;
  for (const auto& [cid, members] : cur.clusters) {
    auto it = evolve_target.find(cid);
    if (it != evolve_target.end()) {
      events.push_back({ClusterEvent::Kind::evolve, cid, it->second});
    } else {
      events.push_back({ClusterEvent::Kind::form, cid, -1});
    }
  }
  for (const auto& [pid, members] : prev.clusters) {
    if (!winner_for_prev.contains(pid)) {
      events.push_back({ClusterEvent::Kind::dissolve, -1, pid});
    }
  }
  return events;
}

}  // namespace eco
