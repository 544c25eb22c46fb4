#pragma once

#include <map>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eco/grid_index.hpp"
#include "eco/snapshot.hpp"

namespace eco {

// Seed object plus the nearby members it summarizes. Groups smaller than rho
// stay in the set but are inactive: they never drive smoothing.
struct MinimalGroup {
  ObjectId seed_id = 0;
  std::vector<ObjectId> member_ids;  // sorted, includes seed_id
  bool active = false;
};

struct GroupSet {
  StepIndex k = 0;
  std::map<ObjectId, MinimalGroup> groups;        // keyed by seed
  std::unordered_map<ObjectId, ObjectId> member_of;
};

// Greedy two-phase group generation. Phase 1 scans objects in ascending-id
// order and keeps an object as a seed when no earlier seed lies within delta.
// Phase 2 assigns every non-seed to its nearest seed (ties to the smaller
// seed id). The greedy scan guarantees each non-seed has a seed within delta,
// so the groups partition the snapshot.
inline GroupSet generate_groups(std::span<const std::pair<ObjectId, PlanarPoint>> points,
                                const GridIndex& idx, double delta, int rho,
                                StepIndex k) {
  GroupSet out;
  out.k = k;
  std::unordered_set<ObjectId> seeds;
  seeds.reserve(points.size());

  for (const auto& [id, p] : points) {
    bool blocked = false;
    for (ObjectId nb : neighbors_within(p, delta, idx)) {
      if (nb != id && seeds.contains(nb)) {
        blocked = true;
        break;
      }
    }
    if (!blocked) {
      seeds.insert(id);
      out.groups[id].seed_id = id;
      out.groups[id].member_ids.push_back(id);
      out.member_of[id] = id;
    }
  }

  for (const auto& [id, p] : points) {
    if (seeds.contains(id)) continue;
    ObjectId best = -1;
    double best_d = 0.0;
    for (ObjectId nb : neighbors_within(p, delta, idx)) {
      if (!seeds.contains(nb)) continue;
      const double d = euclidean_distance(p, idx.point_of.at(nb));
      if (best < 0 || d < best_d || (d == best_d && nb < best)) {
        best = nb;
        best_d = d;
      }
    }
    // Unreachable by construction; belt for callers that violate the
    // points/index pairing.
    if (best < 0) throw std::logic_error("non-seed object has no seed within delta");
    out.groups[best].member_ids.push_back(id);
    out.member_of[id] = best;
  }

  for (auto& [seed, group] : out.groups) {
    std::sort(group.member_ids.begin(), group.member_ids.end());
    group.active = group.member_ids.size() >= static_cast<std::size_t>(rho);
  }
  return out;
}

}  // namespace eco
