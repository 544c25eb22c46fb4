#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eco/dbscan.hpp"
#include "eco/metrics.hpp"
#include "eco/minimal_groups.hpp"
#include "eco/smoothing.hpp"
#include "eco/snapshot.hpp"

namespace eco {

// Per-object cross-step state.
struct TrackedObject {
  ObjectId id = 0;
  PlanarPoint cur_loc;          // adjusted location at the last active step
  double cur_time = 0.0;
  StepIndex last_step = 0;
  std::optional<ObjectId> prev_group;
};

struct EngineOptions {
  StepIndex gap_steps = 1;      // how many steps back previous state stays usable
  bool disable_smoothing = false;
  int init_eps_iters = 16;      // budget for the first-step epsilon calibration
};

struct EngineState {
  StepIndex k = -1;             // last processed step, -1 before the first
  double eps = 0.0;
  std::map<ObjectId, TrackedObject> tracked;
  std::optional<GroupSet> prev_groups;
  std::optional<Clustering> prev_clustering;
};

struct StepResult {
  StepIndex k = 0;
  double eps_used = 0.0;
  double eps_next = 0.0;
  Clustering clustering;
  std::vector<ClusterEvent> events;
  std::map<ObjectId, Adjustment> adjustments;
  StepMetrics metrics;
  std::vector<std::string> warnings;
};

// Runs the per-step pipeline and carries state across steps:
// smooth -> index -> group -> cluster -> adapt epsilon -> map lineage.
class StreamEngine {
 public:
  StreamEngine(Params params, EngineOptions options = {})
      : params_(params), options_(options) {
    params_.validate();
    state_.eps = params_.eps0;
  }

  const EngineState& state() const { return state_; }
  const Params& params() const { return params_; }

  StepResult step(const Snapshot& snapshot) {
    if (state_.k >= 0 && snapshot.k <= state_.k) {
      throw std::invalid_argument("snapshot steps must strictly increase");
    }
    const auto started = std::chrono::steady_clock::now();
    const bool first = state_.k < 0;

    StepResult result;
    result.k = snapshot.k;
    result.eps_used = state_.eps;

    if (snapshot.empty()) {
      // Advance time only; previous groups, clustering and tracks survive.
      result.eps_next = state_.eps;
      state_.k = snapshot.k;
      result.metrics.processing_seconds = elapsed_since(started);
      return result;
    }

    // 1. Temporal smoothing against the previous step's minimal groups.
    SmoothOutcome smoothed;
    if (first || options_.disable_smoothing || !state_.prev_groups) {
      for (const auto& [id, entry] : snapshot.entries) {
        smoothed.adjustments[id] = Adjustment{id, entry.loc, 0.0, 0.0, 0.0};
      }
    } else {
      std::map<ObjectId, PrevState> prev;
      for (const auto& [id, obj] : state_.tracked) {
        if (snapshot.k - obj.last_step <= options_.gap_steps) {
          prev[id] = PrevState{obj.cur_loc, obj.cur_time};
        }
      }
      smoothed = smooth_snapshot(snapshot, &*state_.prev_groups, prev, params_);
    }
    result.adjustments = std::move(smoothed.adjustments);

    std::vector<std::pair<ObjectId, PlanarPoint>> points;
    points.reserve(result.adjustments.size());
    for (const auto& [id, adj] : result.adjustments) {
      points.emplace_back(id, adj.r_opt);
    }

    // 2-3. Grid over the adjusted locations, then fresh minimal groups.
    double delta = params_.delta;
    if (delta > state_.eps) {
      result.warnings.push_back("delta exceeds current eps; clamped for this step");
      delta = state_.eps;
    }
    const GridIndex idx = build_grid(points, state_.eps);
    const GroupSet groups =
        generate_groups(points, idx, delta, params_.rho, snapshot.k);

    // 4. Density clustering over the adjusted locations.
    result.clustering = cluster(points, idx, state_.eps, params_.min_pts,
                                &groups, delta, snapshot.k);

    // 5. Epsilon for the next step. The first step calibrates iteratively;
    // afterwards a single probe per step. Tiny snapshots skip adaptation.
    // The probe already prices the current clustering, so its modularity is
    // collected here rather than recomputed later.
    std::optional<double> qs;
    if (points.size() < static_cast<std::size_t>(params_.min_pts)) {
      result.eps_next = state_.eps;
      qs = modularity(result.clustering, points, params_.dist_floor);
    } else if (first) {
      result.eps_next = initial_epsilon(points, state_.eps, params_.delta_eps,
                                        params_.min_pts, options_.init_eps_iters,
                                        params_.dist_floor, &groups, delta);
      qs = modularity(result.clustering, points, params_.dist_floor);
    } else {
      if (state_.eps - params_.delta_eps <= 0) {
        result.warnings.push_back("eps probe below zero skipped");
      }
      result.eps_next =
          adapt_epsilon(points, result.clustering, state_.eps, params_.delta_eps,
                        params_.min_pts, params_.dist_floor, &groups, delta, &qs);
    }

    // 6. Lineage against the previous clustering.
    if (state_.prev_clustering) {
      result.events = map_clusters(*state_.prev_clustering, result.clustering);
    } else {
      for (const auto& [cid, members] : result.clustering.clusters) {
        result.events.push_back({ClusterEvent::Kind::form, cid, -1});
      }
    }

    // 7. Quality metrics.
    result.metrics.objects = points.size();
    result.metrics.clusters = result.clustering.clusters.size();
    for (const auto& [id, label] : result.clustering.labels) {
      if (label == PointLabel::outlier) ++result.metrics.outliers;
    }
    for (const auto& [id, adj] : result.adjustments) {
      if (!(adj.r_opt == snapshot.entries.at(id).loc)) ++result.metrics.smoothed;
    }
    result.metrics.qs = qs;
    if (state_.prev_clustering) {
      result.metrics.nmi_with_prev = nmi(*state_.prev_clustering, result.clustering);
    }

    // 8. Roll the state forward; adjusted locations become previous ones.
    for (const auto& [id, adj] : result.adjustments) {
      TrackedObject& obj = state_.tracked[id];
      obj.id = id;
      obj.cur_loc = adj.r_opt;
      obj.cur_time = snapshot.entries.at(id).t;
      obj.last_step = snapshot.k;
      auto member = groups.member_of.find(id);
      obj.prev_group = member == groups.member_of.end()
                           ? std::nullopt
                           : std::optional<ObjectId>(member->second);
    }
    std::erase_if(state_.tracked, [&](const auto& kv) {
      return snapshot.k - kv.second.last_step > options_.gap_steps;
    });
    state_.prev_groups = groups;
    state_.prev_clustering = result.clustering;
    state_.eps = result.eps_next;
    state_.k = snapshot.k;

    result.metrics.processing_seconds = elapsed_since(started);
    return result;
  }

 private:
  static double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }

  Params params_;
  EngineOptions options_;
  EngineState state_;
};

// Groups a record stream into snapshots and folds the engine over them.
// Steps between the first and last occupied ones are emitted even when
// empty. The origin defaults to the first record's timestamp.
inline std::vector<StepResult> run(std::span<const PlanarRecord> records,
                                   const Params& params,
                                   const EngineOptions& options = {},
                                   std::optional<double> origin = std::nullopt,
                                   const std::function<void(const StepResult&)>& sink = nullptr) {
  std::vector<StepResult> results;
  if (records.empty()) return results;

  const double t0 = origin.value_or(records.front().t);
  std::map<StepIndex, std::vector<PlanarRecord>> buckets;
  for (const PlanarRecord& r : records) {
    buckets[discretize_timestamp(r.t, t0, params.delta_t)].push_back(r);
  }

  StreamEngine engine(params, options);
  const StepIndex last = buckets.rbegin()->first;
  for (StepIndex k = buckets.begin()->first; k <= last; ++k) {
    Snapshot snap;
    auto it = buckets.find(k);
    if (it != buckets.end()) {
      snap = build_snapshot(it->second, k, t0, params.delta_t);
    } else {
      snap.k = k;
    }
    results.push_back(engine.step(snap));
    if (sink) sink(results.back());
  }
  return results;
}

}  // namespace eco
