#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "eco/geometry.hpp"
#include "eco/minimal_groups.hpp"
#include "eco/snapshot.hpp"

namespace eco {

inline constexpr double kGeomTol = 1e-9;

// Discrete candidate set for one pairwise adjustment. The optimum distance
// from the pivot is b*delta with b either a positive integer in
// [max(lambda1,1), lambda2] or lambda2 itself.
struct SolverCandidates {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> candidates;  // ascending
  double b_opt_prime = 0.0;        // minimizer ignoring the speed constraint
  double b_opt = 0.0;              // speed-feasible choice closest to it
};

struct Adjustment {
  ObjectId id = 0;
  PlanarPoint r_opt;
  double snapshot_cost = 0.0;    // d(r, o.l)^2, unnormalized
  double historical_cost = 0.0;  // (delta*(b-1))^2, unnormalized
  double dist_to_pivot = 0.0;    // d(r, pivot), feeds the normalized bound
};

// Cross-step state of one group member entering the solver.
struct MemberState {
  ObjectId id = 0;
  PlanarPoint raw;       // current location before pre-processing
  double t = 0.0;
  PlanarPoint prev;      // adjusted location at the previous active step
  double prev_t = 0.0;
};

struct GroupSmoothingResult {
  ObjectId old_seed = 0;
  ObjectId new_pivot = 0;
  std::map<ObjectId, Adjustment> adjustments;
  double total_cost = 0.0;
};

namespace detail {

inline PlanarPoint along(const PlanarPoint& from, const PlanarPoint& to,
                         double dist) {
  const double len = euclidean_distance(from, to);
  if (len == 0.0) return from;
  const double s = dist / len;
  return PlanarPoint{from.x + (to.x - from.x) * s, from.y + (to.y - from.y) * s};
}

// Both intersection points of circles (c1,r1) and (c2,r2). Callers only ask
// when the circles properly meet; radicand is clamped against roundoff.
inline std::pair<PlanarPoint, PlanarPoint> circle_intersections(
    const PlanarPoint& c1, double r1, const PlanarPoint& c2, double r2) {
  const double d = euclidean_distance(c1, c2);
  if (d == 0.0) throw std::logic_error("concentric circles have no discrete intersection");
  const double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  const double h2 = std::max(0.0, r1 * r1 - a * a);
  const double h = std::sqrt(h2);
  const double ux = (c2.x - c1.x) / d;
  const double uy = (c2.y - c1.y) / d;
  const PlanarPoint base{c1.x + a * ux, c1.y + a * uy};
  return {PlanarPoint{base.x - h * uy, base.y + h * ux},
          PlanarPoint{base.x + h * uy, base.y - h * ux}};
}

inline PlanarPoint nearer_to(const PlanarPoint& target, const PlanarPoint& a,
                             const PlanarPoint& b) {
  const double da = squared_distance(target, a);
  const double db = squared_distance(target, b);
  if (da < db) return a;
  if (db < da) return b;
  return lex_less(a, b) ? a : b;
}

}  // namespace detail

// Clamps a pivot candidate onto its speed disk: the nearest reachable point
// to the raw fix.
inline PlanarPoint preprocess_pivot(const PlanarPoint& raw, const PlanarPoint& prev,
                                    double dt, double mu) {
  if (dt <= 0) throw std::invalid_argument("pre-processing needs dt > 0");
  const double reach = mu * dt;
  if (euclidean_distance(raw, prev) <= reach) return raw;
  return detail::along(prev, raw, reach);
}

// Clamps a member onto its speed disk while disturbing its distance to the
// (already clamped) pivot as little as possible. Of the candidate points at
// the best achievable pivot distance, the one closest to the raw fix wins.
inline PlanarPoint preprocess_member(const PlanarPoint& raw, const PlanarPoint& prev,
                                     double dt, double mu, const PlanarPoint& pivot) {
  if (dt <= 0) throw std::invalid_argument("pre-processing needs dt > 0");
  const double reach = mu * dt;
  if (euclidean_distance(raw, prev) <= reach) return raw;

  const double c = euclidean_distance(pivot, prev);
  if (c == 0.0) {
    // Disk centered on the pivot: keep the bearing, cap the radius.
    if (raw == prev) return prev;
    return detail::along(prev, raw, reach);
  }
  const double want = euclidean_distance(raw, pivot);
  const double lo = std::max(0.0, c - reach);
  const double hi = c + reach;
  if (want >= hi) return detail::along(prev, pivot, -reach);  // far edge of the disk
  if (want <= lo) return detail::along(prev, pivot, reach);   // near edge of the disk
  // Achievable as-is: the in-disk points at this pivot distance form an arc
  // whose endpoints sit on the speed circle; the raw fix is off-disk, so an
  // endpoint is the closest arc point.
  auto [p1, p2] = detail::circle_intersections(pivot, want, prev, reach);
  return detail::nearer_to(raw, p1, p2);
}

// Closed-form pairwise adjustment of one member against a pivot.
//
// cur must already satisfy the speed constraint (pre-processed). Members
// within delta of the pivot are left untouched. Otherwise the cost
//   f(b) = (d(cur,pivot) - b*delta)^2 + alpha*(delta*(b-1))^2
// is minimized over the discrete candidate set; if the minimizer's on-segment
// point breaches the speed disk, the nearest feasible candidate (by |b -
// b_opt'|) is realized on the circle of radius b*delta around the pivot.
inline std::pair<Adjustment, SolverCandidates> solve_adjustment(
    ObjectId id, const PlanarPoint& cur, const PlanarPoint& prev, double dt,
    const PlanarPoint& pivot, double delta, double alpha, double mu) {
  if (dt <= 0) throw std::invalid_argument("solver needs dt > 0");
  const double reach = mu * dt;
  const double dist_prev_pivot = euclidean_distance(pivot, prev);
  const double dist_cur_pivot = euclidean_distance(cur, pivot);

  SolverCandidates cand;
  cand.lambda1 = (dist_prev_pivot - reach) / delta;
  cand.lambda2 = dist_cur_pivot / delta;

  if (dist_cur_pivot <= delta) {
    cand.candidates = {cand.lambda2};
    cand.b_opt_prime = cand.b_opt = cand.lambda2;
    return {Adjustment{id, cur, 0.0, 0.0, dist_cur_pivot}, cand};
  }

  const double lo = std::max(cand.lambda1, 1.0);
  const auto first = static_cast<std::int64_t>(std::ceil(lo - kGeomTol));
  const auto last = static_cast<std::int64_t>(std::floor(cand.lambda2 + kGeomTol));
  for (std::int64_t n = first; n <= last; ++n) {
    cand.candidates.push_back(static_cast<double>(n));
  }
  if (cand.candidates.empty() ||
      std::abs(cand.candidates.back() - cand.lambda2) > kGeomTol) {
    cand.candidates.push_back(cand.lambda2);
  }

  const auto cost = [&](double b) {
    const double sc = dist_cur_pivot - b * delta;
    const double tc = delta * (b - 1.0);
    return sc * sc + alpha * tc * tc;
  };
  double best_cost = std::numeric_limits<double>::infinity();
  for (double b : cand.candidates) {
    if (const double f = cost(b); f < best_cost) {
      best_cost = f;
      cand.b_opt_prime = b;
    }
  }

  // A candidate is speed-feasible when the circle of radius b*delta around
  // the pivot meets the speed disk. lambda2 always qualifies: cur itself
  // realizes it.
  const auto feasible = [&](double b) {
    return std::abs(dist_prev_pivot - b * delta) <= reach + kGeomTol;
  };
  double best_gap = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double b : cand.candidates) {
    if (!feasible(b)) continue;
    if (const double gap = std::abs(b - cand.b_opt_prime); gap < best_gap) {
      best_gap = gap;
      cand.b_opt = b;
      found = true;
    }
  }
  if (!found) throw std::logic_error("no speed-feasible candidate; cur violates its own constraint");

  const double radius = cand.b_opt * delta;
  PlanarPoint r = detail::along(pivot, cur, radius);
  if (euclidean_distance(r, prev) > reach + kGeomTol) {
    auto [p1, p2] = detail::circle_intersections(pivot, radius, prev, reach);
    r = detail::nearer_to(cur, p1, p2);
  }

  const double sc = squared_distance(r, cur);
  const double tc = delta * (cand.b_opt - 1.0);
  return {Adjustment{id, r, sc, tc * tc, radius}, cand};
}

// Smooths one previous minimal group at the current step: every surviving
// member is tried as the pivot, the others are adjusted against it, and the
// pivot with the smallest cost sum wins (first one on ties, members are in
// ascending-id order). A running best lets later pivots stop early.
inline GroupSmoothingResult smooth_group(const std::vector<MemberState>& members,
                                         ObjectId old_seed, double delta,
                                         double alpha, double mu) {
  if (members.empty()) throw std::invalid_argument("smooth_group needs at least one member");

  GroupSmoothingResult best;
  best.old_seed = old_seed;
  double glp = std::numeric_limits<double>::infinity();

  for (const MemberState& pivot : members) {
    const PlanarPoint pivot_loc = preprocess_pivot(
        pivot.raw, pivot.prev, pivot.t - pivot.prev_t, mu);
    std::map<ObjectId, Adjustment> adjustments;
    adjustments[pivot.id] = Adjustment{pivot.id, pivot_loc, 0.0, 0.0, 0.0};
    double sum = 0.0;
    bool completed = true;
    for (const MemberState& o : members) {
      if (o.id == pivot.id) continue;
      const double dt = o.t - o.prev_t;
      const PlanarPoint pre = preprocess_member(o.raw, o.prev, dt, mu, pivot_loc);
      auto [adj, cands] = solve_adjustment(o.id, pre, o.prev, dt, pivot_loc,
                                           delta, alpha, mu);
      sum += adj.snapshot_cost + alpha * adj.historical_cost;
      if (sum >= glp) {
        completed = false;
        break;
      }
      adjustments[o.id] = adj;
    }
    if (completed && sum < glp) {
      glp = sum;
      best.new_pivot = pivot.id;
      best.adjustments = std::move(adjustments);
      best.total_cost = sum;
    }
  }
  return best;
}

// Previous-step state the engine hands to the smoother.
struct PrevState {
  PlanarPoint loc;  // adjusted location at the previous active step
  double t = 0.0;
};

struct SmoothOutcome {
  std::map<ObjectId, Adjustment> adjustments;  // one per snapshot object
  std::vector<GroupSmoothingResult> groups;    // ascending old-seed order
};

// Applies group smoothing across a snapshot. Only members of active previous
// groups that are active now (and still carry previous state) are adjusted;
// everything else keeps its raw location at zero cost.
inline SmoothOutcome smooth_snapshot(const Snapshot& snapshot,
                                     const GroupSet* prev_groups,
                                     const std::map<ObjectId, PrevState>& prev,
                                     const Params& params) {
  SmoothOutcome out;
  for (const auto& [id, entry] : snapshot.entries) {
    out.adjustments[id] = Adjustment{id, entry.loc, 0.0, 0.0, 0.0};
  }
  if (prev_groups == nullptr) return out;

  for (const auto& [seed, group] : prev_groups->groups) {
    if (!group.active) continue;
    std::vector<MemberState> members;
    members.reserve(group.member_ids.size());
    for (ObjectId id : group.member_ids) {
      auto here = snapshot.entries.find(id);
      if (here == snapshot.entries.end()) continue;
      auto before = prev.find(id);
      if (before == prev.end()) continue;
      members.push_back(MemberState{id, here->second.loc, here->second.t,
                                    before->second.loc, before->second.t});
    }
    if (members.empty()) continue;
    GroupSmoothingResult result =
        smooth_group(members, seed, params.delta, params.alpha, params.mu);
    for (const auto& [id, adj] : result.adjustments) {
      out.adjustments[id] = adj;
    }
    out.groups.push_back(std::move(result));
  }
  return out;
}

// Normalized snapshot/historical costs, both in [0,1) for speed-feasible
// inputs. pi = 4*mu*delta_t + delta.
inline std::pair<double, double> normalized_costs(const Adjustment& adj,
                                                  const Params& params) {
  const double pi = 4.0 * params.mu * params.delta_t + params.delta;
  const double sc = adj.snapshot_cost / (pi * pi);
  const double closeness =
      std::max(0.0, std::ceil(adj.dist_to_pivot / params.delta) - 1.0);
  const double tc_num = closeness / (pi / params.delta);
  return {sc, tc_num * tc_num};
}

}  // namespace eco
