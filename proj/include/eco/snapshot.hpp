#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include "eco/geometry.hpp"

namespace eco {

using ObjectId = std::int64_t;
using StepIndex = std::int64_t;

// Raw geographic fix as it arrives from the stream.
struct GpsRecord {
  ObjectId id = 0;
  double t = 0.0;  // seconds since stream origin
  double lat = 0.0;
  double lon = 0.0;
};

// Record after projection (or planar ingestion): what the engine consumes.
struct PlanarRecord {
  ObjectId id = 0;
  double t = 0.0;
  PlanarPoint loc;
};

struct Params {
  double eps0 = 600.0;      // initial DBSCAN radius (meters)
  int min_pts = 8;          // DBSCAN density threshold
  double delta = 400.0;     // minimal-group radius (meters)
  int rho = 6;              // minimal-group activation size
  double alpha = 0.9;       // historical-cost weight
  double mu = 30.0;         // speed limit (m/s)
  double delta_t = 10.0;    // time-step duration (seconds)
  double delta_eps = 50.0;  // epsilon adaptation increment (meters)
  double dist_floor = 1e-3; // similarity guard for coincident points (meters)

  void validate() const {
    auto req = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("params: ") + what);
    };
    req(eps0 > 0, "eps0 must be > 0");
    req(min_pts > 0, "minPts must be > 0");
    req(delta > 0, "delta must be > 0");
    req(delta <= eps0, "delta must be <= eps0");
    req(rho > 0, "rho must be > 0");
    req(alpha >= 0, "alpha must be >= 0");
    req(mu > 0, "mu must be > 0");
    req(delta_t > 0, "delta_t must be > 0");
    req(delta_eps > 0, "delta_eps must be > 0");
    req(dist_floor > 0, "dist_floor must be > 0");
  }
};

inline StepIndex discretize_timestamp(double t, double origin, double delta_t) {
  if (delta_t <= 0) throw std::invalid_argument("delta_t must be > 0");
  if (t < origin) throw std::invalid_argument("timestamp precedes stream origin");
  return static_cast<StepIndex>(std::floor((t - origin) / delta_t));
}

// All objects active at one time step, at most one entry each.
struct Snapshot {
  struct Entry {
    PlanarPoint loc;
    double t = 0.0;
  };

  StepIndex k = 0;
  std::map<ObjectId, Entry> entries;  // ordered: canonical ascending-id scans

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// Deduplicates records within one step: the earliest fix wins, ties on the
// timestamp resolved by arrival order.
inline Snapshot build_snapshot(std::span<const PlanarRecord> records,
                               StepIndex k, double origin, double delta_t) {
  Snapshot snap;
  snap.k = k;
  for (const PlanarRecord& r : records) {
    if (discretize_timestamp(r.t, origin, delta_t) != k) {
      throw std::invalid_argument("record does not belong to step " +
                                  std::to_string(k));
    }
    auto [it, inserted] = snap.entries.try_emplace(r.id, Snapshot::Entry{r.loc, r.t});
    if (!inserted && r.t < it->second.t) {
      it->second = Snapshot::Entry{r.loc, r.t};
    }
  }
  return snap;
}

}  // namespace eco
