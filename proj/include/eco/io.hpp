#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eco/engine.hpp"
#include "eco/geometry.hpp"
#include "eco/metrics.hpp"
#include "eco/snapshot.hpp"

namespace eco {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InputMode { geographic, planar };

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) return std::nullopt;
  return v;
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::optional<double> parse_hms(std::string_view s) {
  // HH:MM:SS or HH:MM:SS.fff
  const auto c1 = s.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  const auto h = parse_int(s.substr(0, c1));
  const auto m = parse_int(s.substr(c1 + 1, c2 - c1 - 1));
  const auto sec = parse_double(s.substr(c2 + 1));
  if (!h || !m || !sec || *h < 0 || *m < 0 || *m > 59 || *sec < 0 || *sec >= 60)
    return std::nullopt;
  return static_cast<double>(*h) * 3600.0 + static_cast<double>(*m) * 60.0 + *sec;
}

// Seconds: plain number, HH:MM:SS, or ISO-8601 date-time (UTC, optional Z).
inline std::optional<double> parse_timestamp(std::string_view s) {
  if (auto direct = parse_double(s)) return direct;
  const auto t_pos = s.find_first_of("T ");
  if (t_pos == std::string_view::npos) return parse_hms(s);

  std::string_view date = s.substr(0, t_pos);
  std::string_view time = s.substr(t_pos + 1);
  if (!time.empty() && (time.back() == 'Z' || time.back() == 'z')) {
    time.remove_suffix(1);
  }
  const auto d1 = date.find('-');
  const auto d2 = date.find('-', d1 + 1);
  if (d1 == std::string_view::npos || d2 == std::string_view::npos) return std::nullopt;
  const auto y = parse_int(date.substr(0, d1));
  const auto mo = parse_int(date.substr(d1 + 1, d2 - d1 - 1));
  const auto dd = parse_int(date.substr(d2 + 1));
  if (!y || !mo || !dd || *mo < 1 || *mo > 12 || *dd < 1 || *dd > 31) return std::nullopt;
  const auto hms = parse_hms(time);
  if (!hms) return std::nullopt;
  return static_cast<double>(days_from_civil(*y, static_cast<unsigned>(*mo),
                                             static_cast<unsigned>(*dd))) *
             86400.0 +
         *hms;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
  }
  return fields;
}

}  // namespace detail

struct ParseOutcome {
  std::vector<PlanarRecord> records;
  std::size_t skipped = 0;
  std::size_t total_lines = 0;
  std::optional<std::pair<double, double>> projection_ref;  // lat, lon
};

// Reads `object_id,timestamp,lat,lon` (geographic) or `object_id,timestamp,
// x,y` (planar) lines. An optional header is detected and dropped. Malformed
// lines are counted and skipped; strict mode aborts on the first one, and
// lenient mode aborts when more than half the lines are bad.
inline ParseOutcome parse_records(std::istream& in, InputMode mode,
                                  bool strict = false,
                                  std::optional<std::pair<double, double>> ref =
                                      std::nullopt) {
  ParseOutcome out;
  out.projection_ref = ref;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    ++out.total_lines;

    const auto fields = detail::split_csv(view);
    auto reject = [&]() {
      if (strict) {
        throw DataError("malformed record: " + std::string(view));
      }
      ++out.skipped;
    };
    if (fields.size() != 4) {
      // A header line is tolerated silently at the top of the file.
      if (first_line && !detail::parse_timestamp(fields.size() > 1 ? fields[1] : "")) {
        --out.total_lines;
      } else {
        reject();
      }
      first_line = false;
      continue;
    }
    const auto id = detail::parse_int(fields[0]);
    const auto t = detail::parse_timestamp(fields[1]);
    const auto a = detail::parse_double(fields[2]);
    const auto b = detail::parse_double(fields[3]);
    const bool header_like = first_line && (!id || !t || !a || !b);
    first_line = false;
    if (header_like) {
      --out.total_lines;
      continue;
    }
    if (!id || !t || !a || !b) {
      reject();
      continue;
    }
    if (mode == InputMode::geographic) {
      if (*a < -90.0 || *a > 90.0 || *b < -180.0 || *b > 180.0) {
        reject();
        continue;
      }
      if (!out.projection_ref) out.projection_ref = {*a, *b};
      out.records.push_back(PlanarRecord{
          *id, *t,
          project_to_plane(*a, *b, out.projection_ref->first,
                           out.projection_ref->second)});
    } else {
      out.records.push_back(PlanarRecord{*id, *t, PlanarPoint{*a, *b}});
    }
  }
  if (out.total_lines > 0 && out.skipped * 2 > out.total_lines) {
    throw DataError("more than half of the input lines are malformed (" +
                    std::to_string(out.skipped) + "/" +
                    std::to_string(out.total_lines) + ")");
  }
  return out;
}

inline ParseOutcome parse_records_file(const std::string& path, InputMode mode,
                                       bool strict = false,
                                       std::optional<std::pair<double, double>>
                                           ref = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return parse_records(in, mode, strict, ref);
}

// ---------------------------------------------------------------------------
// Synthetic streams

struct GeneratorSpec {
  int group_count = 2;
  int objects_per_group = 6;
  int steps = 3;
  double speed = 2.0;          // group translation speed, m/s
  double spread = 2.0;         // intra-group jitter bound, meters
  double dev_prob = 0.0;       // per object-step deviation probability
  double dev_mag = 30.0;       // deviation displacement, meters
  std::uint64_t seed = 1;
  double delta_t = 10.0;       // spacing of emitted timestamps
  double group_spacing = 0.0;  // grid pitch of group origins; 0 = auto
  // Scripted deviations (object id, step); applied on top of dev_prob.
  std::vector<std::pair<ObjectId, int>> forced_deviations;
};

namespace detail {

// Tiny deterministic generator; std:: distributions are not portable enough
// for byte-stable output files.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

}  // namespace detail

// Co-moving groups on a wide grid, each translating at `speed` in its own
// direction, objects jittering within `spread` of the group center. Each
// object may deviate by dev_mag for exactly one step, returning on the next;
// deviants head toward the centroid of the group origins, the pattern where
// strays from different groups approach one another.
inline std::vector<PlanarRecord> generate_synthetic(const GeneratorSpec& spec) {
  detail::SplitMix64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x517cc1b727220a95ULL);
  const double drift = spec.speed * spec.delta_t * spec.steps;
  const double spacing =
      spec.group_spacing > 0.0
          ? spec.group_spacing
          : 4.0 * (drift + spec.dev_mag + 10.0 * spec.spread) + 200.0;
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(
                                   static_cast<double>(spec.group_count)))));

  struct Group {
    PlanarPoint origin;
    double vx, vy;
    double dev_x, dev_y;  // unit deviation direction
  };
  std::vector<Group> groups;
  groups.reserve(spec.group_count);
  PlanarPoint centroid{0.0, 0.0};
  for (int g = 0; g < spec.group_count; ++g) {
    centroid.x += spacing * (g % cols) / spec.group_count;
    centroid.y += spacing * (g / cols) / spec.group_count;
  }
  for (int g = 0; g < spec.group_count; ++g) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const PlanarPoint origin{spacing * (g % cols), spacing * (g / cols)};
    double dx = centroid.x - origin.x;
    double dy = centroid.y - origin.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len > 0.0) {
      dx /= len;
      dy /= len;
    } else {
      dx = 1.0;
      dy = 0.0;
    }
    groups.push_back(Group{origin, spec.speed * std::cos(angle),
                           spec.speed * std::sin(angle), dx, dy});
  }

  std::vector<bool> deviated_last(
      static_cast<std::size_t>(spec.group_count) * spec.objects_per_group, false);
  auto forced = [&](ObjectId id, int k) {
    for (const auto& [fid, fk] : spec.forced_deviations) {
      if (fid == id && fk == k) return true;
    }
    return false;
  };

  std::vector<PlanarRecord> records;
  records.reserve(deviated_last.size() * spec.steps);
  for (int k = 0; k < spec.steps; ++k) {
    const double t = k * spec.delta_t;
    for (int g = 0; g < spec.group_count; ++g) {
      const PlanarPoint center{groups[g].origin.x + groups[g].vx * t,
                               groups[g].origin.y + groups[g].vy * t};
      for (int j = 0; j < spec.objects_per_group; ++j) {
        const std::size_t slot =
            static_cast<std::size_t>(g) * spec.objects_per_group + j;
        const ObjectId id = static_cast<ObjectId>(slot) + 1;

        const double jitter_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double jitter_r = spec.spread * std::sqrt(rng.uniform());
        PlanarPoint p{center.x + jitter_r * std::cos(jitter_angle),
                      center.y + jitter_r * std::sin(jitter_angle)};

        const double roll = rng.uniform();
        bool deviate = false;
        if (deviated_last[slot]) {
          deviated_last[slot] = false;  // exactly one step away, then return
        } else if (roll < spec.dev_prob || forced(id, k)) {
          deviate = true;
          deviated_last[slot] = true;
        }
        if (deviate) {
          p.x += spec.dev_mag * groups[g].dev_x;
          p.y += spec.dev_mag * groups[g].dev_y;
        }
        records.push_back(PlanarRecord{id, t, p});
      }
    }
  }
  return records;
}

inline void write_records_csv(std::ostream& os,
                              std::span<const PlanarRecord> records) {
  os << "object_id,timestamp,x,y\n";
  char buf[96];
  for (const PlanarRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.id), r.t, r.loc.x, r.loc.y);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Result emission

// One JSON line per step; the field order is part of the format.
inline std::string to_jsonl_line(const StepResult& result) {
  nlohmann::ordered_json j;
  j["step"] = result.k;
  j["eps"] = result.eps_used;

  std::map<int, int> evolved_from;
  std::vector<int> dissolved;
  for (const ClusterEvent& e : result.events) {
    if (e.kind == ClusterEvent::Kind::evolve) evolved_from[e.cur_id] = e.prev_id;
    if (e.kind == ClusterEvent::Kind::dissolve) dissolved.push_back(e.prev_id);
  }

  j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& [cid, members] : result.clustering.clusters) {
    nlohmann::ordered_json c;
    c["id"] = cid;
    auto it = evolved_from.find(cid);
    if (it == evolved_from.end()) {
      c["prev"] = nullptr;
      c["event"] = "form";
    } else {
      c["prev"] = it->second;
      c["event"] = "evolve";
    }
    c["members"] = members;
    j["clusters"].push_back(std::move(c));
  }
  j["dissolved"] = dissolved;

  std::vector<ObjectId> outliers;
  for (const auto& [id, label] : result.clustering.labels) {
    if (label == PointLabel::outlier) outliers.push_back(id);
  }
  j["outliers"] = outliers;
  if (result.metrics.qs) j["qs"] = *result.metrics.qs; else j["qs"] = nullptr;
  if (result.metrics.nmi_with_prev) j["nmi"] = *result.metrics.nmi_with_prev;
  else j["nmi"] = nullptr;
  j["smoothed"] = result.metrics.smoothed;
  j["ms"] = result.metrics.processing_seconds * 1000.0;
  return j.dump();
}

inline void write_summary_header(std::ostream& os) {
  os << "step,objects,clusters,outliers,smoothed,eps,qs,nmi,ms\n";
}

inline void write_summary_row(std::ostream& os, const StepResult& r) {
  os << r.k << ',' << r.metrics.objects << ',' << r.metrics.clusters << ','
     << r.metrics.outliers << ',' << r.metrics.smoothed << ',' << r.eps_used
     << ',';
  if (r.metrics.qs) os << *r.metrics.qs;
  os << ',';
  if (r.metrics.nmi_with_prev) os << *r.metrics.nmi_with_prev;
  os << ',' << r.metrics.processing_seconds * 1000.0 << '\n';
}

// Assignments: everything needed to recompute QS/NMI offline. One row per
// object per step, adjusted coordinates included.
inline void write_assignments_header(std::ostream& os) {
  os << "step,object_id,t,x,y,cluster,label\n";
}

inline void write_assignments_rows(std::ostream& os, const StepResult& r,
                                   const Snapshot& snapshot) {
  char buf[160];
  for (const auto& [id, adj] : r.adjustments) {
    int cid = -1;
    auto it = r.clustering.cluster_of.find(id);
    if (it != r.clustering.cluster_of.end()) cid = it->second;
    const char* label = "outlier";
    switch (r.clustering.labels.at(id)) {
      case PointLabel::core: label = "core"; break;
      case PointLabel::border: label = "border"; break;
      case PointLabel::outlier: label = "outlier"; break;
    }
    std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g,%.17g,%d,%s\n",
                  static_cast<long long>(r.k), static_cast<long long>(id),
                  snapshot.entries.at(id).t, adj.r_opt.x, adj.r_opt.y, cid,
                  label);
    os << buf;
  }
}

struct EvaluatedStep {
  StepIndex k = 0;
  std::optional<double> qs;
  std::optional<double> nmi;
};

struct Evaluation {
  std::vector<EvaluatedStep> steps;
  std::optional<double> mean_qs;
  std::optional<double> mean_nmi;
};

// Recomputes QS and step-to-step NMI from an assignments file.
inline Evaluation evaluate_assignments(std::istream& in, double dist_floor) {
  std::map<StepIndex, Clustering> clusterings;
  std::map<StepIndex, std::vector<std::pair<ObjectId, PlanarPoint>>> points;

  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    const auto fields = detail::split_csv(view);
    if (first) {
      first = false;
      if (fields.size() >= 2 && !detail::parse_int(fields[0])) continue;  // header
    }
    if (fields.size() != 7) throw DataError("malformed assignments row: " + line);
    const auto k = detail::parse_int(fields[0]);
    const auto id = detail::parse_int(fields[1]);
    const auto x = detail::parse_double(fields[3]);
    const auto y = detail::parse_double(fields[4]);
    const auto cid = detail::parse_int(fields[5]);
    if (!k || !id || !x || !y || !cid) {
      throw DataError("malformed assignments row: " + line);
    }
    Clustering& c = clusterings[*k];
    c.k = *k;
    const PointLabel label = fields[6] == "core"     ? PointLabel::core
                             : fields[6] == "border" ? PointLabel::border
                                                     : PointLabel::outlier;
    c.labels[*id] = label;
    if (*cid >= 0) {
      c.cluster_of[*id] = static_cast<int>(*cid);
      c.clusters[static_cast<int>(*cid)].push_back(*id);
    }
    points[*k].emplace_back(*id, PlanarPoint{*x, *y});
  }

  Evaluation out;
  const Clustering* prev = nullptr;
  double qs_sum = 0.0, nmi_sum = 0.0;
  std::size_t qs_n = 0, nmi_n = 0;
  for (auto& [k, clustering] : clusterings) {
    for (auto& [cid, members] : clustering.clusters) {
      std::sort(members.begin(), members.end());
    }
    auto& pts = points[k];
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    EvaluatedStep step;
    step.k = k;
    step.qs = modularity(clustering, pts, dist_floor);
    if (prev) step.nmi = nmi(*prev, clustering);
    if (step.qs) { qs_sum += *step.qs; ++qs_n; }
    if (step.nmi) { nmi_sum += *step.nmi; ++nmi_n; }
    out.steps.push_back(step);
    prev = &clustering;
  }
  if (qs_n > 0) out.mean_qs = qs_sum / static_cast<double>(qs_n);
  if (nmi_n > 0) out.mean_nmi = nmi_sum / static_cast<double>(nmi_n);
  return out;
}

}  // namespace eco
