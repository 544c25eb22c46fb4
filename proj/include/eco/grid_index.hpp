#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eco/geometry.hpp"
#include "eco/snapshot.hpp"

namespace eco {

struct CellId {
  std::int64_t i = 0;
  std::int64_t j = 0;
  friend bool operator==(const CellId&, const CellId&) = default;
};

struct CellIdHash {
  std::size_t operator()(const CellId& c) const {
    std::uint64_t h = static_cast<std::uint64_t>(c.i) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(c.j) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Uniform sparse grid whose cell diagonal equals eps, i.e. cell width
// eps/sqrt(2). Any two points sharing a cell are therefore within eps.
struct GridIndex {
  double eps = 0.0;
  double cell_width = 0.0;
  std::unordered_map<CellId, std::vector<std::pair<ObjectId, PlanarPoint>>, CellIdHash> cells;
  std::unordered_map<ObjectId, PlanarPoint> point_of;

  CellId cell_of(const PlanarPoint& p) const {
    return CellId{static_cast<std::int64_t>(std::floor(p.x / cell_width)),
                  static_cast<std::int64_t>(std::floor(p.y / cell_width))};
  }
};

inline GridIndex build_grid(std::span<const std::pair<ObjectId, PlanarPoint>> points,
                            double eps) {
  if (eps <= 0) throw std::invalid_argument("grid eps must be > 0");
  GridIndex idx;
  idx.eps = eps;
  idx.cell_width = eps / std::numbers::sqrt2;
  idx.point_of.reserve(points.size());
  for (const auto& [id, p] : points) {
    idx.cells[idx.cell_of(p)].emplace_back(id, p);
    idx.point_of[id] = p;
  }
  // Canonical in-cell order, so every query below is input-order independent.
  for (auto& [cell, members] : idx.cells) {
    std::sort(members.begin(), members.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return idx;
}

// Candidate cells for a range query of radius h around a point in g.
// With cell width eps/sqrt(2): h below the width needs only the 3x3 block;
// any h up to eps needs the 5x5 block minus its four corners (21 cells).
inline std::vector<CellId> h_close_cells(CellId g, double h, double eps) {
  if (h <= 0) throw std::invalid_argument("query radius must be > 0");
  if (h > eps) throw std::invalid_argument("query radius exceeds grid eps");
  std::vector<CellId> out;
  const double width = eps / std::numbers::sqrt2;
  if (h < width) {
    out.reserve(9);
    for (std::int64_t di = -1; di <= 1; ++di)
      for (std::int64_t dj = -1; dj <= 1; ++dj)
        out.push_back(CellId{g.i + di, g.j + dj});
    return out;
  }
  out.reserve(21);
  for (std::int64_t di = -2; di <= 2; ++di) {
    for (std::int64_t dj = -2; dj <= 2; ++dj) {
      if (std::abs(di) == 2 && std::abs(dj) == 2) continue;
      out.push_back(CellId{g.i + di, g.j + dj});
    }
  }
  return out;
}

// Exact range query: ids of all indexed points within distance h of p,
// ascending. p itself need not be indexed.
inline std::vector<ObjectId> neighbors_within(const PlanarPoint& p, double h,
                                              const GridIndex& idx) {
  std::vector<ObjectId> out;
  if (idx.cells.empty()) return out;
  const double h2 = h * h;
  for (const CellId& c : h_close_cells(idx.cell_of(p), h, idx.eps)) {
    auto it = idx.cells.find(c);
    if (it == idx.cells.end()) continue;
    for (const auto& [id, q] : it->second) {
      if (squared_distance(p, q) <= h2) out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace eco
