#include <catch2/catch_amalgamated.hpp>

#include "eco/dbscan.hpp"
#include "eco/metrics.hpp"
#include "oracles.hpp"

using Catch::Approx;
using eco::Clustering;
using eco::ObjectId;
using eco::PlanarPoint;
using Points = std::vector<std::pair<ObjectId, PlanarPoint>>;

namespace {

Clustering run_cluster(const Points& pts, double eps, int min_pts,
                       const eco::GroupSet* groups = nullptr,
                       double group_radius = 0.0) {
  const eco::GridIndex idx = eco::build_grid(pts, eps);
  return eco::cluster(pts, idx, eps, min_pts, groups, group_radius);
}

Points two_blob_snapshot() {
  const std::vector<PlanarPoint> offsets{
      {0, 0}, {2, 0}, {1, 1.7}, {-1, 1.7}, {-2, 0}, {-1, -1.7}};
  Points pts;
  for (int i = 0; i < 6; ++i) {
    pts.emplace_back(i + 1, offsets[i]);
    pts.emplace_back(i + 7, PlanarPoint{offsets[i].x, offsets[i].y + 60.0});
  }
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return pts;
}

}  // namespace

TEST_CASE("two separated blobs cluster apart") {
  const Points pts = two_blob_snapshot();
  const Clustering c = run_cluster(pts, 12.0, 2);
  REQUIRE(c.clusters.size() == 2);
  CHECK(c.clusters.at(0) == std::vector<ObjectId>{1, 2, 3, 4, 5, 6});
  CHECK(c.clusters.at(1) == std::vector<ObjectId>{7, 8, 9, 10, 11, 12});
  for (const auto& [id, label] : c.labels) CHECK(label != eco::PointLabel::outlier);
}

TEST_CASE("clustering an empty snapshot") {
  const Clustering c = run_cluster({}, 5.0, 3);
  CHECK(c.clusters.empty());
  CHECK(c.labels.empty());
}

TEST_CASE("random instances match the naive reference") {
  oracle::Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    Points pts;
    const int n = 150;
    const double half = rng.uniform(10.0, 40.0);
    for (int i = 0; i < n; ++i) pts.emplace_back(i, rng.point_in_box(half));
    const double eps = rng.uniform(2.0, 10.0);
    const int min_pts = 2 + static_cast<int>(rng.next() % 5);

    const Clustering got = run_cluster(pts, eps, min_pts);
    const Clustering want = oracle::naive_dbscan(pts, eps, min_pts);

    // Core sets identical.
    for (const auto& [id, label] : got.labels) {
      CHECK((label == eco::PointLabel::core) ==
            (want.labels.at(id) == eco::PointLabel::core));
    }
    // Core partitions identical.
    CHECK(oracle::core_partition(got) == oracle::core_partition(want));
    CHECK(oracle::outlier_set(got) == oracle::outlier_set(want));

    // Every border's cluster holds a core within eps of it.
    std::map<ObjectId, PlanarPoint> loc(pts.begin(), pts.end());
    for (const auto& [id, label] : got.labels) {
      if (label != eco::PointLabel::border) continue;
      bool reachable = false;
      for (ObjectId other : got.clusters.at(got.cluster_of.at(id))) {
        if (got.labels.at(other) == eco::PointLabel::core &&
            eco::euclidean_distance(loc.at(id), loc.at(other)) <= eps + 1e-12) {
          reachable = true;
          break;
        }
      }
      CHECK(reachable);
    }
  }
}

TEST_CASE("expansion-order parity with the reference gives equal partitions") {
  oracle::Rng rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    Points pts;
    for (int i = 0; i < 120; ++i) pts.emplace_back(i, rng.point_in_box(25.0));
    const double eps = rng.uniform(2.0, 8.0);
    const Clustering got = run_cluster(pts, eps, 4);
    const Clustering want = oracle::naive_dbscan(pts, eps, 4);
    CHECK(oracle::canonical_partition(got) == oracle::canonical_partition(want));
  }
}

TEST_CASE("core shortcuts agree with direct range counts") {
  // Dense cell: five coincident-ish points, all core via the cell check.
  Points pts;
  for (int i = 0; i < 5; ++i) {
    pts.emplace_back(i, PlanarPoint{0.1 * i, 0.05 * i});
  }
  pts.emplace_back(100, PlanarPoint{50.0, 50.0});  // far outlier

  const double eps = 10.0;
  const eco::GridIndex idx = eco::build_grid(pts, eps);
  const eco::GroupSet groups = eco::generate_groups(pts, idx, 5.0, 3, 0);
  REQUIRE(groups.groups.at(0).member_ids.size() == 5);

  const Clustering c = eco::cluster(pts, idx, eps, 4, &groups, 5.0);
  for (int i = 0; i < 5; ++i) {
    CHECK(c.labels.at(i) == eco::PointLabel::core);
    CHECK(eco::neighbors_within(idx.point_of.at(i), eps, idx).size() >= 4);
  }
  CHECK(c.labels.at(100) == eco::PointLabel::outlier);
}

TEST_CASE("group-seed shortcut is ignored when the group radius exceeds eps") {
  // A group built with delta > eps must not promote its seed.
  Points pts{{1, {0, 0}}, {2, {8, 0}}, {3, {-8, 0}}, {4, {0, 8}}};
  const double delta = 10.0;
  const eco::GridIndex wide = eco::build_grid(pts, delta);
  const eco::GroupSet groups = eco::generate_groups(pts, wide, delta, 3, 0);
  REQUIRE(groups.groups.at(1).member_ids.size() == 4);

  const double eps = 2.0;
  const eco::GridIndex idx = eco::build_grid(pts, eps);
  const Clustering c = eco::cluster(pts, idx, eps, 3, &groups, delta);
  CHECK(c.labels.at(1) == eco::PointLabel::outlier);
}

TEST_CASE("random shortcut audit") {
  oracle::Rng rng(107);
  for (int trial = 0; trial < 25; ++trial) {
    Points pts;
    for (int i = 0; i < 100; ++i) pts.emplace_back(i, rng.point_in_box(15.0));
    const double eps = rng.uniform(3.0, 9.0);
    const double delta = rng.uniform(0.3, 1.0) * eps;
    const eco::GridIndex idx = eco::build_grid(pts, eps);
    const eco::GroupSet groups = eco::generate_groups(pts, idx, delta, 3, 0);
    const int min_pts = 3;
    const Clustering c = eco::cluster(pts, idx, eps, min_pts, &groups, delta);
    for (const auto& [id, label] : c.labels) {
      const bool truly_core =
          oracle::brute_force_neighbors(idx.point_of.at(id), eps, pts).size() >=
          static_cast<std::size_t>(min_pts);
      CHECK((label == eco::PointLabel::core) == truly_core);
    }
  }
}

TEST_CASE("epsilon adaptation follows the strict-maximum rule") {
  oracle::Rng rng(109);
  for (int trial = 0; trial < 25; ++trial) {
    Points pts;
    const int blobs = 3 + static_cast<int>(rng.next() % 3);
    int id = 0;
    for (int b = 0; b < blobs; ++b) {
      const PlanarPoint center = rng.point_in_box(60.0);
      const int m = 3 + static_cast<int>(rng.next() % 5);
      for (int i = 0; i < m; ++i) {
        pts.emplace_back(id++, rng.point_in_disk(center, rng.uniform(0.5, 6.0)));
      }
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const double eps = rng.uniform(4.0, 10.0);
    const double delta_eps = rng.uniform(0.5, 3.0);
    const int min_pts = 3;
    const double floor = 1e-3;

    const Clustering c_m = run_cluster(pts, eps, min_pts);
    const double got = eco::adapt_epsilon(pts, c_m, eps, delta_eps, min_pts, floor);
    CHECK((got == eps - delta_eps || got == eps || got == eps + delta_eps));

    const double qs_m = oracle::naive_modularity(c_m, pts, floor);
    const double qs_h = oracle::naive_modularity(
        run_cluster(pts, eps + delta_eps, min_pts), pts, floor);
    const double qs_l = oracle::naive_modularity(
        run_cluster(pts, eps - delta_eps, min_pts), pts, floor);
    double want = eps;
    if (qs_h > qs_m && qs_h > qs_l) want = eps + delta_eps;
    else if (qs_l > qs_m && qs_l > qs_h) want = eps - delta_eps;
    CHECK(got == Approx(want));
  }
}

TEST_CASE("epsilon adaptation ties keep the current value") {
  // Two far blobs: any eps in [4,8] gives the same clustering, so all three
  // probes tie and eps stands.
  Points pts;
  for (int i = 0; i < 4; ++i) {
    pts.emplace_back(i, PlanarPoint{i * 1.0, 0.0});
    pts.emplace_back(i + 10, PlanarPoint{i * 1.0, 500.0});
  }
  const Clustering c = run_cluster(pts, 6.0, 3);
  CHECK(eco::adapt_epsilon(pts, c, 6.0, 1.0, 3, 1e-3) == 6.0);
}

TEST_CASE("initial epsilon climbs an absorption chain and stops") {
  // Chain cluster absorbing one point per +1 step of eps for three steps;
  // a far pair supplies the inter-cluster term. Verified against exhaustive
  // reclustering below.
  Points pts{
      {0, {0.0, 0.0}}, {1, {1.0, 0.0}},  {2, {3.2, 0.0}},
      {3, {6.5, 0.0}}, {4, {10.9, 0.0}}, {10, {100.0, 0.0}},
      {11, {101.0, 0.0}},
  };
  const double floor = 1e-3;
  const int min_pts = 2;
  auto qs_at = [&](double eps) {
    return oracle::naive_modularity(run_cluster(pts, eps, min_pts), pts, floor);
  };
  REQUIRE(qs_at(1.5) < qs_at(2.5));
  REQUIRE(qs_at(2.5) < qs_at(3.5));
  REQUIRE(qs_at(3.5) < qs_at(4.5));
  REQUIRE(qs_at(4.5) == Approx(qs_at(5.5)));

  CHECK(eco::initial_epsilon(pts, 1.5, 1.0, min_pts, 16, floor) == Approx(4.5));
  // A budget of one round permits at most one move.
  const double one = eco::initial_epsilon(pts, 1.5, 1.0, min_pts, 1, floor);
  CHECK(std::abs(one - 1.5) <= 1.0 + 1e-12);
}

TEST_CASE("initial epsilon stays put at a local maximum") {
  Points pts;
  for (int i = 0; i < 5; ++i) {
    pts.emplace_back(i, PlanarPoint{i * 1.0, 0.0});
    pts.emplace_back(i + 10, PlanarPoint{i * 1.0, 400.0});
  }
  CHECK(eco::initial_epsilon(pts, 6.0, 0.5, 3, 16, 1e-3) == 6.0);
}

namespace {

Clustering clustering_from_blocks(
    const std::vector<std::vector<ObjectId>>& blocks,
    const std::vector<ObjectId>& outliers) {
  Clustering c;
  int cid = 0;
  for (const auto& block : blocks) {
    for (ObjectId id : block) {
      c.cluster_of[id] = cid;
      c.labels[id] = eco::PointLabel::core;
      c.clusters[cid].push_back(id);
    }
    ++cid;
  }
  for (ObjectId id : outliers) c.labels[id] = eco::PointLabel::outlier;
  return c;
}

}  // namespace

TEST_CASE("identical partitions all evolve") {
  const Clustering a = clustering_from_blocks({{1, 2, 3}, {4, 5}}, {9});
  const Clustering b = clustering_from_blocks({{1, 2, 3}, {4, 5}}, {9});
  const auto events = eco::map_clusters(a, b);
  REQUIRE(events.size() == 2);
  for (const auto& e : events) {
    CHECK(e.kind == eco::ClusterEvent::Kind::evolve);
    CHECK(e.cur_id == e.prev_id);
  }
}

TEST_CASE("everything forms against an empty history") {
  const Clustering a = clustering_from_blocks({}, {});
  const Clustering b = clustering_from_blocks({{1, 2}, {3, 4}}, {});
  const auto events = eco::map_clusters(a, b);
  REQUIRE(events.size() == 2);
  for (const auto& e : events) CHECK(e.kind == eco::ClusterEvent::Kind::form);
}

TEST_CASE("lineage needs at least half of the smaller cluster") {
  // Overlap of one: half of the smaller (2) -> evolve.
  const Clustering prev = clustering_from_blocks({{1, 2}}, {});
  const Clustering cur = clustering_from_blocks({{2, 8, 9, 10, 11}}, {});
  auto events = eco::map_clusters(prev, cur);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == eco::ClusterEvent::Kind::evolve);

  // Overlap of one against smaller size three -> form + dissolve.
  const Clustering prev2 = clustering_from_blocks({{1, 2, 3}}, {});
  const Clustering cur2 = clustering_from_blocks({{3, 8, 9, 10}}, {});
  events = eco::map_clusters(prev2, cur2);
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == eco::ClusterEvent::Kind::form);
  CHECK(events[1].kind == eco::ClusterEvent::Kind::dissolve);
}

TEST_CASE("a previous cluster backs at most one successor") {
  // Previous {1..6} splits into {1,2,3} and {4,5,6}: the larger overlap is a
  // tie, broken to the smaller current id; the other current cluster forms.
  const Clustering prev = clustering_from_blocks({{1, 2, 3, 4, 5, 6}}, {});
  const Clustering cur = clustering_from_blocks({{1, 2, 3}, {4, 5, 6}}, {});
  const auto events = eco::map_clusters(prev, cur);
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == eco::ClusterEvent::Kind::evolve);
  CHECK(events[0].cur_id == 0);
  CHECK(events[0].prev_id == 0);
  CHECK(events[1].kind == eco::ClusterEvent::Kind::form);
  CHECK(events[1].cur_id == 1);
}

TEST_CASE("evolve relation is injective both ways") {
  oracle::Rng rng(113);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 30;
    std::vector<std::vector<ObjectId>> pblocks(1 + rng.next() % 4);
    std::vector<std::vector<ObjectId>> cblocks(1 + rng.next() % 4);
    for (int i = 0; i < n; ++i) {
      pblocks[rng.next() % pblocks.size()].push_back(i);
      cblocks[rng.next() % cblocks.size()].push_back(i);
    }
    std::erase_if(pblocks, [](const auto& b) { return b.empty(); });
    std::erase_if(cblocks, [](const auto& b) { return b.empty(); });
    const Clustering prev = clustering_from_blocks(pblocks, {});
    const Clustering cur = clustering_from_blocks(cblocks, {});
    std::set<int> prev_used, cur_used;
    for (const auto& e : eco::map_clusters(prev, cur)) {
      if (e.kind != eco::ClusterEvent::Kind::evolve) continue;
      CHECK(prev_used.insert(e.prev_id).second);
      CHECK(cur_used.insert(e.cur_id).second);
    }
  }
}
