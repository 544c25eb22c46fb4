#include <catch2/catch_amalgamated.hpp>

#include "eco/geometry.hpp"
#include "eco/snapshot.hpp"
#include "oracles.hpp"

using eco::PlanarPoint;
using Catch::Approx;

TEST_CASE("timestamps discretize to step indices") {
  CHECK(eco::discretize_timestamp(1.0, 0.0, 10.0) == 0);
  CHECK(eco::discretize_timestamp(12.0, 0.0, 10.0) == 1);
  CHECK(eco::discretize_timestamp(20.0, 0.0, 10.0) == 2);
  CHECK(eco::discretize_timestamp(31.0, 0.0, 10.0) == 3);
  CHECK(eco::discretize_timestamp(44.0, 0.0, 10.0) == 4);
  CHECK(eco::discretize_timestamp(0.0, 0.0, 10.0) == 0);
  CHECK_THROWS_AS(eco::discretize_timestamp(-1.0, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("discretization is monotone and delta-t periodic") {
  oracle::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double dt = rng.uniform(0.5, 60.0);
    const double origin = rng.uniform(0.0, 100.0);
    const double t = origin + rng.uniform(0.0, 1000.0);
    const auto k = eco::discretize_timestamp(t, origin, dt);
    CHECK(eco::discretize_timestamp(t + dt, origin, dt) == k + 1);
    CHECK(eco::discretize_timestamp(t + rng.uniform(0.0, 5.0), origin, dt) >= k);
  }
}

TEST_CASE("projection matches analytic offsets") {
  const double lat0 = 60.0, lon0 = 24.0;
  const PlanarPoint at_ref = eco::project_to_plane(lat0, lon0, lat0, lon0);
  CHECK(at_ref.x == Approx(0.0).margin(1e-9));
  CHECK(at_ref.y == Approx(0.0).margin(1e-9));

  // One degree north: R * pi/180 independently of latitude.
  const double meridian = eco::kEarthRadiusMeters * std::numbers::pi / 180.0;
  const PlanarPoint north = eco::project_to_plane(lat0 + 1.0, lon0, lat0, lon0);
  CHECK(north.y == Approx(111194.92664455873).epsilon(1e-12));
  CHECK(north.y == Approx(meridian).epsilon(1e-12));

  // One degree east at 60N: scaled by cos(60) = 1/2.
  const PlanarPoint east = eco::project_to_plane(lat0, lon0 + 1.0, lat0, lon0);
  CHECK(east.x == Approx(meridian * 0.5).epsilon(1e-9));
  CHECK(east.y == Approx(0.0).margin(1e-9));
}

TEST_CASE("euclidean distance basics") {
  CHECK(eco::euclidean_distance({0, 0}, {3, 4}) == Approx(5.0));
  CHECK(eco::euclidean_distance({1, 1}, {4, 5}) == Approx(5.0));
  CHECK(eco::euclidean_distance({2.5, -1}, {2.5, -1}) == 0.0);
}

TEST_CASE("triangle inequality holds on random points") {
  oracle::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const PlanarPoint p = rng.point_in_box(1000.0);
    const PlanarPoint q = rng.point_in_box(1000.0);
    const PlanarPoint r = rng.point_in_box(1000.0);
    CHECK(eco::euclidean_distance(p, r) <=
          eco::euclidean_distance(p, q) + eco::euclidean_distance(q, r) + 1e-9);
  }
}

TEST_CASE("snapshot keeps the earliest record per object") {
  std::vector<eco::PlanarRecord> records{
      {7, 23.0, {1.0, 1.0}},
      {7, 21.0, {2.0, 2.0}},
      {9, 25.0, {3.0, 3.0}},
  };
  const eco::Snapshot snap = eco::build_snapshot(records, 2, 0.0, 10.0);
  REQUIRE(snap.size() == 2);
  CHECK(snap.entries.at(7).t == 21.0);
  CHECK(snap.entries.at(7).loc == eco::PlanarPoint{2.0, 2.0});
  CHECK(snap.entries.at(9).t == 25.0);
}

TEST_CASE("snapshot timestamp ties keep the first arrival") {
  std::vector<eco::PlanarRecord> records{
      {7, 21.0, {1.0, 1.0}},
      {7, 21.0, {9.0, 9.0}},
  };
  const eco::Snapshot snap = eco::build_snapshot(records, 2, 0.0, 10.0);
  CHECK(snap.entries.at(7).loc == eco::PlanarPoint{1.0, 1.0});
}

TEST_CASE("snapshot rejects records from other steps") {
  std::vector<eco::PlanarRecord> records{{7, 35.0, {0, 0}}};
  CHECK_THROWS_AS(eco::build_snapshot(records, 2, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("snapshot of empty input is empty") {
  CHECK(eco::build_snapshot({}, 0, 0.0, 10.0).empty());
}

TEST_CASE("snapshot size bounded by distinct ids") {
  oracle::Rng rng(23);
  std::vector<eco::PlanarRecord> records;
  std::set<eco::ObjectId> distinct;
  for (int i = 0; i < 100; ++i) {
    const auto id = static_cast<eco::ObjectId>(rng.next() % 40);
    distinct.insert(id);
    records.push_back({id, rng.uniform(20.0, 30.0), rng.point_in_box(10.0)});
  }
  const eco::Snapshot snap = eco::build_snapshot(records, 2, 0.0, 10.0);
  CHECK(snap.size() == distinct.size());
}

TEST_CASE("params validation") {
  eco::Params p;
  CHECK_NOTHROW(p.validate());
  p.delta = p.eps0 + 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = eco::Params{};
  p.alpha = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = eco::Params{};
  p.alpha = 0.0;
  CHECK_NOTHROW(p.validate());
}
