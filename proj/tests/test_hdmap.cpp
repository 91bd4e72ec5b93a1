#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mine3d/errors.hpp"
#include "mine3d/hdmap.hpp"
#include "oracles.hpp"

using namespace mine3d;
using geom::Vec2;
using geom::Vec3;

namespace {

hdmap::Raster make_raster(int rows, int cols, double res, Vec2 origin,
                          float fill = 0.0f) {
  hdmap::Raster r;
  r.rows = rows;
  r.cols = cols;
  r.resolution = res;
  r.origin = origin;
  r.values.assign(static_cast<size_t>(rows) * cols, fill);
  return r;
}

// Brute-force nearest segment: used to cross-check the grid index.
struct BruteBest {
  double dist = 1e18;
  int lane = -1, seg = -1;
  Vec2 dir = Vec2::UnitX();
};

BruteBest brute_nearest(const hdmap::LaneGraph& g, const Vec2& p) {
  BruteBest best;
  for (size_t li = 0; li < g.lanes.size(); ++li) {
    const auto& lane = g.lanes[li];
    for (size_t si = 0; si + 1 < lane.size(); ++si) {
      const Vec2 a = lane[si].head<2>();
      const Vec2 b = lane[si + 1].head<2>();
      const Vec2 ab = b - a;
      double t = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = (p - (a + t * ab)).norm();
      if (d < best.dist) {
        best.dist = d;
        best.lane = static_cast<int>(li);
        best.seg = static_cast<int>(si);
        best.dir = ab.normalized();
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ground_height_at") {
  SUBCASE("constant raster") {
    const auto r = make_raster(5, 5, 1.0, {0, 0}, 2.0f);
    CHECK(hdmap::ground_height_at(r, {2.5, 2.5}) == doctest::Approx(2.0));
    CHECK(hdmap::ground_height_at(r, {0.1, 4.9}) == doctest::Approx(2.0));
  }

  SUBCASE("2x2 horizontal step interpolates at the midpoint") {
    auto r = make_raster(2, 2, 1.0, {0, 0});
    r.at(0, 0) = 0;
    r.at(0, 1) = 1;
    r.at(1, 0) = 0;
    r.at(1, 1) = 1;
    CHECK(hdmap::ground_height_at(r, {1.0, 0.5}) == doctest::Approx(0.5));
    CHECK(hdmap::ground_height_at(r, {1.0, 1.5}) == doctest::Approx(0.5));
  }

  SUBCASE("linear ramp reproduced exactly") {
    // Resolution 0.5 puts cell centers on quarter-meter coordinates, which
    // the f32 raster stores exactly.
    auto r = make_raster(10, 10, 0.5, {0, 0});
    for (int row = 0; row < 10; ++row)
      for (int col = 0; col < 10; ++col)
        r.at(row, col) = static_cast<float>(r.cell_center(row, col).x());
    CHECK(std::abs(hdmap::ground_height_at(r, {0.3, 0.7}) - 0.3) < 1e-9);
    CHECK(std::abs(hdmap::ground_height_at(r, {2.52, 1.13}) - 2.52) < 1e-9);
    CHECK(std::abs(hdmap::ground_height_at(r, {4.0, 3.3}) - 4.0) < 1e-9);
  }

  SUBCASE("out of bounds") {
    const auto r = make_raster(4, 4, 1.0, {0, 0});
    CHECK_THROWS_AS(hdmap::ground_height_at(r, {-0.1, 2.0}), OutOfMap);
    CHECK_THROWS_AS(hdmap::ground_height_at(r, {2.0, 4.0}), OutOfMap);
  }

  SUBCASE("continuous across cell boundaries") {
    oracles::Rng rng(3);
    auto r = make_raster(8, 8, 0.5, {-2, -2});
    for (float& v : r.values) v = static_cast<float>(rng.uniform(-3, 3));
    for (int i = 0; i < 500; ++i) {
      const Vec2 p(rng.uniform(-1.99, 1.99), rng.uniform(-1.99, 1.99));
      const Vec2 q = p + Vec2(1e-9, -1e-9);
      if (!r.contains(q)) continue;
      CHECK(std::abs(hdmap::ground_height_at(r, p) -
                     hdmap::ground_height_at(r, q)) < 1e-6);
    }
  }
}

TEST_CASE("in_roi") {
  SUBCASE("zero distance and empty road") {
    auto drive = make_raster(20, 20, 1.0, {0, 0});
    drive.at(10, 10) = 1.0f;
    const hdmap::DistanceField df(drive);
    CHECK(df.in_roi(drive.cell_center(10, 10), 5.0));
    CHECK(df.in_roi(drive.cell_center(10, 10), 0.0));

    const hdmap::DistanceField empty(make_raster(20, 20, 1.0, {0, 0}));
    for (double x : {0.5, 5.5, 19.5})
      CHECK(!empty.in_roi({x, 10.0}, 5.0));
  }

  SUBCASE("hand-computed distances around a single cell") {
    // Cell centers on integer coordinates; the driveable cell is (10,10).
    auto drive = make_raster(30, 30, 1.0, {-0.5, -0.5});
    drive.at(10, 10) = 1.0f;
    const hdmap::DistanceField df(drive);
    CHECK(df.in_roi({14.0, 10.0}, 5.0));   // distance 4
    CHECK(!df.in_roi({16.0, 10.0}, 5.0));  // distance 6
    CHECK(df.in_roi({13.0, 14.0}, 5.0));   // distance 5 exactly
  }

  SUBCASE("outside the raster is never in the ROI") {
    auto drive = make_raster(4, 4, 1.0, {0, 0}, 1.0f);
    const hdmap::DistanceField df(drive);
    CHECK(!df.in_roi({-1.0, 2.0}, 100.0));
    CHECK(!df.in_roi({2.0, 5.0}, 100.0));
  }

  SUBCASE("monotone in margin") {
    oracles::Rng rng(17);
    auto drive = make_raster(25, 25, 0.8, {-10, -10});
    for (float& v : drive.values) v = rng.uniform() < 0.1 ? 1.0f : 0.0f;
    const hdmap::DistanceField df(drive);
    for (int i = 0; i < 300; ++i) {
      const Vec2 p(rng.uniform(-10, 10), rng.uniform(-10, 10));
      const double m1 = rng.uniform(0, 10);
      const double m2 = m1 + rng.uniform(0, 10);
      if (df.in_roi(p, m1)) CHECK(df.in_roi(p, m2));
    }
  }
}

TEST_CASE("nearest_lane_tangent examples") {
  SUBCASE("axis-aligned lane") {
    hdmap::LaneGraph g;
    g.lanes.push_back({{-10, 0, 0}, {0, 0, 0}, {10, 0, 0}});
    const auto t = hdmap::nearest_lane_tangent(g, {3, 0.5});
    CHECK(t.direction.isApprox(Vec2(1, 0)));
    CHECK(t.distance == doctest::Approx(0.5));
  }

  SUBCASE("query on the lane") {
    hdmap::LaneGraph g;
    g.lanes.push_back({{0, -5, 0}, {0, 5, 0}});
    const auto t = hdmap::nearest_lane_tangent(g, {0, 1});
    CHECK(t.direction.isApprox(Vec2(0, 1)));
    CHECK(t.distance == doctest::Approx(0.0));
  }

  SUBCASE("second segment wins") {
    hdmap::LaneGraph g;
    g.lanes.push_back({{0, 0, 0}, {10, 0, 0}, {10, 10, 0}});
    const auto t = hdmap::nearest_lane_tangent(g, {11, 4});
    CHECK(t.direction.isApprox(Vec2(0, 1)));
    CHECK(t.distance == doctest::Approx(1.0));
  }

  SUBCASE("empty graph") {
    CHECK_THROWS_AS(hdmap::nearest_lane_tangent({}, {0, 0}), EmptyMap);
  }

  SUBCASE("equidistant lanes pick the lowest lane index") {
    hdmap::LaneGraph g;
    g.lanes.push_back({{0, 1, 0}, {10, 1, 0}});    // above the query
    g.lanes.push_back({{0, -1, 0}, {10, -1, 0}});  // below, same distance
    const auto t = hdmap::nearest_lane_tangent(g, {5, 0});
    CHECK(t.distance == doctest::Approx(1.0));
    CHECK(t.direction.isApprox(Vec2(1, 0)));  // both point +x; lane 0 chosen
  }
}

TEST_CASE("lane index matches brute force on random polylines") {
  oracles::Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    hdmap::LaneGraph g;
    const int lanes = 1 + rng.uniform_int(5);
    for (int li = 0; li < lanes; ++li) {
      std::vector<Vec3> lane;
      Vec2 cur(rng.uniform(-40, 40), rng.uniform(-40, 40));
      double heading = rng.uniform(-3.1, 3.1);
      const int pts = 2 + rng.uniform_int(20);
      for (int i = 0; i < pts; ++i) {
        lane.emplace_back(cur.x(), cur.y(), 0.0);
        heading += rng.uniform(-0.5, 0.5);
        cur += Vec2(std::cos(heading), std::sin(heading)) *
               rng.uniform(0.5, 6.0);
      }
      g.lanes.push_back(std::move(lane));
    }
    const hdmap::LaneIndex index(g);
    for (int q = 0; q < 40; ++q) {
      // Mix of near-road and far-outside queries.
      const double spread = q % 4 == 0 ? 300.0 : 50.0;
      const Vec2 p(rng.uniform(-spread, spread), rng.uniform(-spread, spread));
      const auto got = index.nearest_tangent(p);
      const BruteBest expected = brute_nearest(g, p);
      CHECK(got.distance == doctest::Approx(expected.dist).epsilon(1e-12));
      CHECK((got.direction - expected.dir).norm() < 1e-12);

      // Densely resampled polyline oracle on the distance itself.
      double resampled = 1e18;
      for (const auto& lane : g.lanes)
        for (size_t si = 0; si + 1 < lane.size(); ++si) {
          const Vec2 a = lane[si].head<2>(), b = lane[si + 1].head<2>();
          const double len = (b - a).norm();
          const int steps = std::max(1, static_cast<int>(len / 0.01));
          for (int s = 0; s <= steps; ++s)
            resampled = std::min(
                resampled,
                (p - (a + (static_cast<double>(s) / steps) * (b - a))).norm());
        }
      CHECK(std::abs(got.distance - resampled) < 0.02);
    }
  }
}

TEST_CASE("lane graph validation") {
  hdmap::LaneGraph short_lane;
  short_lane.lanes.push_back({{0, 0, 0}});
  CHECK_THROWS(hdmap::validate(short_lane));

  hdmap::LaneGraph dup;
  dup.lanes.push_back({{0, 0, 0}, {0, 0, 0}});
  CHECK_THROWS(hdmap::validate(dup));

  hdmap::LaneGraph ok;
  ok.lanes.push_back({{0, 0, 0}, {1, 0, 0}});
  CHECK_NOTHROW(hdmap::validate(ok));
}
