#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mine3d/errors.hpp"
#include "mine3d/inflate.hpp"
#include "oracles.hpp"

using namespace mine3d;
using geom::Cuboid;
using geom::Vec2;
using geom::Vec3;

namespace {
constexpr double kPi = 3.14159265358979323846;

ClassParams test_params(std::array<double, 3> clip, std::array<double, 3> prior) {
  ClassParams p;
  p.name = "test";
  p.clip = clip;
  p.prior = prior;
  return p;
}
}  // namespace

TEST_CASE("seed_point") {
  CHECK_THROWS_AS(inflate::seed_point({}), EmptyInput);
  CHECK(inflate::seed_point({{2, 3, 4}}).isApprox(Vec3(2, 3, 4)));
  CHECK(inflate::seed_point({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}})
            .norm() < 1e-9);

  oracles::Rng rng(61);
  const auto cloud = oracles::random_cloud(rng, 30);
  const Vec3 got = inflate::seed_point(cloud);
  const Vec3 expected = oracles::grid_search_median(cloud);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(got[i] - expected[i]) < 5e-3);
}

TEST_CASE("orient_by_map") {
  SUBCASE("axis-aligned and diagonal lanes") {
    hdmap::LaneGraph gx;
    gx.lanes.push_back({{-10, 0, 0}, {10, 0, 0}});
    const hdmap::LaneIndex ix(gx);
    CHECK(*inflate::orient_by_map({2, 1, 0}, ix, 10.0) ==
          doctest::Approx(0.0));

    hdmap::LaneGraph gy;
    gy.lanes.push_back({{0, -10, 0}, {0, 10, 0}});
    const hdmap::LaneIndex iy(gy);
    CHECK(*inflate::orient_by_map({1, 2, 0}, iy, 10.0) ==
          doctest::Approx(kPi / 2));

    hdmap::LaneGraph gd;
    gd.lanes.push_back({{0, 0, 0}, {10, 10, 0}});
    const hdmap::LaneIndex id(gd);
    CHECK(*inflate::orient_by_map({5, 5.5, 0}, id, 10.0) ==
          doctest::Approx(kPi / 4).epsilon(1e-9));
  }

  SUBCASE("lane beyond max distance") {
    hdmap::LaneGraph g;
    g.lanes.push_back({{-10, 50, 0}, {10, 50, 0}});
    const hdmap::LaneIndex idx(g);
    CHECK(!inflate::orient_by_map({0, 0, 0}, idx, 10.0).has_value());
    CHECK(inflate::orient_by_map({0, 41, 0}, idx, 10.0).has_value());
  }

  SUBCASE("empty graph propagates") {
    const hdmap::LaneIndex idx{hdmap::LaneGraph{}};
    CHECK_THROWS_AS(inflate::orient_by_map({0, 0, 0}, idx, 10.0), EmptyMap);
  }
}

TEST_CASE("orient_by_calipers") {
  SUBCASE("axis-aligned 4x2 rectangle") {
    const std::vector<Vec2> rect = {{-2, -1}, {2, -1}, {2, 1}, {-2, 1}};
    CHECK(inflate::orient_by_calipers(rect) == doctest::Approx(0.0));
  }

  SUBCASE("rotated by 60 degrees") {
    const double a = kPi / 3;
    const double c = std::cos(a), s = std::sin(a);
    std::vector<Vec2> pts;
    for (const Vec2& p :
         {Vec2(-2, -1), Vec2(2, -1), Vec2(2, 1), Vec2(-2, 1)})
      pts.emplace_back(c * p.x() - s * p.y(), s * p.x() + c * p.y());
    const double got = inflate::orient_by_calipers(pts);
    CHECK(got > -kPi / 2);
    CHECK(got <= kPi / 2);
    CHECK(std::abs(std::remainder(got - a, kPi)) < 1e-9);
  }

  SUBCASE("square tie-break picks the lowest angle") {
    const std::vector<Vec2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(inflate::orient_by_calipers(sq) == doctest::Approx(0.0));
  }

  SUBCASE("empty input") {
    CHECK_THROWS_AS(inflate::orient_by_calipers({}), EmptyInput);
  }
}

TEST_CASE("clip_instance") {
  const ClassParams params = test_params({2, 1, 3}, {4, 2, 2});

  SUBCASE("axis-aligned thresholds") {
    const geom::PointCloud cloud = {
        {1.5, 0.5, 1},  // kept
        {2.5, 0.0, 1},  // outside heading clip
        {0.0, 0.0, 4},  // above the height cap
        {0.0, 1.5, 1},  // outside cross clip
        {0.0, 0.0, -0.1},  // slightly under ground: kept
        {0.0, 0.0, -0.3},  // too far under ground
    };
    const auto out =
        inflate::clip_instance(cloud, {0, 0, 0}, 0.0, params, 0.0);
    REQUIRE(out.size() == 2);
    CHECK(out[0].x() == 1.5);
    CHECK(out[1].z() == -0.1);
  }

  SUBCASE("rotated frame") {
    // At yaw pi/2 the heading axis is +y: (0.5, 1.5, 1) has axis1 = 1.5
    // (within 2) and axis2 = -0.5 (within 1).
    const geom::PointCloud cloud = {{0.5, 1.5, 1}};
    const auto out =
        inflate::clip_instance(cloud, {0, 0, 0}, kPi / 2, params, 0.0);
    CHECK(out.size() == 1);
  }

  SUBCASE("empty cloud") {
    CHECK(inflate::clip_instance({}, {0, 0, 0}, 0.0, params, 0.0).empty());
  }

  SUBCASE("subset and joint translation invariance") {
    oracles::Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      geom::PointCloud cloud;
      for (int i = 0; i < 100; ++i)
        cloud.emplace_back(rng.uniform(-4, 4), rng.uniform(-4, 4),
                           rng.uniform(-1, 4));
      const Vec3 seed(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0);
      const double theta = rng.uniform(-kPi, kPi);
      const double ground = rng.uniform(-0.5, 0.5);
      const auto base =
          inflate::clip_instance(cloud, seed, theta, params, ground);
      CHECK(base.size() <= cloud.size());

      const Vec3 t(rng.uniform(-30, 30), rng.uniform(-30, 30), 0.0);
      geom::PointCloud moved;
      for (const Vec3& p : cloud) moved.push_back(p + t);
      const auto shifted =
          inflate::clip_instance(moved, seed + t, theta, params, ground);
      REQUIRE(shifted.size() == base.size());
      for (size_t i = 0; i < base.size(); ++i)
        CHECK((shifted[i] - (base[i] + t)).norm() < 1e-9);
    }
  }
}

TEST_CASE("initial_cuboid") {
  CHECK_THROWS_AS(inflate::initial_cuboid({}, 0.0, 0.0), EmptyInput);

  SUBCASE("exact box fit") {
    geom::PointCloud s;
    for (double u : {-2.0, 2.0})
      for (double v : {-1.0, 1.0})
        for (double z : {0.0, 1.5}) s.emplace_back(u + 5, v + 3, z);
    const Cuboid c = inflate::initial_cuboid(s, 0.0, 0.0);
    CHECK(c.l == doctest::Approx(4.0));
    CHECK(c.w == doctest::Approx(2.0));
    CHECK(c.h == doctest::Approx(1.5));
    CHECK(c.x == doctest::Approx(5.0));
    CHECK(c.y == doctest::Approx(3.0));
    CHECK(c.z == doctest::Approx(0.75));
  }

  SUBCASE("bottom snaps to the ground") {
    const geom::PointCloud s = {{0, 0, 0.4}, {1, 0, 1.0}, {0, 0.5, 0.8}};
    const Cuboid c = inflate::initial_cuboid(s, 0.0, 0.0);
    CHECK(c.h == doctest::Approx(1.0));  // top 1.0 down to ground 0
    CHECK(c.z == doctest::Approx(0.5));
  }

  SUBCASE("rotated fit matches a rotated oracle") {
    const double theta = kPi / 3;
    const double ct = std::cos(theta), st = std::sin(theta);
    geom::PointCloud s;
    for (double u : {-2.0, 2.0})
      for (double v : {-1.0, 1.0})
        for (double z : {0.0, 1.5})
          s.emplace_back(10 + u * ct - v * st, -4 + u * st + v * ct, z);
    const Cuboid c = inflate::initial_cuboid(s, theta, 0.0);
    CHECK(c.l == doctest::Approx(4.0));
    CHECK(c.w == doctest::Approx(2.0));
    CHECK(c.h == doctest::Approx(1.5));
    CHECK(c.x == doctest::Approx(10.0));
    CHECK(c.y == doctest::Approx(-4.0));
    CHECK(c.theta == doctest::Approx(theta));
  }
}

TEST_CASE("amodal_complete") {
  SUBCASE("short observation grows away from the ego") {
    const ClassParams params = test_params({3, 1.5, 2.5}, {4.5, 1.9, 1.7});
    Cuboid c;
    c.x = 10;
    c.y = 0;
    c.z = 0.6;
    c.l = 2.0;
    c.w = 1.9;
    c.h = 1.2;
    c.theta = 0;
    const Cuboid out = inflate::amodal_complete(c, {0, 0}, params, 0.0);
    CHECK(out.l == doctest::Approx(4.5));
    // Near face x=9 unmoved; far face pushed from 11 to 13.5.
    CHECK(out.x - 0.5 * out.l == doctest::Approx(9.0));
    CHECK(out.x + 0.5 * out.l == doctest::Approx(13.5));
    CHECK(out.w == doctest::Approx(1.9));
  }

  SUBCASE("larger observation is kept") {
    const ClassParams params = test_params({3, 1.5, 2.5}, {4.5, 1.9, 1.7});
    Cuboid c;
    c.x = 10;
    c.y = 0;
    c.z = 0.85;
    c.l = 5.0;
    c.w = 2.0;
    c.h = 1.7;
    c.theta = 0;
    const Cuboid out = inflate::amodal_complete(c, {0, 0}, params, 0.0);
    CHECK(out.l == doctest::Approx(5.0));
    CHECK(out.w == doctest::Approx(2.0));
    CHECK(out.x == doctest::Approx(10.0));
  }

  SUBCASE("vertical anchor holds the bottom") {
    const ClassParams params = test_params({3, 1.5, 2.5}, {4.5, 1.9, 1.6});
    Cuboid c;
    c.x = 8;
    c.y = 2;
    c.z = 0.6;  // bottom 0, top 1.2
    c.l = 4.5;
    c.w = 1.9;
    c.h = 1.2;
    c.theta = 0.4;
    const Cuboid out = inflate::amodal_complete(c, {0, 0}, params, 0.0);
    CHECK(out.h == doctest::Approx(1.6));
    CHECK(out.z - 0.5 * out.h == doctest::Approx(0.0));  // bottom unmoved
    CHECK(out.z == doctest::Approx(0.8));
  }

  SUBCASE("ego-nearest vertex never moves, extents never shrink") {
    oracles::Rng rng(83);
    for (int trial = 0; trial < 200; ++trial) {
      const Cuboid c = oracles::random_cuboid(rng, 20.0);
      const Vec2 ego(rng.uniform(-30, 30), rng.uniform(-30, 30));
      const ClassParams params = test_params(
          {3, 1.5, 2.5}, {rng.uniform(0.5, 8), rng.uniform(0.5, 4),
                          rng.uniform(0.5, 3)});
      const Cuboid out =
          inflate::amodal_complete(c, ego, params, c.z - 0.5 * c.h);

      CHECK(out.l == doctest::Approx(std::max(c.l, params.prior[0])));
      CHECK(out.w == doctest::Approx(std::max(c.w, params.prior[1])));
      CHECK(out.h == doctest::Approx(std::max(c.h, params.prior[2])));
      CHECK(out.theta == c.theta);

      const auto before = geom::cuboid_bev_corners(c);
      const auto after = geom::cuboid_bev_corners(out);
      double best = 1e18;
      Vec2 nearest;
      for (const Vec2& v : before) {
        const double d = (v - ego).norm();
        if (d < best) {
          best = d;
          nearest = v;
        }
      }
      double moved = 1e18;
      for (const Vec2& v : after) moved = std::min(moved, (v - nearest).norm());
      CHECK(moved < 1e-9);
    }
  }
}

TEST_CASE("score is the identity") {
  CHECK(inflate::score(0.9) == 0.9);
  CHECK(inflate::score(0.0) == 0.0);
  CHECK(inflate::score(1.0) == 1.0);
}

TEST_CASE("nms_bev") {
  auto make = [](double x, double conf, int cls = 0) {
    inflate::MinedCuboid m;
    m.cuboid = {x, 0, 1, 2, 4, 1.5, 0};
    m.class_id = cls;
    m.confidence = conf;
    return m;
  };

  SUBCASE("single candidate is kept") {
    CHECK(inflate::nms_bev({make(0, 0.5)}, 0.3).size() == 1);
  }

  SUBCASE("identical pair keeps the stronger") {
    const auto out = inflate::nms_bev({make(0, 0.8), make(0, 0.9)}, 0.5);
    REQUIRE(out.size() == 1);
    CHECK(out[0].confidence == 0.9);
  }

  SUBCASE("chain A-B-C keeps the ends") {
    // A at 0, B at 1.6 (IoU ~0.43 with both ends), C at 3.2 (disjoint from A).
    const auto out = inflate::nms_bev(
        {make(0, 0.9), make(1.6, 0.8), make(3.2, 0.7)}, 0.3);
    REQUIRE(out.size() == 2);
    CHECK(out[0].cuboid.x == 0);
    CHECK(out[1].cuboid.x == 3.2);
  }

  SUBCASE("cross-class pairs never suppress") {
    const auto out = inflate::nms_bev({make(0, 0.9, 0), make(0, 0.8, 1)}, 0.3);
    CHECK(out.size() == 2);
  }

  SUBCASE("idempotence and pairwise separation") {
    oracles::Rng rng(67);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<inflate::MinedCuboid> cands;
      const int n = 1 + rng.uniform_int(20);
      for (int i = 0; i < n; ++i) {
        inflate::MinedCuboid m;
        m.cuboid = oracles::random_cuboid(rng, 6.0);
        m.class_id = rng.uniform_int(3);
        m.confidence = rng.uniform(0.1, 1.0);
        cands.push_back(m);
      }
      const auto once = inflate::nms_bev(cands, 0.3);
      const auto twice = inflate::nms_bev(once, 0.3);
      REQUIRE(once.size() == twice.size());
      for (size_t i = 0; i < once.size(); ++i)
        CHECK(once[i].cuboid.x == twice[i].cuboid.x);
      for (size_t i = 0; i < once.size(); ++i)
        for (size_t j = i + 1; j < once.size(); ++j)
          if (once[i].class_id == once[j].class_id)
            CHECK(geom::bev_iou(once[i].cuboid, once[j].cuboid) < 0.3);
    }
  }
}

TEST_CASE("apply_confidence_policy") {
  std::vector<ClassParams> classes = {test_params({1, 1, 1}, {1, 1, 1})};
  classes[0].conf_threshold = 0.7;

  auto mk = [](double conf, int cls) {
    inflate::MinedCuboid m;
    m.cuboid = {0, 0, 1, 1, 2, 1, 0};
    m.class_id = cls;
    m.confidence = conf;
    return m;
  };

  const auto out = inflate::apply_confidence_policy(
      {mk(0.8, 0), mk(0.6, 0), mk(0.7, 0)}, classes);
  REQUIRE(out.size() == 3);
  CHECK(!out[0].dont_care);
  CHECK(out[1].dont_care);
  CHECK(!out[2].dont_care);  // strict less-than: equality keeps it live

  CHECK_THROWS_AS(inflate::apply_confidence_policy({mk(0.5, 3)}, classes),
                  UnknownClass);
}
