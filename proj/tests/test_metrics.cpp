#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mine3d/errors.hpp"
#include "mine3d/metrics.hpp"
#include "oracles.hpp"

using namespace mine3d;
using geom::Cuboid;
using geom::Vec2;
using geom::Vec3;
using metrics::Box;

namespace {

constexpr double kPi = 3.14159265358979323846;

Box make_box(double x, double y, int cls, double conf = 1.0,
             double theta = 0.0) {
  Box b;
  b.cuboid = {x, y, 0.8, 1.9, 4.5, 1.6, theta};
  b.class_id = cls;
  b.confidence = conf;
  return b;
}

}  // namespace

TEST_CASE("filter_by_range") {
  const auto classes = RunConfig::defaults().classes;  // vehicle 50 m, ped 40 m
  const geom::Pose ego;

  const std::vector<Box> boxes = {
      make_box(49, 0, 0), make_box(51, 0, 0),   // vehicle
      make_box(0, 41, 3), make_box(0, 39, 3),   // pedestrian
      make_box(50, 0, 0),                       // exactly at range
  };
  const auto out = metrics::filter_by_range(boxes, classes, ego);
  REQUIRE(out.size() == 3);
  CHECK(out[0].cuboid.x == 49);
  CHECK(out[1].cuboid.y == 39);
  CHECK(out[2].cuboid.x == 50);  // <= keeps the boundary

  SUBCASE("range measured from the ego position") {
    const geom::Pose moved = geom::Pose::from_yaw(1.0, {100, 0, 0});
    const auto shifted =
        metrics::filter_by_range({make_box(51, 0, 0)}, classes, moved);
    CHECK(shifted.size() == 1);  // only 49 m from the moved ego
  }

  SUBCASE("unknown class id") {
    CHECK_THROWS_AS(
        metrics::filter_by_range({make_box(0, 0, 9)}, classes, ego),
        UnknownClass);
  }
}

TEST_CASE("match_predictions") {
  SUBCASE("identity match") {
    const std::vector<Box> gts = {make_box(0, 0, 0), make_box(10, 0, 0)};
    const auto res = metrics::match_predictions(gts, gts, 2.0);
    CHECK(res.matches.size() == 2);
    CHECK(res.unmatched_preds.empty());
    CHECK(res.unmatched_gts.empty());
  }

  SUBCASE("out of threshold") {
    const auto res = metrics::match_predictions({make_box(3, 0, 0)},
                                                {make_box(0, 0, 0)}, 2.0);
    CHECK(res.matches.empty());
    CHECK(res.unmatched_preds.size() == 1);
    CHECK(res.unmatched_gts.size() == 1);
  }

  SUBCASE("greedy by confidence, not by distance") {
    // The farther prediction has higher confidence and takes the only GT.
    const std::vector<Box> preds = {make_box(0.5, 0, 0, 0.7),
                                    make_box(1.0, 0, 0, 0.9)};
    const std::vector<Box> gts = {make_box(0, 0, 0)};
    const auto res = metrics::match_predictions(preds, gts, 2.0);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].first == 1);  // the 1.0 m / conf 0.9 prediction
    CHECK(res.unmatched_preds == std::vector<int>{0});
  }

  SUBCASE("distance ties pick the lowest gt index") {
    const std::vector<Box> gts = {make_box(0, 1, 0), make_box(0, -1, 0)};
    const auto res =
        metrics::match_predictions({make_box(0, 0, 0)}, gts, 2.0);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].second == 0);
  }
}

TEST_CASE("average_precision") {
  SUBCASE("perfect predictions") {
    const std::vector<Box> gts = {make_box(0, 0, 0), make_box(10, 0, 0),
                                  make_box(20, 0, 0)};
    CHECK(metrics::average_precision(gts, gts, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("no predictions") {
    CHECK(metrics::average_precision({}, {make_box(0, 0, 0)}, 2.0) == 0.0);
  }

  SUBCASE("hand-computed two-point curve") {
    // One TP (conf 0.9) then one FP (conf 0.8) over two GTs. Operating
    // points: (recall 0.5, precision 1.0), (0.5, 0.5). Interpolated
    // precision is 1.0 up to recall 0.5 and 0 beyond; clipped integrand is
    // 0.9 on [0.1, 0.5] plus half a grid cell, so
    // AP = (0.9*0.40 + 0.5*0.9*0.01) / (0.9*0.9) = 0.45.
    const std::vector<Box> preds = {make_box(0, 0, 0, 0.9),
                                    make_box(50, 50, 0, 0.8)};
    const std::vector<Box> gts = {make_box(0, 0, 0), make_box(10, 0, 0)};
    CHECK(metrics::average_precision(preds, gts, 2.0) ==
          doctest::Approx(0.45).epsilon(1e-12));
  }

  SUBCASE("monotone in the distance threshold") {
    oracles::Rng rng(3);
    std::vector<Box> preds, gts;
    for (int i = 0; i < 30; ++i) {
      gts.push_back(make_box(rng.uniform(-30, 30), rng.uniform(-30, 30), 0));
      preds.push_back(make_box(gts.back().cuboid.x + rng.uniform(-3, 3),
                               gts.back().cuboid.y + rng.uniform(-3, 3), 0,
                               rng.uniform(0.2, 1.0)));
    }
    double prev = 0.0;
    for (double thr : {0.5, 1.0, 2.0, 4.0}) {
      const double ap = metrics::average_precision(preds, gts, thr);
      CHECK(ap >= prev - 1e-12);
      prev = ap;
    }
  }

  SUBCASE("duplicated predictions cannot beat the original set") {
    oracles::Rng rng(5);
    std::vector<Box> preds, gts;
    for (int i = 0; i < 20; ++i) {
      gts.push_back(make_box(rng.uniform(-30, 30), rng.uniform(-30, 30), 0));
      preds.push_back(make_box(gts.back().cuboid.x + rng.uniform(-1, 1),
                               gts.back().cuboid.y + rng.uniform(-1, 1), 0,
                               rng.uniform(0.2, 1.0)));
    }
    std::vector<Box> doubled = preds;
    doubled.insert(doubled.end(), preds.begin(), preds.end());
    CHECK(metrics::average_precision(preds, gts, 2.0) + 1e-12 >=
          metrics::average_precision(doubled, gts, 2.0));
  }
}

TEST_CASE("tp_errors") {
  CHECK_THROWS_AS(metrics::tp_errors({}), NoTruePositives);

  SUBCASE("exact matches") {
    const Box b = make_box(3, 4, 0, 1.0, 0.5);
    const auto e = metrics::tp_errors({{b, b}});
    CHECK(e.ate == doctest::Approx(0.0));
    CHECK(e.ase == doctest::Approx(0.0));
    CHECK(e.aoe == doctest::Approx(0.0));
  }

  SUBCASE("scale error from the size triples") {
    Box pred = make_box(0, 0, 0);
    Box gt = make_box(0, 0, 0);
    pred.cuboid.w = 4;  // sizes (4,2,2) vs (4,2,1)
    pred.cuboid.l = 2;
    pred.cuboid.h = 2;
    gt.cuboid.w = 4;
    gt.cuboid.l = 2;
    gt.cuboid.h = 1;
    const auto e = metrics::tp_errors({{pred, gt}});
    CHECK(e.ase == doctest::Approx(0.5));  // inter 8, union 16
  }

  SUBCASE("pi flip costs pi") {
    Box pred = make_box(0, 0, 0, 1.0, kPi);
    Box gt = make_box(0, 0, 0, 1.0, 0.0);
    CHECK(metrics::tp_errors({{pred, gt}}).aoe == doctest::Approx(kPi));
  }
}

TEST_CASE("evaluate") {
  const RunConfig cfg = RunConfig::defaults();

  SUBCASE("identity gives perfect scores") {
    metrics::FrameEval fe;
    fe.gts = {make_box(5, 0, 0), make_box(-10, 3, 0), make_box(0, 20, 3)};
    fe.preds = fe.gts;
    const auto report = metrics::evaluate({fe}, cfg.classes, cfg.eval);
    CHECK(report.map == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.mate == doctest::Approx(0.0));
    CHECK(report.mase == doctest::Approx(0.0));
    CHECK(report.maoe == doctest::Approx(0.0));
  }

  SUBCASE("classes absent from both sides are skipped") {
    metrics::FrameEval fe;
    fe.gts = {make_box(5, 0, 0)};
    fe.preds = fe.gts;
    const auto report = metrics::evaluate({fe}, cfg.classes, cfg.eval);
    int evaluated = 0;
    for (const auto& cm : report.classes) evaluated += cm.evaluated;
    CHECK(evaluated == 1);
    CHECK(report.map == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("missed classes report worst-case errors") {
    metrics::FrameEval fe;
    fe.gts = {make_box(5, 0, 0)};
    const auto report = metrics::evaluate({fe}, cfg.classes, cfg.eval);
    const auto& vm = report.classes[0];
    CHECK(vm.evaluated);
    CHECK(vm.mean_ap == 0.0);
    CHECK(vm.ate == doctest::Approx(1.0));
    CHECK(vm.ase == doctest::Approx(1.0));
    CHECK(vm.aoe == doctest::Approx(kPi));
    CHECK(vm.fn == 1);
  }

  SUBCASE("dont_care predictions are excluded") {
    metrics::FrameEval fe;
    fe.gts = {make_box(5, 0, 0)};
    Box dc = make_box(30, 30, 0, 0.9);
    dc.dont_care = true;
    fe.preds = {make_box(5, 0, 0, 1.0), dc};
    const auto report = metrics::evaluate({fe}, cfg.classes, cfg.eval);
    CHECK(report.classes[0].fp == 0);
  }

  SUBCASE("matching never crosses frames") {
    metrics::FrameEval f1, f2;
    f1.gts = {make_box(5, 0, 0)};
    f2.preds = {make_box(5, 0, 0, 0.9)};  // same spot, different frame
    const auto report = metrics::evaluate({f1, f2}, cfg.classes, cfg.eval);
    CHECK(report.classes[0].tp == 0);
    CHECK(report.classes[0].fp == 1);
    CHECK(report.classes[0].fn == 1);
  }

  SUBCASE("invariant under a common rigid transform") {
    oracles::Rng rng(7);
    metrics::FrameEval fe;
    for (int i = 0; i < 15; ++i) {
      const Box gt = make_box(rng.uniform(-30, 30), rng.uniform(-30, 30),
                              rng.uniform_int(2) * 3, 1.0,
                              rng.uniform(-kPi, kPi));
      fe.gts.push_back(gt);
      Box pred = gt;
      pred.cuboid.x += rng.uniform(-1.5, 1.5);
      pred.cuboid.y += rng.uniform(-1.5, 1.5);
      pred.cuboid.theta += rng.uniform(-0.3, 0.3);
      pred.confidence = rng.uniform(0.3, 1.0);
      fe.preds.push_back(pred);
    }
    const auto base = metrics::evaluate({fe}, cfg.classes, cfg.eval);

    const double yaw = 1.1;
    const geom::Pose rigid = geom::Pose::from_yaw(yaw, {17, -23, 2});
    auto transform = [&](Box b) {
      const Vec3 c = rigid.apply({b.cuboid.x, b.cuboid.y, b.cuboid.z});
      b.cuboid.x = c.x();
      b.cuboid.y = c.y();
      b.cuboid.z = c.z();
      b.cuboid.theta = geom::wrap_angle(b.cuboid.theta + yaw);
      return b;
    };
    metrics::FrameEval moved;
    moved.ego = rigid.compose(fe.ego);
    for (const Box& b : fe.preds) moved.preds.push_back(transform(b));
    for (const Box& b : fe.gts) moved.gts.push_back(transform(b));
    const auto shifted = metrics::evaluate({moved}, cfg.classes, cfg.eval);

    CHECK(shifted.map == doctest::Approx(base.map).epsilon(1e-9));
    CHECK(shifted.mate == doctest::Approx(base.mate).epsilon(1e-9));
    CHECK(shifted.mase == doctest::Approx(base.mase).epsilon(1e-9));
    CHECK(shifted.maoe == doctest::Approx(base.maoe).epsilon(1e-9));
  }

  SUBCASE("flipping a fraction of yaws moves AOE by that fraction of pi") {
    metrics::FrameEval fe;
    const int n = 20;
    for (int i = 0; i < n; ++i)
      fe.gts.push_back(make_box(4.0 * i - 38, 0, 0, 1.0, 0.3));
    fe.preds = fe.gts;
    for (int i = 0; i < n / 4; ++i)  // flip a quarter of them
      fe.preds[i].cuboid.theta =
          geom::wrap_angle(fe.preds[i].cuboid.theta + kPi);
    const auto report = metrics::evaluate({fe}, cfg.classes, cfg.eval);
    CHECK(report.classes[0].aoe == doctest::Approx(0.25 * kPi).epsilon(1e-9));
  }
}
