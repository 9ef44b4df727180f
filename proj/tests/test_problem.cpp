#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "calib/problem.hpp"
#include "calib/rng.hpp"

using namespace calib;

TEST_CASE("decode of the zero vector is the identity transform") {
  const CalibrationBounds b = CalibrationBounds::standard(100, 1000);
  CalibrationVector x;
  x.n = 1000.0;
  const DecodedVector d = decode(x, b);
  CHECK(d.transform.rotation.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  CHECK(d.transform.translation == Eigen::Vector3d::Zero());
  CHECK(d.n == 1000);
}

TEST_CASE("decode arithmetic") {
  const CalibrationBounds b = CalibrationBounds::standard(100, 1000);
  CalibrationVector x;
  x.x = 0.1;
  x.n = 500.4;
  const DecodedVector d = decode(x, b);
  CHECK(d.transform.translation == Eigen::Vector3d(0.1, 0.0, 0.0));
  CHECK(d.transform.rotation.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  CHECK(d.n == 500);
}

TEST_CASE("decode rounds then clamps n") {
  const CalibrationBounds b = CalibrationBounds::standard(100, 1000);
  CalibrationVector x;
  x.n = 1000.49;
  CHECK(decode(x, b).n == 1000);
  x.n = 1000.51;  // rounds to 1001, clamped back
  CHECK(decode(x, b).n == 1000);
  x.n = 99.2;
  CHECK(decode(x, b).n == 100);
}

TEST_CASE("repair clamps into the paper bounds") {
  const CalibrationBounds b = CalibrationBounds::standard(100, 1000);

  CalibrationVector in_bounds;
  in_bounds.x = 0.7;
  in_bounds.yaw = 0.3;
  in_bounds.n = 400.0;
  CHECK(repair(in_bounds, b) == in_bounds);

  CalibrationVector out;
  out.x = 2.0;
  out.yaw = -30.0 * kDegToRad;
  out.n = 400.0;
  const CalibrationVector fixed = repair(out, b);
  CHECK(fixed.x == 1.5);
  CHECK(fixed.yaw == -25.0 * kDegToRad);
}

TEST_CASE("repair is idempotent and decode of repaired stays in bounds") {
  const CalibrationBounds b = CalibrationBounds::standard(100, 1000);
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    CalibrationVector v;
    for (int c = 0; c < CalibrationVector::dim; ++c) {
      v.component(c) = rng.uniform(-10.0, 10.0) *
                       (c == 6 ? 500.0 : 1.0);
    }
    const CalibrationVector once = repair(v, b);
    CHECK(repair(once, b) == once);
    CHECK(b.contains(once));
    const DecodedVector d = decode(once, b);
    CHECK(d.n >= b.n_min());
    CHECK(d.n <= b.n_max());
    CHECK(is_rigid(d.transform, 1e-9));
  }
}

TEST_CASE("bounds validation") {
  CHECK_THROWS_AS(CalibrationBounds::standard(0, 100), std::invalid_argument);
  CHECK_THROWS_AS(CalibrationBounds::standard(100, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(CalibrationBounds::standard(10, 100, -1.0),
                  std::invalid_argument);
  const CalibrationBounds b =
      CalibrationBounds::standard(100, 5000, 1.5, 0.1);
  CHECK(b.upper[3] == 0.1);
  CHECK(b.lower[5] == -0.1);
  CHECK(b.n_min() == 100);
  CHECK(b.n_max() == 5000);
}

TEST_CASE("component accessors round trip through vectors") {
  CalibrationVector v{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 123.0};
  CHECK(CalibrationVector::from_vector(v.to_vector()) == v);
  CHECK(v.component(0) == 0.1);
  CHECK(v.component(6) == 123.0);
  CHECK_THROWS_AS(v.component(7), std::out_of_range);
}
