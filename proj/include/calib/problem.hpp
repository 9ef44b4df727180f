#ifndef CALIB_PROBLEM_HPP
#define CALIB_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "calib/features.hpp"
#include "calib/geometry.hpp"

namespace calib {

using Vector7d = Eigen::Matrix<double, 7, 1>;

// Decision vector X = [x, y, z, yaw, pitch, roll, n]. Translations in
// meters, angles in radians; n is the LiDAR sample count, kept real-valued
// during the search and rounded at decode time.
struct CalibrationVector {
  static constexpr int dim = 7;

  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double n = 0.0;

  double component(int i) const {
    switch (i) {
      case 0: return x;
      case 1: return y;
      case 2: return z;
      case 3: return yaw;
      case 4: return pitch;
      case 5: return roll;
      case 6: return n;
    }
    throw std::out_of_range("CalibrationVector::component");
  }

  double& component(int i) {
    switch (i) {
      case 0: return x;
      case 1: return y;
      case 2: return z;
      case 3: return yaw;
      case 4: return pitch;
      case 5: return roll;
      case 6: return n;
    }
    throw std::out_of_range("CalibrationVector::component");
  }

  Vector7d to_vector() const {
    Vector7d v;
    v << x, y, z, yaw, pitch, roll, n;
    return v;
  }

  static CalibrationVector from_vector(const Vector7d& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }

  EulerAngles angles() const { return {roll, pitch, yaw}; }
  Eigen::Vector3d translation() const { return {x, y, z}; }

  friend bool operator==(const CalibrationVector&,
                         const CalibrationVector&) = default;
};

// Per-dimension box bounds for the decision vector.
struct CalibrationBounds {
  Vector7d lower = Vector7d::Zero();
  Vector7d upper = Vector7d::Zero();

  // Defaults: translations within +/-1.5 m, rotations within +/-25 deg.
  static CalibrationBounds standard(long long n_min, long long n_max,
                                    double translation_limit = 1.5,
                                    double rotation_limit = 25.0 * kDegToRad) {
    if (n_min < 1 || n_min >= n_max) {
      throw std::invalid_argument(
          "CalibrationBounds: need 1 <= n_min < n_max");
    }
    if (translation_limit <= 0.0 || rotation_limit <= 0.0) {
      throw std::invalid_argument("CalibrationBounds: limits must be > 0");
    }
    CalibrationBounds b;
    b.lower << -translation_limit, -translation_limit, -translation_limit,
        -rotation_limit, -rotation_limit, -rotation_limit,
        static_cast<double>(n_min);
    b.upper << translation_limit, translation_limit, translation_limit,
        rotation_limit, rotation_limit, rotation_limit,
        static_cast<double>(n_max);
    return b;
  }

  long long n_min() const { return std::llround(lower[6]); }
  long long n_max() const { return std::llround(upper[6]); }

  bool contains(const CalibrationVector& v) const {
    for (int i = 0; i < CalibrationVector::dim; ++i) {
      if (v.component(i) < lower[i] || v.component(i) > upper[i]) return false;
    }
    return true;
  }
};

// One calibration instance: the fixed sensor data plus the ground-truth
// feature sets the objectives compare against. The optional ground-truth
// transform is for validation and rendering only; objective evaluation never
// reads it.
struct CalibrationScene {
  PointCloud cloud;
  GrayImage image;
  CameraIntrinsics intrinsics;
  EdgePointSet gt_edges;
  EdgePointSet gt_intensity;
  std::optional<RigidTransform> ground_truth;
};

// Clamp every component into its bound interval. Idempotent.
inline CalibrationVector repair(const CalibrationVector& v,
                                const CalibrationBounds& b) {
  CalibrationVector r = v;
  for (int i = 0; i < CalibrationVector::dim; ++i) {
    r.component(i) = std::clamp(r.component(i), b.lower[i], b.upper[i]);
  }
  return r;
}

struct DecodedVector {
  RigidTransform transform;
  long long n = 0;
};

inline DecodedVector decode(const CalibrationVector& v,
                            const CalibrationBounds& b) {
  DecodedVector d;
  d.transform = make_transform(v.angles(), v.translation());
  d.n = std::clamp(std::llround(v.n), b.n_min(), b.n_max());
  return d;
}

}  // namespace calib

#endif  // CALIB_PROBLEM_HPP
