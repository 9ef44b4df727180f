#ifndef CALIB_GEOMETRY_HPP
#define CALIB_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace calib {

inline constexpr double kDegToRad = M_PI / 180.0;
inline constexpr double kRadToDeg = 180.0 / M_PI;

// Points closer to the image plane than this are dropped before the
// perspective division.
inline constexpr double kMinCameraDepth = 1e-6;

// Rotation about X (roll), Y (pitch), Z (yaw), in radians.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

// Rigid LiDAR-to-camera transform: p_cam = rotation * p_lidar + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
};

// Pinhole intrinsics; all values in pixels.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

// 3-D points in the LiDAR frame with per-point return intensity in [0, 1].
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> intensities;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Continuous pixel location with the camera-frame depth it came from.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// A projected LiDAR point: pixel location, camera depth, source intensity.
// The sequence preserves cloud (scan) order.
struct ProjectedPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  double intensity = 0.0;
};

using ProjectedPointSet = std::vector<ProjectedPoint>;

// Per-pixel camera depth; pixels no point landed on hold no_data (+inf).
class DepthImage {
 public:
  static constexpr double no_data = std::numeric_limits<double>::infinity();

  DepthImage() = default;
  DepthImage(int width, int height)
      : width_(width), height_(height),
        depth_(static_cast<std::size_t>(width) * height, no_data) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int u, int v) const { return depth_[index(u, v)]; }
  double& at(int u, int v) { return depth_[index(u, v)]; }
  bool has_data(int u, int v) const { return std::isfinite(at(u, v)); }

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> depth_;
};

// Intrinsic Z-Y-X composition: R = Rz(yaw) * Ry(pitch) * Rx(roll). Any
// consistent Euler convention spans the same search space; this one is fixed
// project-wide.
inline Eigen::Matrix3d rotation_from_euler(const EulerAngles& angles) {
  if (!std::isfinite(angles.roll) || !std::isfinite(angles.pitch) ||
      !std::isfinite(angles.yaw)) {
    throw std::invalid_argument("rotation_from_euler: non-finite angle");
  }
  return (Eigen::AngleAxisd(angles.yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(angles.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(angles.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

inline RigidTransform make_transform(const EulerAngles& angles,
                                     const Eigen::Vector3d& translation) {
  return {rotation_from_euler(angles), translation};
}

inline Eigen::Vector3d transform_point(const RigidTransform& t,
                                       const Eigen::Vector3d& p) {
  if (!p.allFinite()) {
    throw std::invalid_argument("transform_point: non-finite point");
  }
  return t.rotation * p + t.translation;
}

inline RigidTransform inverse(const RigidTransform& t) {
  RigidTransform inv;
  inv.rotation = t.rotation.transpose();
  inv.translation = -(inv.rotation * t.translation);
  return inv;
}

// Composition: apply `b` first, then `a`.
inline RigidTransform compose(const RigidTransform& a,
                              const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

inline bool is_rigid(const RigidTransform& t, double tol = 1e-9) {
  const Eigen::Matrix3d gram = t.rotation.transpose() * t.rotation;
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(t.rotation.determinant() - 1.0) <= tol &&
         t.translation.allFinite();
}

inline PixelPoint project_to_pixel(const CameraIntrinsics& k,
                                   const Eigen::Vector3d& p_cam) {
  if (p_cam.z() <= 0.0) {
    throw std::invalid_argument("project_to_pixel: point behind camera");
  }
  const double inv_z = 1.0 / p_cam.z();
  return {k.fx * p_cam.x() * inv_z + k.u0, k.fy * p_cam.y() * inv_z + k.v0,
          p_cam.z()};
}

inline bool in_image(double u, double v, const ImageSize& size) {
  return u >= 0.0 && u < size.width && v >= 0.0 && v < size.height;
}

// Transforms every cloud point into the camera frame, drops points at or
// behind the image plane, projects the rest and drops those outside the
// image. Input order is preserved, so scan-order structure survives.
inline ProjectedPointSet project_cloud(const PointCloud& cloud,
                                       const RigidTransform& t,
                                       const CameraIntrinsics& k,
                                       const ImageSize& size) {
  ProjectedPointSet out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = t.rotation * cloud.points[i] + t.translation;
    if (p.z() <= kMinCameraDepth) continue;
    const double inv_z = 1.0 / p.z();
    const double u = k.fx * p.x() * inv_z + k.u0;
    const double v = k.fy * p.y() * inv_z + k.v0;
    if (!in_image(u, v, size)) continue;
    out.push_back({u, v, p.z(), cloud.intensities[i]});
  }
  return out;
}

// Rasterizes the cloud into a per-pixel depth buffer. Pixels are assigned by
// round-to-nearest; when several points land on one pixel the smallest
// camera depth wins.
inline DepthImage generate_depth_map(const PointCloud& cloud,
                                     const RigidTransform& t,
                                     const CameraIntrinsics& k,
                                     const ImageSize& size) {
  DepthImage depth(size.width, size.height);
  for (const Eigen::Vector3d& q : cloud.points) {
    const Eigen::Vector3d p = t.rotation * q + t.translation;
    if (p.z() <= kMinCameraDepth) continue;
    const double inv_z = 1.0 / p.z();
    const int u = static_cast<int>(std::lround(k.fx * p.x() * inv_z + k.u0));
    const int v = static_cast<int>(std::lround(k.fy * p.y() * inv_z + k.v0));
    if (u < 0 || u >= size.width || v < 0 || v >= size.height) continue;
    double& cell = depth.at(u, v);
    if (p.z() < cell) cell = p.z();
  }
  return depth;
}

}  // namespace calib

#endif  // CALIB_GEOMETRY_HPP
