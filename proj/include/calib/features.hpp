#ifndef CALIB_FEATURES_HPP
#define CALIB_FEATURES_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "calib/geometry.hpp"

namespace calib {

// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int u, int v) const {
    return data[static_cast<std::size_t>(v) * width + u];
  }
  std::uint8_t& at(int u, int v) {
    return data[static_cast<std::size_t>(v) * width + u];
  }
  ImageSize size() const { return {width, height}; }
};

// 2-D feature points (u, v) in pixels. `weights` is either empty or parallel
// to `points` with values in [0, 1].
struct EdgePointSet {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Sobel gradient-magnitude edge detector. Returns interior pixels whose
// 3x3 Sobel response sqrt(Gx^2 + Gy^2) strictly exceeds `threshold`, in
// row-major order.
inline EdgePointSet extract_image_edges(const GrayImage& img,
                                        double threshold) {
  if (threshold <= 0.0) {
    throw std::invalid_argument("extract_image_edges: threshold must be > 0");
  }
  if (img.width < 3 || img.height < 3) {
    throw std::invalid_argument("extract_image_edges: image smaller than 3x3");
  }
  EdgePointSet out;
  for (int v = 1; v < img.height - 1; ++v) {
    for (int u = 1; u < img.width - 1; ++u) {
      const double tl = img.at(u - 1, v - 1), tc = img.at(u, v - 1),
                   tr = img.at(u + 1, v - 1);
      const double ml = img.at(u - 1, v), mr = img.at(u + 1, v);
      const double bl = img.at(u - 1, v + 1), bc = img.at(u, v + 1),
                   br = img.at(u + 1, v + 1);
      const double gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      const double gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
      if (std::sqrt(gx * gx + gy * gy) > threshold) {
        out.points.emplace_back(static_cast<double>(u),
                                static_cast<double>(v));
      }
    }
  }
  return out;
}

// Depth-discontinuity features on a projected scan: whenever the camera depth
// changes by more than `depth_gap` meters between consecutive points in scan
// order, both points flanking the jump are reported (once each, in order).
inline EdgePointSet extract_lidar_edges(const ProjectedPointSet& projected,
                                        double depth_gap) {
  if (!(depth_gap > 0.0)) {
    throw std::invalid_argument("extract_lidar_edges: depth_gap must be > 0");
  }
  EdgePointSet out;
  if (projected.size() < 2) return out;
  std::vector<char> is_edge(projected.size(), 0);
  for (std::size_t i = 1; i < projected.size(); ++i) {
    if (std::abs(projected[i].depth - projected[i - 1].depth) > depth_gap) {
      is_edge[i - 1] = 1;
      is_edge[i] = 1;
    }
  }
  for (std::size_t i = 0; i < projected.size(); ++i) {
    if (is_edge[i]) out.points.emplace_back(projected[i].u, projected[i].v);
  }
  return out;
}

// Pixels at or above `threshold` luminance, weighted by luminance / 255.
inline EdgePointSet extract_intensity_points(const GrayImage& img,
                                             double threshold) {
  if (threshold < 0.0 || threshold > 255.0) {
    throw std::invalid_argument(
        "extract_intensity_points: threshold outside [0, 255]");
  }
  EdgePointSet out;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double lum = img.at(u, v);
      if (lum >= threshold) {
        out.points.emplace_back(static_cast<double>(u),
                                static_cast<double>(v));
        out.weights.push_back(lum / 255.0);
      }
    }
  }
  return out;
}

// Alternative intensity-feature source: projected LiDAR returns at or above
// `threshold` (in [0, 1]), weighted by the return intensity.
inline EdgePointSet extract_lidar_intensity_points(
    const ProjectedPointSet& projected, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument(
        "extract_lidar_intensity_points: threshold outside [0, 1]");
  }
  EdgePointSet out;
  for (const ProjectedPoint& p : projected) {
    if (p.intensity >= threshold) {
      out.points.emplace_back(p.u, p.v);
      out.weights.push_back(p.intensity);
    }
  }
  return out;
}

}  // namespace calib

#endif  // CALIB_FEATURES_HPP
