#ifndef CALIB_SYNTHETIC_HPP
#define CALIB_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "calib/data.hpp"
#include "calib/features.hpp"
#include "calib/geometry.hpp"
#include "calib/problem.hpp"
#include "calib/rng.hpp"

namespace calib {

// Axis-aligned rectangle facing the camera at constant camera-frame depth z,
// centered at (cx, cy) meters, painted with one luminance and returning one
// LiDAR reflectance.
struct SurfaceRect {
  double cx = 0.0;
  double cy = 0.0;
  double half_w = 0.0;
  double half_h = 0.0;
  double z = 0.0;
  std::uint8_t luminance = 128;
  double reflectance = 0.5;
};

struct SyntheticLayout {
  CameraIntrinsics intrinsics{700.0, 700.0, 600.0, 180.0};
  ImageSize image_size{1200, 360};
  std::uint8_t background_luminance = 25;
  int rays_u = 240;
  int rays_v = 48;
  // Per-ray jitter as a fraction of one ray-grid cell.
  double jitter = 0.35;
  std::vector<SurfaceRect> surfaces;

  // A far wall filling the frustum plus tall narrow stripes at several
  // depths and lateral offsets. Stripe scenes keep the ground-truth edges
  // close to the scan-order depth features (which mark vertical borders),
  // and the lateral spread across depths pins every transform axis. Two
  // stripes (230 and 250) sit above the default intensity threshold; each
  // bright stripe has a darker twin nearby, so edge-only matching admits an
  // aliased alignment that the intensity term rules out.
  static SyntheticLayout default_layout() {
    SyntheticLayout layout;
    layout.surfaces = {
        {0.0, 0.0, 13.0, 4.4, 14.0, 60, 0.15},       // back wall
        {-1.8, 0.0, 0.11, 1.85, 6.0, 190, 0.70},     // full-height stripe L
        {2.1, 0.0, 0.13, 2.80, 9.0, 120, 0.40},      // full-height stripe R
        {-0.35, -0.25, 0.045, 0.60, 3.5, 250, 0.95}, // near bright stripe
        {-0.75, -0.1, 0.045, 0.50, 3.5, 140, 0.50},  // its dark twin
        {1.1, 0.35, 0.14, 1.00, 11.0, 90, 0.30},     // far stripe
    };
    return layout;
  }

  // A single wall smaller than the frustum; its outline is the only edge.
  static SyntheticLayout single_wall() {
    SyntheticLayout layout;
    layout.surfaces = {{0.0, 0.0, 4.0, 1.5, 10.0, 200, 0.8}};
    return layout;
  }

  static SyntheticLayout named(const std::string& name) {
    if (name == "default") return default_layout();
    if (name == "wall") return single_wall();
    throw std::invalid_argument("unknown layout '" + name +
                                "' (expected 'default' or 'wall')");
  }
};

namespace detail {

// Projected pixel-rectangle of a surface, clipped to the image; empty when
// the surface is outside the frustum.
struct PixelRect {
  int u0 = 0, u1 = -1, v0 = 0, v1 = -1;
  bool empty() const { return u1 < u0 || v1 < v0; }
};

inline PixelRect project_surface(const SurfaceRect& s,
                                 const CameraIntrinsics& k,
                                 const ImageSize& size) {
  PixelRect r;
  if (s.z <= 0.0) return r;
  const double ul = k.fx * (s.cx - s.half_w) / s.z + k.u0;
  const double uh = k.fx * (s.cx + s.half_w) / s.z + k.u0;
  const double vl = k.fy * (s.cy - s.half_h) / s.z + k.v0;
  const double vh = k.fy * (s.cy + s.half_h) / s.z + k.v0;
  r.u0 = std::max(0, static_cast<int>(std::ceil(ul)));
  r.u1 = std::min(size.width - 1, static_cast<int>(std::floor(uh)));
  r.v0 = std::max(0, static_cast<int>(std::ceil(vl)));
  r.v1 = std::min(size.height - 1, static_cast<int>(std::floor(vh)));
  return r;
}

}  // namespace detail

// Renders the layout into an image (far-to-near painter fill) and samples a
// LiDAR scan by ray casting a jittered raster grid through the image plane,
// so depth discontinuities fall exactly on surface borders. The cloud is
// expressed in the LiDAR frame via the inverse of `true_extrinsics`;
// projecting it back with the true transform reproduces the image geometry.
inline CalibrationScene generate_synthetic_scene(
    std::uint64_t seed, const SyntheticLayout& layout,
    const RigidTransform& true_extrinsics,
    const FeatureThresholds& thresholds = {}) {
  if (layout.surfaces.empty()) {
    throw std::invalid_argument("generate_synthetic_scene: no surfaces");
  }
  const CameraIntrinsics& k = layout.intrinsics;
  const ImageSize size = layout.image_size;

  bool any_visible = false;
  for (const SurfaceRect& s : layout.surfaces) {
    if (!detail::project_surface(s, k, size).empty()) any_visible = true;
  }
  if (!any_visible) {
    throw std::invalid_argument(
        "generate_synthetic_scene: no surface in the camera frustum");
  }

  CalibrationScene scene;
  scene.intrinsics = k;
  scene.ground_truth = true_extrinsics;

  // Image: far to near so nearer surfaces overpaint.
  std::vector<const SurfaceRect*> by_depth;
  for (const SurfaceRect& s : layout.surfaces) by_depth.push_back(&s);
  std::stable_sort(by_depth.begin(), by_depth.end(),
                   [](const SurfaceRect* a, const SurfaceRect* b) {
                     return a->z > b->z;
                   });
  scene.image = GrayImage(size.width, size.height,
                          layout.background_luminance);
  for (const SurfaceRect* s : by_depth) {
    const detail::PixelRect r = detail::project_surface(*s, k, size);
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) scene.image.at(u, v) = s->luminance;
    }
  }

  // Cloud: raster scan of rays through the image plane, nearest surface wins.
  Rng rng(seed);
  const RigidTransform cam_to_lidar = inverse(true_extrinsics);
  const double cell_u =
      static_cast<double>(size.width) / std::max(1, layout.rays_u);
  const double cell_v =
      static_cast<double>(size.height) / std::max(1, layout.rays_v);
  for (int iv = 0; iv < layout.rays_v; ++iv) {
    for (int iu = 0; iu < layout.rays_u; ++iu) {
      const double ju = (rng.uniform() - 0.5) * layout.jitter;
      const double jv = (rng.uniform() - 0.5) * layout.jitter;
      const double u = (iu + 0.5 + ju) * cell_u;
      const double v = (iv + 0.5 + jv) * cell_v;
      const double dx = (u - k.u0) / k.fx;
      const double dy = (v - k.v0) / k.fy;
      const SurfaceRect* hit = nullptr;
      for (const SurfaceRect& s : layout.surfaces) {
        if (s.z <= 0.0) continue;
        if (hit && s.z >= hit->z) continue;
        if (std::abs(dx * s.z - s.cx) <= s.half_w &&
            std::abs(dy * s.z - s.cy) <= s.half_h) {
          hit = &s;
        }
      }
      if (!hit) continue;
      const Eigen::Vector3d p_cam(dx * hit->z, dy * hit->z, hit->z);
      scene.cloud.points.push_back(transform_point(cam_to_lidar, p_cam));
      scene.cloud.intensities.push_back(hit->reflectance);
    }
  }

  scene.gt_edges = extract_image_edges(scene.image, thresholds.edge);
  scene.gt_intensity =
      extract_intensity_points(scene.image, thresholds.intensity);
  return scene;
}

struct Decalibration {
  // truth composed with the perturbation.
  RigidTransform transform;
  // The perturbation itself, recorded for validation round trips.
  RigidTransform perturbation;
  EulerAngles applied_rotation;
  Eigen::Vector3d applied_translation = Eigen::Vector3d::Zero();
};

// Composes `truth` with a seeded random perturbation whose Euler-angle and
// translation components are L-inf normalized, so the largest rotation
// component is exactly rot_degrees and the largest translation component
// exactly trans_meters.
inline Decalibration decalibrate(const RigidTransform& truth,
                                 double rot_degrees, double trans_meters,
                                 std::uint64_t seed) {
  Rng rng(seed);
  auto draw_linf = [&rng](double magnitude) {
    Eigen::Vector3d d{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                      rng.uniform(-1.0, 1.0)};
    if (magnitude == 0.0) return Eigen::Vector3d::Zero().eval();
    int top = 0;
    d.cwiseAbs().maxCoeff(&top);
    if (d[top] == 0.0) d[top] = 1.0;
    const double scale = magnitude / std::abs(d[top]);
    Eigen::Vector3d out = d * scale;
    out[top] = d[top] > 0.0 ? magnitude : -magnitude;
    return out;
  };

  const Eigen::Vector3d rot = draw_linf(rot_degrees * kDegToRad);
  const Eigen::Vector3d trans = draw_linf(trans_meters);

  Decalibration dec;
  dec.applied_rotation = EulerAngles{rot[0], rot[1], rot[2]};
  dec.applied_translation = trans;
  dec.perturbation = make_transform(dec.applied_rotation, trans);
  dec.transform = compose(dec.perturbation, truth);
  return dec;
}

// Emits cloud/image/calib plus the JSON manifest for a scene into `dir`.
inline SceneManifest write_scene_files(const std::filesystem::path& dir,
                                       const CalibrationScene& scene,
                                       const FeatureThresholds& thresholds,
                                       IntensitySource source =
                                           IntensitySource::image,
                                       double lidar_intensity_threshold = 0.5) {
  std::filesystem::create_directories(dir);
  SceneManifest m;
  m.thresholds = thresholds;
  m.ground_truth = scene.ground_truth;
  m.intensity_source = source;
  m.lidar_intensity_threshold = lidar_intensity_threshold;
  save_pointcloud_kitti(dir / m.cloud_file, scene.cloud);
  save_image_pgm(dir / m.image_file, scene.image);
  save_calibration(dir / m.calib_file, scene.intrinsics, scene.ground_truth,
                   m.projection_key);
  save_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace calib

#endif  // CALIB_SYNTHETIC_HPP
