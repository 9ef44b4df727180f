#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "calib/data.hpp"
#include "calib/objectives.hpp"
#include "calib/synthetic.hpp"

using namespace calib;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "calibmoo_data_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_bytes(const std::string& name,
                     const std::vector<std::uint8_t>& bytes) {
  const fs::path p = test_dir() / name;
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  return p;
}

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = test_dir() / name;
  std::ofstream f(p);
  f << text;
  return p;
}

std::vector<std::uint8_t> encode_floats(const std::vector<float>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto b = std::bit_cast<std::array<std::uint8_t, 4>>(values[i]);
    // bit_cast gives host order; re-emit explicitly little-endian.
    const std::uint32_t u = std::bit_cast<std::uint32_t>(values[i]);
    bytes[4 * i] = u & 0xff;
    bytes[4 * i + 1] = (u >> 8) & 0xff;
    bytes[4 * i + 2] = (u >> 16) & 0xff;
    bytes[4 * i + 3] = (u >> 24) & 0xff;
    (void)b;
  }
  return bytes;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("point cloud loader: empty, valid, malformed") {
  CHECK(load_pointcloud_kitti(write_bytes("empty.bin", {})).empty());

  const fs::path two = write_bytes(
      "two.bin", encode_floats({1, 2, 3, 0.5f, 4, 5, 6, 1.0f}));
  const PointCloud cloud = load_pointcloud_kitti(two);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0] == Eigen::Vector3d(1, 2, 3));
  CHECK(cloud.intensities[0] == 0.5);
  CHECK(cloud.points[1] == Eigen::Vector3d(4, 5, 6));
  CHECK(cloud.intensities[1] == 1.0);

  std::vector<std::uint8_t> bad(17, 0);
  CHECK_THROWS_WITH_AS(load_pointcloud_kitti(write_bytes("odd.bin", bad)),
                       doctest::Contains("byte offset 16"),
                       MalformedFileError);

  std::vector<float> nan_rec = {1, 2, 3, 0.5f,
                                std::numeric_limits<float>::quiet_NaN(), 0, 0,
                                0};
  CHECK_THROWS_WITH_AS(
      load_pointcloud_kitti(write_bytes("nan.bin", encode_floats(nan_rec))),
      doctest::Contains("point index 1"), MalformedFileError);
}

TEST_CASE("point cloud loader clamps reflectance") {
  const fs::path p =
      write_bytes("refl.bin", encode_floats({0, 0, 1, 3.0f}));
  CHECK(load_pointcloud_kitti(p).intensities[0] == 1.0);
}

TEST_CASE("point cloud save/load round trip is byte-identical") {
  const std::vector<std::uint8_t> original = encode_floats(
      {1.5f, -2.25f, 3.125f, 0.25f, 7.5f, 0.0f, -12.0f, 1.0f});
  const fs::path p = write_bytes("trip.bin", original);
  const PointCloud cloud = load_pointcloud_kitti(p);
  const fs::path q = test_dir() / "trip_out.bin";
  save_pointcloud_kitti(q, cloud);
  CHECK(read_bytes(q) == original);
}

TEST_CASE("calibration loader") {
  const fs::path good = write_text(
      "calib.txt", "P2: 700 0 600 0 0 700 180 0 0 0 1 0\n");
  const CalibrationFile calib = load_calibration(good);
  CHECK(calib.intrinsics.fx == 700.0);
  CHECK(calib.intrinsics.fy == 700.0);
  CHECK(calib.intrinsics.u0 == 600.0);
  CHECK(calib.intrinsics.v0 == 180.0);
  CHECK_FALSE(calib.velo_to_cam.has_value());

  const fs::path with_tr = write_text(
      "calib_tr.txt",
      "P2: 700 0 600 0 0 700 180 0 0 0 1 0\n"
      "Tr_velo_to_cam: 1 0 0 0.5 0 1 0 -0.1 0 0 1 0.2\n");
  const CalibrationFile full = load_calibration(with_tr);
  REQUIRE(full.velo_to_cam.has_value());
  CHECK(full.velo_to_cam->translation == Eigen::Vector3d(0.5, -0.1, 0.2));

  const fs::path short_line = write_text(
      "calib_short.txt", "P2: 700 0 600 0 0 700 180 0 0 0 1\n");
  CHECK_THROWS_WITH_AS(load_calibration(short_line),
                       doctest::Contains("11"), MalformedFileError);

  const fs::path missing = write_text("calib_missing.txt",
                                      "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK_THROWS_WITH_AS(load_calibration(missing), doctest::Contains("P2"),
                       MissingFieldError);
  // The same file parses when asked for its actual key.
  CHECK(load_calibration(missing, "P0").intrinsics.fx == 1.0);
}

TEST_CASE("pgm loader") {
  const fs::path tiny = write_bytes(
      "tiny.pgm", {'P', '5', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n',
                   0x80});
  const GrayImage img = load_image_pgm(tiny);
  CHECK(img.width == 1);
  CHECK(img.height == 1);
  CHECK(img.at(0, 0) == 128);

  const fs::path ascii = write_bytes(
      "ascii.pgm", {'P', '2', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n',
                    '9', '\n'});
  CHECK_THROWS_WITH_AS(load_image_pgm(ascii), doctest::Contains("P2"),
                       MalformedFileError);

  const fs::path truncated = write_bytes(
      "trunc.pgm", {'P', '5', '\n', '4', ' ', '4', '\n', '2', '5', '5', '\n',
                    1, 2, 3});
  CHECK_THROWS_WITH_AS(load_image_pgm(truncated),
                       doctest::Contains("truncated"), MalformedFileError);

  const fs::path maxval = write_bytes(
      "maxval.pgm", {'P', '5', '\n', '1', ' ', '1', '\n', '9', '9', '\n',
                     0x10});
  CHECK_THROWS_WITH_AS(load_image_pgm(maxval), doctest::Contains("maxval"),
                       MalformedFileError);

  // Comments in the header are skipped.
  const fs::path commented = write_bytes(
      "comment.pgm", {'P', '5', '\n', '#', ' ', 'x', '\n', '2', ' ', '1',
                      '\n', '2', '5', '5', '\n', 10, 20});
  const GrayImage c = load_image_pgm(commented);
  CHECK(c.width == 2);
  CHECK(c.at(1, 0) == 20);
}

TEST_CASE("image save/load round trip") {
  GrayImage img(7, 5, 0);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = static_cast<std::uint8_t>(i * 7);
  }
  const fs::path p = test_dir() / "round.pgm";
  save_image_pgm(p, img);
  const GrayImage back = load_image_pgm(p);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("synthetic scene is deterministic per seed") {
  const SyntheticLayout layout = SyntheticLayout::single_wall();
  const RigidTransform truth = RigidTransform::identity();
  const CalibrationScene a = generate_synthetic_scene(9, layout, truth);
  const CalibrationScene b = generate_synthetic_scene(9, layout, truth);
  REQUIRE(a.cloud.size() == b.cloud.size());
  for (std::size_t i = 0; i < a.cloud.size(); ++i) {
    CHECK(a.cloud.points[i] == b.cloud.points[i]);
  }
  CHECK(a.image.data == b.image.data);

  const CalibrationScene c = generate_synthetic_scene(10, layout, truth);
  bool different = a.cloud.size() != c.cloud.size();
  for (std::size_t i = 0; !different && i < a.cloud.size(); ++i) {
    different = a.cloud.points[i] != c.cloud.points[i];
  }
  CHECK(different);
}

TEST_CASE("single wall: image edges trace the projected outline") {
  const SyntheticLayout layout = SyntheticLayout::single_wall();
  const CalibrationScene scene =
      generate_synthetic_scene(4, layout, RigidTransform::identity());
  const SurfaceRect& wall = layout.surfaces[0];
  const CameraIntrinsics& k = layout.intrinsics;
  const double u_lo = k.fx * (wall.cx - wall.half_w) / wall.z + k.u0;
  const double u_hi = k.fx * (wall.cx + wall.half_w) / wall.z + k.u0;
  const double v_lo = k.fy * (wall.cy - wall.half_h) / wall.z + k.v0;
  const double v_hi = k.fy * (wall.cy + wall.half_h) / wall.z + k.v0;
  CHECK(!scene.gt_edges.empty());
  for (const Eigen::Vector2d& p : scene.gt_edges.points) {
    const bool on_vertical =
        (std::abs(p.x() - u_lo) <= 1.5 || std::abs(p.x() - u_hi) <= 1.5) &&
        p.y() >= v_lo - 1.5 && p.y() <= v_hi + 1.5;
    const bool on_horizontal =
        (std::abs(p.y() - v_lo) <= 1.5 || std::abs(p.y() - v_hi) <= 1.5) &&
        p.x() >= u_lo - 1.5 && p.x() <= u_hi + 1.5;
    CHECK((on_vertical || on_horizontal));
  }
}

TEST_CASE("scene generation validates the frustum") {
  SyntheticLayout layout = SyntheticLayout::single_wall();
  layout.surfaces[0].cx = 1000.0;  // far outside the image
  CHECK_THROWS_AS(
      generate_synthetic_scene(1, layout, RigidTransform::identity()),
      std::invalid_argument);
  layout.surfaces.clear();
  CHECK_THROWS_AS(
      generate_synthetic_scene(1, layout, RigidTransform::identity()),
      std::invalid_argument);
}

TEST_CASE("truth beats eight fixed large perturbations") {
  SyntheticLayout layout = SyntheticLayout::default_layout();
  layout.rays_u = 120;
  layout.rays_v = 48;
  const Decalibration dec =
      decalibrate(RigidTransform::identity(), 8.0, 0.4, 2);
  const CalibrationScene scene =
      generate_synthetic_scene(6, layout, dec.transform);
  const CalibrationBounds bounds = CalibrationBounds::standard(
      100, static_cast<long long>(scene.cloud.size()));
  EvaluatorOptions options;
  options.seed = 6;
  const Evaluator evaluator(scene, bounds, options);
  const double at_truth = evaluator.alignment_error_at(dec.transform);

  const double yaw10 = 10.0 * kDegToRad;
  const std::vector<RigidTransform> perturbations = {
      compose(make_transform({0, 0, yaw10}, {0, 0, 0}), dec.transform),
      compose(make_transform({0, 0, -yaw10}, {0, 0, 0}), dec.transform),
      compose(make_transform({yaw10, 0, 0}, {0, 0, 0}), dec.transform),
      compose(make_transform({0, yaw10, 0}, {0, 0, 0}), dec.transform),
      compose(make_transform({0, 0, 0}, {0.5, 0, 0}), dec.transform),
      compose(make_transform({0, 0, 0}, {-0.5, 0, 0}), dec.transform),
      compose(make_transform({0, 0, 0}, {0, 0.5, 0}), dec.transform),
      compose(make_transform({0, 0, 0}, {0, 0, 0.5}), dec.transform),
  };
  for (const RigidTransform& t : perturbations) {
    CHECK(at_truth < evaluator.alignment_error_at(t));
  }
}

TEST_CASE("decalibrate basics") {
  const RigidTransform truth =
      make_transform({0.05, -0.02, 0.1}, {0.3, -0.2, 0.1});

  const Decalibration none = decalibrate(truth, 0.0, 0.0, 5);
  CHECK(none.transform.rotation == truth.rotation);
  CHECK(none.transform.translation == truth.translation);

  const Decalibration bound = decalibrate(truth, 25.0, 1.5, 5);
  const double rot_limit = 25.0 * kDegToRad;
  const Eigen::Vector3d rot{bound.applied_rotation.roll,
                            bound.applied_rotation.pitch,
                            bound.applied_rotation.yaw};
  CHECK(rot.cwiseAbs().maxCoeff() == rot_limit);
  CHECK(bound.applied_translation.cwiseAbs().maxCoeff() == 1.5);

  // Undoing the recorded perturbation recovers the truth.
  const RigidTransform undone =
      compose(inverse(bound.perturbation), bound.transform);
  CHECK((undone.rotation - truth.rotation).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((undone.translation - truth.translation).cwiseAbs().maxCoeff() <=
        1e-9);

  // Same seed, same perturbation.
  const Decalibration again = decalibrate(truth, 25.0, 1.5, 5);
  CHECK(again.transform.rotation == bound.transform.rotation);
}

TEST_CASE("manifest save/load round trip and scene loading") {
  const fs::path dir = test_dir() / "scene";
  SyntheticLayout layout = SyntheticLayout::default_layout();
  layout.rays_u = 100;
  layout.rays_v = 40;
  const Decalibration dec =
      decalibrate(RigidTransform::identity(), 5.0, 0.25, 3);
  const CalibrationScene scene =
      generate_synthetic_scene(3, layout, dec.transform);
  const FeatureThresholds thresholds;
  write_scene_files(dir, scene, thresholds);

  const SceneManifest manifest = load_manifest(dir / "manifest.json");
  REQUIRE(manifest.ground_truth.has_value());
  CHECK((manifest.ground_truth->rotation - dec.transform.rotation)
            .cwiseAbs()
            .maxCoeff() <= 1e-15);

  const CalibrationScene loaded = load_scene(dir / "manifest.json");
  CHECK(loaded.image.data == scene.image.data);
  CHECK(loaded.cloud.size() == scene.cloud.size());
  CHECK(loaded.gt_edges.size() == scene.gt_edges.size());
  CHECK(loaded.gt_intensity.size() == scene.gt_intensity.size());
  REQUIRE(loaded.ground_truth.has_value());

  // Cloud round trip through the writer is byte-identical.
  const std::vector<std::uint8_t> bytes_before =
      read_bytes(dir / "cloud.bin");
  const PointCloud cloud = load_pointcloud_kitti(dir / "cloud.bin");
  save_pointcloud_kitti(dir / "cloud_again.bin", cloud);
  CHECK(read_bytes(dir / "cloud_again.bin") == bytes_before);
}

TEST_CASE("lidar intensity source builds ground truth from the cloud") {
  const fs::path dir = test_dir() / "scene_lidar";
  SyntheticLayout layout = SyntheticLayout::default_layout();
  layout.rays_u = 100;
  layout.rays_v = 40;
  const CalibrationScene scene =
      generate_synthetic_scene(3, layout, RigidTransform::identity());
  write_scene_files(dir, scene, FeatureThresholds{}, IntensitySource::lidar,
                    0.7);
  const CalibrationScene loaded = load_scene(dir / "manifest.json");
  CHECK(!loaded.gt_intensity.empty());
  REQUIRE(!loaded.gt_intensity.weights.empty());
  for (double w : loaded.gt_intensity.weights) CHECK(w >= 0.7);

  // Without a ground-truth transform the lidar source must fail loudly.
  SceneManifest manifest = load_manifest(dir / "manifest.json");
  manifest.ground_truth.reset();
  const fs::path stripped = dir / "manifest_nogt.json";
  save_manifest(stripped, manifest);
  fs::copy_file(dir / "calib.txt", dir / "calib_orig.txt",
                fs::copy_options::overwrite_existing);
  // Rewrite the calib file without the extrinsic line so no fallback exists.
  save_calibration(dir / "calib.txt", scene.intrinsics, std::nullopt);
  CHECK_THROWS_AS(load_scene(stripped), MissingFieldError);
  fs::copy_file(dir / "calib_orig.txt", dir / "calib.txt",
                fs::copy_options::overwrite_existing);
}
