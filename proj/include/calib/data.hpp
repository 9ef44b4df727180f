#ifndef CALIB_DATA_HPP
#define CALIB_DATA_HPP

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "calib/features.hpp"
#include "calib/geometry.hpp"
#include "calib/objectives.hpp"
#include "calib/problem.hpp"

#include <json.hpp>

namespace calib {

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedFileError : public FileError {
 public:
  using FileError::FileError;
};

class MissingFieldError : public FileError {
 public:
  using FileError::FileError;
};

namespace detail {

inline std::vector<std::uint8_t> read_all_bytes(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline float read_le_float(const std::uint8_t* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             static_cast<std::uint32_t>(p[1]) << 8 |
                             static_cast<std::uint32_t>(p[2]) << 16 |
                             static_cast<std::uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(bits);
}

inline void write_le_float(float value, std::uint8_t* p) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  p[0] = static_cast<std::uint8_t>(bits & 0xff);
  p[1] = static_cast<std::uint8_t>((bits >> 8) & 0xff);
  p[2] = static_cast<std::uint8_t>((bits >> 16) & 0xff);
  p[3] = static_cast<std::uint8_t>((bits >> 24) & 0xff);
}

}  // namespace detail

// KITTI velodyne format: little-endian float32 quadruples
// (x, y, z, reflectance) per point. Reflectance is clamped into [0, 1].
inline PointCloud load_pointcloud_kitti(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_all_bytes(path);
  if (bytes.size() % 16 != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % 16;
    throw MalformedFileError(
        path.string() + ": size " + std::to_string(bytes.size()) +
        " is not a multiple of 16; truncated record at byte offset " +
        std::to_string(offset));
  }
  PointCloud cloud;
  const std::size_t count = bytes.size() / 16;
  cloud.points.reserve(count);
  cloud.intensities.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + 16 * i;
    const float x = detail::read_le_float(rec);
    const float y = detail::read_le_float(rec + 4);
    const float z = detail::read_le_float(rec + 8);
    const float r = detail::read_le_float(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
        !std::isfinite(r)) {
      throw MalformedFileError(path.string() +
                               ": non-finite value at point index " +
                               std::to_string(i));
    }
    cloud.points.emplace_back(x, y, z);
    cloud.intensities.push_back(std::clamp(static_cast<double>(r), 0.0, 1.0));
  }
  return cloud;
}

inline void save_pointcloud_kitti(const std::filesystem::path& path,
                                  const PointCloud& cloud) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot write file: " + path.string());
  std::array<std::uint8_t, 16> rec;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    detail::write_le_float(static_cast<float>(cloud.points[i].x()), rec.data());
    detail::write_le_float(static_cast<float>(cloud.points[i].y()),
                           rec.data() + 4);
    detail::write_le_float(static_cast<float>(cloud.points[i].z()),
                           rec.data() + 8);
    detail::write_le_float(static_cast<float>(cloud.intensities[i]),
                           rec.data() + 12);
    f.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
  if (!f) throw FileError("write failed: " + path.string());
}

struct CalibrationFile {
  CameraIntrinsics intrinsics;
  std::optional<RigidTransform> velo_to_cam;
};

// Text calibration format: `KEY: v1 v2 ... v12` lines, each value list a
// row-major 3x4 matrix. `projection_key` selects the camera projection
// (KITTI distributions name it P0..P3 or P_rect_xx); `Tr_velo_to_cam` is
// picked up when present.
inline CalibrationFile load_calibration(const std::filesystem::path& path,
                                        const std::string& projection_key =
                                            "P2") {
  std::ifstream f(path);
  if (!f) throw FileError("cannot open file: " + path.string());

  auto parse_values = [&](const std::string& key, const std::string& rest) {
    std::istringstream is(rest);
    std::vector<double> values;
    double v;
    while (is >> v) values.push_back(v);
    std::string trailing;
    if (!is.eof() && is.fail()) {
      is.clear();
      is >> trailing;
    }
    if (!trailing.empty() || values.size() != 12) {
      throw MalformedFileError(path.string() + ": key '" + key + "' has " +
                               std::to_string(values.size()) +
                               (trailing.empty() ? "" : "+") +
                               " values, expected 12");
    }
    return values;
  };

  std::optional<std::vector<double>> projection;
  std::optional<std::vector<double>> extrinsic;
  std::string line;
  while (std::getline(f, line)) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) {
      key.pop_back();
    }
    const std::string rest = line.substr(colon + 1);
    if (key == projection_key) {
      projection = parse_values(key, rest);
    } else if (key == "Tr_velo_to_cam") {
      extrinsic = parse_values(key, rest);
    }
  }
  if (!projection) {
    throw MissingFieldError(path.string() + ": calibration key '" +
                            projection_key + "' not found");
  }

  CalibrationFile result;
  const std::vector<double>& p = *projection;
  result.intrinsics = CameraIntrinsics{p[0], p[5], p[2], p[6]};
  if (result.intrinsics.fx <= 0.0 || result.intrinsics.fy <= 0.0) {
    throw MalformedFileError(path.string() + ": key '" + projection_key +
                             "' has non-positive focal lengths");
  }
  if (extrinsic) {
    const std::vector<double>& t = *extrinsic;
    RigidTransform tr;
    tr.rotation << t[0], t[1], t[2], t[4], t[5], t[6], t[8], t[9], t[10];
    tr.translation << t[3], t[7], t[11];
    if (!is_rigid(tr, 1e-3)) {
      throw MalformedFileError(path.string() +
                               ": 'Tr_velo_to_cam' is not a rigid transform");
    }
    result.velo_to_cam = tr;
  }
  return result;
}

inline void save_calibration(const std::filesystem::path& path,
                             const CameraIntrinsics& k,
                             const std::optional<RigidTransform>& velo_to_cam,
                             const std::string& projection_key = "P2") {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    f << buf;
  };
  f << projection_key << ":";
  for (double v : {k.fx, 0.0, k.u0, 0.0, 0.0, k.fy, k.v0, 0.0, 0.0, 0.0, 1.0,
                   0.0}) {
    put(v);
  }
  f << "\n";
  if (velo_to_cam) {
    f << "Tr_velo_to_cam:";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) put(velo_to_cam->rotation(r, c));
      put(velo_to_cam->translation[r]);
    }
    f << "\n";
  }
  if (!f) throw FileError("write failed: " + path.string());
}

// Binary PGM (magic P5, maxval 255). Header comments are skipped.
inline GrayImage load_image_pgm(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_all_bytes(path);
  std::size_t pos = 0;

  auto skip_space_and_comments = [&]() {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw MalformedFileError(path.string() + ": expected " +
                               std::string(what) + " at byte offset " +
                               std::to_string(pos));
    }
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      ++pos;
    }
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    const std::string magic =
        bytes.size() >= 2
            ? std::string(1, static_cast<char>(bytes[0])) +
                  static_cast<char>(bytes[1])
            : std::string("<empty>");
    throw MalformedFileError(path.string() + ": unsupported magic '" + magic +
                             "', binary PGM (P5) required");
  }
  pos = 2;
  const long width = read_int("width");
  const long height = read_int("height");
  const long maxval = read_int("maxval");
  if (width <= 0 || height <= 0) {
    throw MalformedFileError(path.string() + ": non-positive image size");
  }
  if (maxval != 255) {
    throw MalformedFileError(path.string() + ": maxval " +
                             std::to_string(maxval) + ", expected 255");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw MalformedFileError(path.string() +
                             ": missing whitespace after maxval");
  }
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < expected) {
    throw MalformedFileError(
        path.string() + ": truncated pixel data, expected " +
        std::to_string(expected) + " bytes, got " +
        std::to_string(bytes.size() - pos));
  }
  GrayImage img(static_cast<int>(width), static_cast<int>(height));
  std::memcpy(img.data.data(), bytes.data() + pos, expected);
  return img;
}

inline void save_image_pgm(const std::filesystem::path& path,
                           const GrayImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (!f) throw FileError("write failed: " + path.string());
}

struct FeatureThresholds {
  double edge = 100.0;
  double depth_gap = 0.5;
  double intensity = 200.0;
};

enum class IntensitySource { image, lidar };

// Scene manifest: file locations (relative to the manifest), the optional
// ground-truth transform, and the feature-extraction settings.
struct SceneManifest {
  std::string cloud_file = "cloud.bin";
  std::string image_file = "image.pgm";
  std::string calib_file = "calib.txt";
  std::string projection_key = "P2";
  std::optional<RigidTransform> ground_truth;
  FeatureThresholds thresholds;
  IntensitySource intensity_source = IntensitySource::image;
  double lidar_intensity_threshold = 0.5;
};

inline void save_manifest(const std::filesystem::path& path,
                          const SceneManifest& m) {
  nlohmann::json j;
  j["cloud"] = m.cloud_file;
  j["image"] = m.image_file;
  j["calib"] = m.calib_file;
  j["projection_key"] = m.projection_key;
  j["thresholds"] = {{"edge", m.thresholds.edge},
                     {"depth_gap", m.thresholds.depth_gap},
                     {"intensity", m.thresholds.intensity}};
  j["intensity_source"] =
      m.intensity_source == IntensitySource::image ? "image" : "lidar";
  j["lidar_intensity_threshold"] = m.lidar_intensity_threshold;
  if (m.ground_truth) {
    std::vector<std::vector<double>> rot(3, std::vector<double>(3));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rot[r][c] = m.ground_truth->rotation(r, c);
    }
    j["ground_truth"] = {
        {"rotation", rot},
        {"translation",
         {m.ground_truth->translation[0], m.ground_truth->translation[1],
          m.ground_truth->translation[2]}}};
  }
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << j.dump(2) << "\n";
}

inline SceneManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FileError("cannot open file: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(path.string() + ": " + e.what());
  }
  try {
    SceneManifest m;
    m.cloud_file = j.at("cloud").get<std::string>();
    m.image_file = j.at("image").get<std::string>();
    m.calib_file = j.at("calib").get<std::string>();
    if (j.contains("projection_key")) {
      m.projection_key = j["projection_key"].get<std::string>();
    }
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      if (t.contains("edge")) m.thresholds.edge = t["edge"].get<double>();
      if (t.contains("depth_gap")) {
        m.thresholds.depth_gap = t["depth_gap"].get<double>();
      }
      if (t.contains("intensity")) {
        m.thresholds.intensity = t["intensity"].get<double>();
      }
    }
    if (j.contains("intensity_source")) {
      const std::string s = j["intensity_source"].get<std::string>();
      if (s == "image") {
        m.intensity_source = IntensitySource::image;
      } else if (s == "lidar") {
        m.intensity_source = IntensitySource::lidar;
      } else {
        throw MalformedFileError(path.string() +
                                 ": unknown intensity_source '" + s + "'");
      }
    }
    if (j.contains("lidar_intensity_threshold")) {
      m.lidar_intensity_threshold =
          j["lidar_intensity_threshold"].get<double>();
    }
    if (j.contains("ground_truth")) {
      const auto& g = j["ground_truth"];
      RigidTransform t;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          t.rotation(r, c) = g.at("rotation").at(r).at(c).get<double>();
        }
        t.translation[r] = g.at("translation").at(r).get<double>();
      }
      m.ground_truth = t;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw MissingFieldError(path.string() + ": " + e.what());
  }
}

// Loads the three referenced files and builds the ground-truth feature sets.
// The ground-truth transform comes from the manifest when present, otherwise
// from the calibration file's Tr_velo_to_cam.
inline CalibrationScene load_scene(const std::filesystem::path& manifest_path) {
  const SceneManifest m = load_manifest(manifest_path);
  const std::filesystem::path dir = manifest_path.parent_path();

  CalibrationScene scene;
  scene.cloud = load_pointcloud_kitti(dir / m.cloud_file);
  scene.image = load_image_pgm(dir / m.image_file);
  const CalibrationFile calib =
      load_calibration(dir / m.calib_file, m.projection_key);
  scene.intrinsics = calib.intrinsics;
  scene.ground_truth = m.ground_truth ? m.ground_truth : calib.velo_to_cam;

  scene.gt_edges = extract_image_edges(scene.image, m.thresholds.edge);
  if (m.intensity_source == IntensitySource::image) {
    scene.gt_intensity =
        extract_intensity_points(scene.image, m.thresholds.intensity);
  } else {
    if (!scene.ground_truth) {
      throw MissingFieldError(
          manifest_path.string() +
          ": intensity_source 'lidar' requires a ground-truth transform");
    }
    const ProjectedPointSet projected =
        project_cloud(scene.cloud, *scene.ground_truth, scene.intrinsics,
                      scene.image.size());
    scene.gt_intensity = extract_lidar_intensity_points(
        projected, m.lidar_intensity_threshold);
  }
  return scene;
}

}  // namespace calib

#endif  // CALIB_DATA_HPP
