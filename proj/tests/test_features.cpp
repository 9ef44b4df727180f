#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "calib/features.hpp"
#include "calib/rng.hpp"

using namespace calib;

namespace {

GrayImage vertical_step(int width, int height, int column) {
  GrayImage img(width, height, 0);
  for (int v = 0; v < height; ++v) {
    for (int u = column; u < width; ++u) img.at(u, v) = 255;
  }
  return img;
}

GrayImage random_image(int width, int height, std::uint64_t seed) {
  GrayImage img(width, height, 0);
  Rng rng(seed);
  for (auto& px : img.data) {
    px = static_cast<std::uint8_t>(rng.integer(256));
  }
  return img;
}

std::set<std::pair<int, int>> as_set(const EdgePointSet& pts) {
  std::set<std::pair<int, int>> s;
  for (const Eigen::Vector2d& p : pts.points) {
    s.insert({static_cast<int>(p.x()), static_cast<int>(p.y())});
  }
  return s;
}

}  // namespace

TEST_CASE("uniform image has no edges") {
  CHECK(extract_image_edges(GrayImage(32, 16, 77), 100.0).empty());
}

TEST_CASE("vertical step edge detected at the two flanking columns") {
  const int c = 10;
  const GrayImage img = vertical_step(32, 12, c);
  const EdgePointSet edges = extract_image_edges(img, 100.0);
  // Analytic Sobel response of a step: |Gx| = 255*4 at columns c-1 and c,
  // zero elsewhere away from the border rows.
  std::set<std::pair<int, int>> expected;
  for (int v = 1; v < img.height - 1; ++v) {
    expected.insert({c - 1, v});
    expected.insert({c, v});
  }
  CHECK(as_set(edges) == expected);
}

TEST_CASE("threshold above the step response yields nothing") {
  const GrayImage img = vertical_step(32, 12, 10);
  CHECK(extract_image_edges(img, 255.0 * 4.0 + 1.0).empty());
}

TEST_CASE("edge extraction rejects tiny images and bad thresholds") {
  CHECK_THROWS_AS(extract_image_edges(GrayImage(2, 8), 10.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(extract_image_edges(GrayImage(8, 2), 10.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(extract_image_edges(GrayImage(8, 8), 0.0),
                  std::invalid_argument);
}

TEST_CASE("edge detection is translation equivariant") {
  const int w = 48, h = 36, du = 3, dv = 2;
  const GrayImage img = random_image(w, h, 21);
  GrayImage shifted(w, h, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u >= du && v >= dv) shifted.at(u, v) = img.at(u - du, v - dv);
    }
  }
  const auto base = as_set(extract_image_edges(img, 120.0));
  const auto moved = as_set(extract_image_edges(shifted, 120.0));
  // Compare inside the region whose 3x3 support is fully shifted content.
  auto in_region = [&](int u, int v) {
    return u >= du + 1 && u <= w - 2 && v >= dv + 1 && v <= h - 2;
  };
  std::set<std::pair<int, int>> base_shifted;
  for (const auto& [u, v] : base) {
    if (in_region(u + du, v + dv)) base_shifted.insert({u + du, v + dv});
  }
  std::set<std::pair<int, int>> moved_in_region;
  for (const auto& [u, v] : moved) {
    if (in_region(u, v)) moved_in_region.insert({u, v});
  }
  CHECK(base_shifted == moved_in_region);
}

TEST_CASE("raising the threshold never adds points") {
  const GrayImage img = random_image(40, 30, 5);
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double threshold : {20.0, 60.0, 120.0, 240.0, 500.0, 1100.0}) {
    const std::size_t count = extract_image_edges(img, threshold).size();
    CHECK(count <= previous);
    previous = count;
  }
}

TEST_CASE("detected points lie within image bounds") {
  const GrayImage img = random_image(40, 30, 17);
  for (const Eigen::Vector2d& p : extract_image_edges(img, 80.0).points) {
    CHECK(p.x() >= 0);
    CHECK(p.x() < img.width);
    CHECK(p.y() >= 0);
    CHECK(p.y() < img.height);
  }
}

TEST_CASE("lidar edges: constant depth yields nothing") {
  ProjectedPointSet scan;
  for (int i = 0; i < 50; ++i) {
    scan.push_back({static_cast<double>(i), 10.0, 7.5, 0.5});
  }
  CHECK(extract_lidar_edges(scan, 1.0).empty());
}

TEST_CASE("lidar edges: one jump yields exactly the flanking pair") {
  ProjectedPointSet scan;
  for (int i = 0; i < 20; ++i) {
    scan.push_back({static_cast<double>(i), 10.0, i < 10 ? 4.0 : 9.0, 0.5});
  }
  const EdgePointSet edges = extract_lidar_edges(scan, 1.0);
  REQUIRE(edges.size() == 2);
  CHECK(edges.points[0].x() == 9.0);
  CHECK(edges.points[1].x() == 10.0);
}

TEST_CASE("lidar edges: infinite gap yields nothing") {
  ProjectedPointSet scan;
  for (int i = 0; i < 20; ++i) {
    scan.push_back({static_cast<double>(i), 0.0, (i % 3) * 10.0, 0.5});
  }
  CHECK(extract_lidar_edges(scan,
                            std::numeric_limits<double>::infinity())
            .empty());
  CHECK_THROWS_AS(extract_lidar_edges(scan, 0.0), std::invalid_argument);
}

TEST_CASE("lidar edges: adjacent jumps report each point once") {
  ProjectedPointSet scan;
  const double depths[] = {1.0, 5.0, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    scan.push_back({static_cast<double>(i), 0.0, depths[i], 0.5});
  }
  const EdgePointSet edges = extract_lidar_edges(scan, 1.0);
  CHECK(edges.size() == 3);  // points 0, 1, 2
}

TEST_CASE("intensity points: basics") {
  CHECK(extract_intensity_points(GrayImage(8, 8, 0), 1.0).empty());

  GrayImage img(8, 8, 0);
  img.at(3, 4) = 255;
  const EdgePointSet pts = extract_intensity_points(img, 128.0);
  REQUIRE(pts.size() == 1);
  CHECK(pts.points[0] == Eigen::Vector2d(3.0, 4.0));
  CHECK(pts.weights[0] == 1.0);

  CHECK_THROWS_AS(extract_intensity_points(img, 300.0),
                  std::invalid_argument);
}

TEST_CASE("intensity points: ramp counting oracle") {
  GrayImage ramp(256, 4, 0);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 256; ++u) {
      ramp.at(u, v) = static_cast<std::uint8_t>(u);
    }
  }
  const double threshold = 97.0;
  std::size_t expected = 0;
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 256; ++u) {
      if (u >= threshold) ++expected;
    }
  }
  CHECK(extract_intensity_points(ramp, threshold).size() == expected);
}

TEST_CASE("lidar intensity points filter by reflectance") {
  ProjectedPointSet scan;
  scan.push_back({1.0, 1.0, 5.0, 0.2});
  scan.push_back({2.0, 1.0, 5.0, 0.9});
  scan.push_back({3.0, 1.0, 5.0, 0.5});
  const EdgePointSet pts = extract_lidar_intensity_points(scan, 0.5);
  REQUIRE(pts.size() == 2);
  CHECK(pts.points[0].x() == 2.0);
  CHECK(pts.weights[0] == 0.9);
  CHECK(pts.points[1].x() == 3.0);
  CHECK_THROWS_AS(extract_lidar_intensity_points(scan, 2.0),
                  std::invalid_argument);
}
