#ifndef CALIB_RENDER_HPP
#define CALIB_RENDER_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "calib/csv.hpp"
#include "calib/data.hpp"
#include "calib/evolution.hpp"
#include "calib/features.hpp"

namespace calib {

// Scatter plot of the archive in objective space (chamfer vs comp_cost),
// optionally highlighting one entry (the knee).
inline void write_front_svg(const std::filesystem::path& path,
                            const ParetoArchive& archive,
                            std::optional<std::size_t> highlight = {}) {
  constexpr int width = 720;
  constexpr int height = 480;
  constexpr double margin = 60.0;

  double ch_min = 0.0, ch_max = 1.0, co_min = 0.0, co_max = 1.0;
  if (!archive.empty()) {
    ch_min = archive.entries().front().objectives.chamfer;
    ch_max = archive.entries().back().objectives.chamfer;
    co_min = archive.entries().back().objectives.comp_cost;
    co_max = archive.entries().front().objectives.comp_cost;
  }
  if (ch_max <= ch_min) ch_max = ch_min + 1.0;
  if (co_max <= co_min) co_max = co_min + 1.0;
  auto sx = [&](double chamfer) {
    return margin + (chamfer - ch_min) / (ch_max - ch_min) *
                        (width - 2.0 * margin);
  };
  auto sy = [&](double comp) {
    return height - margin -
           (comp - co_min) / (co_max - co_min) * (height - 2.0 * margin);
  };

  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\">\n";
  f << "<rect width=\"" << width << "\" height=\"" << height
    << "\" fill=\"white\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
    << width - margin << "\" y2=\"" << height - margin
    << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
    << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << width / 2 << "\" y=\"" << height - 18
    << "\" text-anchor=\"middle\" font-size=\"14\">chamfer error "
       "(squared pixels)</text>\n";
  f << "<text x=\"18\" y=\"" << height / 2
    << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
    << height / 2 << ")\">computational cost</text>\n";
  f << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
    << "\" font-size=\"11\">" << format_double(ch_min) << "</text>\n";
  f << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
    << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(ch_max)
    << "</text>\n";
  f << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
    << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(co_min)
    << "</text>\n";
  f << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4
    << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(co_max)
    << "</text>\n";

  const auto& entries = archive.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    f << "<circle cx=\"" << sx(entries[i].objectives.chamfer) << "\" cy=\""
      << sy(entries[i].objectives.comp_cost)
      << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  if (highlight && *highlight < entries.size()) {
    const auto& e = entries[*highlight];
    f << "<circle cx=\"" << sx(e.objectives.chamfer) << "\" cy=\""
      << sy(e.objectives.comp_cost)
      << "\" r=\"7\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n";
    f << "<text x=\"" << sx(e.objectives.chamfer) + 10 << "\" y=\""
      << sy(e.objectives.comp_cost) - 8
      << "\" font-size=\"12\" fill=\"crimson\">knee</text>\n";
  }
  f << "</svg>\n";
}

// Binary PPM (P6) overlay: the grayscale image with feature points drawn on
// top, ground truth in green and the candidate in red.
inline void write_overlay_ppm(const std::filesystem::path& path,
                              const GrayImage& image,
                              const EdgePointSet& candidate,
                              const EdgePointSet* ground_truth = nullptr) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(image.width) *
                                image.height * 3);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = image.data[i];
  }
  auto paint = [&](const EdgePointSet& pts, std::uint8_t r, std::uint8_t g,
                   std::uint8_t b) {
    for (const Eigen::Vector2d& p : pts.points) {
      const int u = static_cast<int>(std::lround(p.x()));
      const int v = static_cast<int>(std::lround(p.y()));
      if (u < 0 || u >= image.width || v < 0 || v >= image.height) continue;
      const std::size_t i =
          (static_cast<std::size_t>(v) * image.width + u) * 3;
      rgb[i] = r;
      rgb[i + 1] = g;
      rgb[i + 2] = b;
    }
  };
  if (ground_truth) paint(*ground_truth, 0, 200, 0);
  paint(candidate, 230, 0, 0);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "P6\n" << image.width << " " << image.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(rgb.data()),
          static_cast<std::streamsize>(rgb.size()));
  if (!f) throw FileError("write failed: " + path.string());
}

}  // namespace calib

#endif  // CALIB_RENDER_HPP
