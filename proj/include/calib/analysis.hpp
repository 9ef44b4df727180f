#ifndef CALIB_ANALYSIS_HPP
#define CALIB_ANALYSIS_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "calib/baselines.hpp"
#include "calib/evolution.hpp"
#include "calib/hypervolume.hpp"

namespace calib {

struct KneeResult {
  std::size_t index = 0;
  ParetoArchive::Entry entry;
  // Signed perpendicular distance to the extreme chord in min-max
  // normalized objective space; larger means a stronger knee.
  double score = 0.0;
};

// Knee selection: objectives are min-max normalized to [0,1]^2, where the
// extreme entries sit at (0,1) and (1,0); among interior entries the one
// farthest from the chord between the extremes (on the origin side) wins,
// ties broken by lower chamfer.
inline KneeResult select_knee(const ParetoArchive& archive) {
  if (archive.size() < 3) {
    throw std::invalid_argument("select_knee: need >= 3 archive entries");
  }
  const auto& entries = archive.entries();
  const double ch_min = entries.front().objectives.chamfer;
  const double ch_max = entries.back().objectives.chamfer;
  const double co_min = entries.back().objectives.comp_cost;
  const double co_max = entries.front().objectives.comp_cost;
  const double ch_range = ch_max - ch_min;
  const double co_range = co_max - co_min;
  if (ch_range <= 0.0 || co_range <= 0.0) {
    throw std::invalid_argument("select_knee: degenerate objective ranges");
  }
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  KneeResult best;
  bool found = false;
  for (std::size_t i = 1; i + 1 < entries.size(); ++i) {
    const double xn = (entries[i].objectives.chamfer - ch_min) / ch_range;
    const double yn = (entries[i].objectives.comp_cost - co_min) / co_range;
    const double score = (1.0 - xn - yn) * inv_sqrt2;
    if (!found || score > best.score) {
      best = KneeResult{i, entries[i], score};
      found = true;
    }
  }
  return best;
}

// Pearson correlations over archive entries: the 7 decision variables plus
// the 2 objectives. Constant columns correlate 0 with everything.
struct InnovizationReport {
  static constexpr int columns = 9;
  std::array<std::string, columns> labels = {
      "x", "y", "z", "yaw", "pitch", "roll", "n", "chamfer", "comp_cost"};
  Eigen::Matrix<double, columns, columns> r;

  struct FlaggedPair {
    int a = 0;
    int b = 0;
    double r = 0.0;
  };
  std::vector<FlaggedPair> flagged;  // |r| > flag_threshold, a < b
  double flag_threshold = 0.8;
};

inline InnovizationReport innovization_report(const ParetoArchive& archive,
                                              double flag_threshold = 0.8) {
  if (archive.size() < 10) {
    throw std::invalid_argument(
        "innovization_report: need >= 10 archive entries");
  }
  const auto& entries = archive.entries();
  const int rows = static_cast<int>(entries.size());
  constexpr int cols = InnovizationReport::columns;
  Eigen::MatrixXd data(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const CalibrationVector& g = entries[i].genome;
    for (int j = 0; j < CalibrationVector::dim; ++j) {
      data(i, j) = g.component(j);
    }
    data(i, 7) = entries[i].objectives.chamfer;
    data(i, 8) = entries[i].objectives.comp_cost;
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::VectorXd sq_norm = centered.colwise().squaredNorm();

  InnovizationReport report;
  report.flag_threshold = flag_threshold;
  for (int a = 0; a < cols; ++a) {
    for (int b = a; b < cols; ++b) {
      double r = 0.0;
      const double denom = std::sqrt(sq_norm[a] * sq_norm[b]);
      if (denom > 0.0) {
        r = centered.col(a).dot(centered.col(b)) / denom;
      }
      report.r(a, b) = r;
      report.r(b, a) = r;
      if (a != b && std::abs(r) > flag_threshold) {
        report.flagged.push_back({a, b, r});
      }
    }
  }
  return report;
}

struct RobustnessPoint {
  double w1 = 0.0;
  double best_error = 0.0;
  CalibrationVector best;
};

// Repeats the single-objective weighted-chamfer minimization across edge
// weights, sharing the seed and budget, and reports the best error per
// weight.
inline std::vector<RobustnessPoint> robustness_sweep(
    const CalibrationScene& scene, const CalibrationBounds& bounds,
    const std::vector<double>& w1_values, const EvaluatorOptions& base_options,
    const EvolutionConfig& cfg) {
  std::vector<RobustnessPoint> sweep;
  sweep.reserve(w1_values.size());
  for (double w1 : w1_values) {
    if (!(w1 > 0.0 && w1 < 1.0)) {
      throw std::invalid_argument("robustness_sweep: w1 must lie in (0, 1)");
    }
    EvaluatorOptions options = base_options;
    options.weights = WeightPair(w1);
    const SingleObjectiveResult result =
        single_objective_minimize(scene, bounds, options, cfg);
    sweep.push_back({w1, result.best_value, result.best});
  }
  return sweep;
}

}  // namespace calib

#endif  // CALIB_ANALYSIS_HPP
