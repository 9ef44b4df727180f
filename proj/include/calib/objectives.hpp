#ifndef CALIB_OBJECTIVES_HPP
#define CALIB_OBJECTIVES_HPP

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "calib/features.hpp"
#include "calib/kdtree.hpp"
#include "calib/problem.hpp"
#include "calib/rng.hpp"

namespace calib {

// Objective pair under minimization: Chamfer alignment error in squared
// pixels and normalized computational cost.
struct ObjectiveVector {
  double chamfer = 0.0;
  double comp_cost = 0.0;

  friend bool operator==(const ObjectiveVector&,
                         const ObjectiveVector&) = default;
};

// Finite stand-in when a candidate projects no feature points at all: large
// enough to never be Pareto-optimal, finite so dominance stays well-defined.
inline constexpr double kEmptyEstimatePenalty = 1e6;

// Normalization of the Chamfer sum. The default divides by |gt| so the
// metric is a mean over matched ground-truth points and invariant to LiDAR
// subsampling density; raw_sum keeps the plain sum.
enum class ChamferNorm { mean_over_gt, raw_sum };

inline double chamfer_distance(const EdgePointSet& gt, const KdTree2d& est,
                               ChamferNorm norm = ChamferNorm::mean_over_gt) {
  if (gt.empty()) {
    throw std::invalid_argument("chamfer_distance: ground-truth set is empty");
  }
  if (est.empty()) return kEmptyEstimatePenalty;
  double sum = 0.0;
  for (const Eigen::Vector2d& p : gt.points) {
    sum += est.nearest_squared(p);
  }
  return norm == ChamferNorm::mean_over_gt
             ? sum / static_cast<double>(gt.size())
             : sum;
}

inline double chamfer_distance(const EdgePointSet& gt, const EdgePointSet& est,
                               ChamferNorm norm = ChamferNorm::mean_over_gt) {
  return chamfer_distance(gt, KdTree2d(est.points), norm);
}

// Edge/intensity mixing weights with w1 + w2 = 1.
struct WeightPair {
  double w1 = 1.0;
  double w2 = 0.0;

  explicit WeightPair(double edge_weight)
      : w1(edge_weight), w2(1.0 - edge_weight) {
    if (!(w1 >= 0.0 && w1 <= 1.0)) {
      throw std::invalid_argument("WeightPair: w1 outside [0, 1]");
    }
  }

  static WeightPair from_pair(double w1, double w2) {
    if (!(w1 >= 0.0 && w1 <= 1.0 && w2 >= 0.0 && w2 <= 1.0) ||
        w1 + w2 != 1.0) {
      throw std::invalid_argument("WeightPair: need w1, w2 in [0,1], sum 1");
    }
    WeightPair w(w1);
    w.w2 = w2;
    return w;
  }
};

// w1 * chamfer(gt_edge, est) + w2 * chamfer(gt_intensity, est), with one
// shared nearest-neighbor tree over est. A zero-weighted term is skipped, so
// its ground-truth set may be empty.
inline double weighted_chamfer(const EdgePointSet& gt_edge,
                               const EdgePointSet& gt_intensity,
                               const EdgePointSet& est, const WeightPair& w,
                               ChamferNorm norm = ChamferNorm::mean_over_gt) {
  const KdTree2d tree(est.points);
  double error = 0.0;
  if (w.w1 > 0.0) error += w.w1 * chamfer_distance(gt_edge, tree, norm);
  if (w.w2 > 0.0) error += w.w2 * chamfer_distance(gt_intensity, tree, norm);
  return error;
}

enum class CostMode { proxy, measured };

struct CostMeasurement {
  double elapsed_seconds = 0.0;
  double bytes_touched = 0.0;
};

// Reference scale for measured mode, calibrated once per run at n = n_max.
struct CostReference {
  double t_ref = 0.0;
  double m_ref = 0.0;
};

struct CostBreakdown {
  double t_norm = 0.0;
  double m_norm = 0.0;

  double e_comp() const { return t_norm + m_norm; }
};

// Proxy mode models both time and memory as n / n_max, which makes E_comp
// deterministic and hardware-independent; measured mode normalizes wall time
// and bytes touched by the n_max reference.
inline CostBreakdown computational_cost(
    long long n, long long n_min, long long n_max, CostMode mode,
    const std::optional<CostMeasurement>& measurement = {},
    const std::optional<CostReference>& reference = {}) {
  if (n < n_min || n > n_max) {
    throw std::invalid_argument("computational_cost: n out of bounds");
  }
  if (mode == CostMode::proxy) {
    const double t = static_cast<double>(n) / static_cast<double>(n_max);
    return {t, t};
  }
  if (!measurement || !reference || reference->t_ref <= 0.0 ||
      reference->m_ref <= 0.0) {
    throw std::invalid_argument(
        "computational_cost: measured mode needs a measurement and a "
        "positive reference");
  }
  return {measurement->elapsed_seconds / reference->t_ref,
          measurement->bytes_touched / reference->m_ref};
}

struct EvaluatorOptions {
  WeightPair weights{0.8};
  CostMode cost_mode = CostMode::proxy;
  ChamferNorm norm = ChamferNorm::mean_over_gt;
  double depth_gap = 0.5;
  // Timing repeats per measured-mode evaluation.
  int inner_iterations = 1;
  std::uint64_t seed = 0;
};

// Objective evaluation for one run. The cloud is shuffled once at
// construction with the run seed; a candidate with sample count n is
// evaluated on the first n points of that fixed permutation, so n is the
// only stochastic influence and the evaluation is a deterministic function
// of the genome within a run.
//
// operator() is pure; evaluations may run concurrently in proxy mode.
// Measured mode mutates the cached reference and times wall-clock intervals,
// so it must be called serially.
class Evaluator {
 public:
  Evaluator(const CalibrationScene& scene, const CalibrationBounds& bounds,
            const EvaluatorOptions& options)
      : scene_(&scene), bounds_(bounds), options_(options) {
    if (options.weights.w1 > 0.0 && scene.gt_edges.empty()) {
      throw std::invalid_argument("Evaluator: scene has no edge features");
    }
    if (options.weights.w2 > 0.0 && scene.gt_intensity.empty()) {
      throw std::invalid_argument(
          "Evaluator: intensity weight is positive but the scene has no "
          "intensity features");
    }
    Rng rng(options.seed);
    shuffle_ = rng.permutation(scene.cloud.size());
  }

  const CalibrationBounds& bounds() const { return bounds_; }
  const CalibrationScene& scene() const { return *scene_; }
  const EvaluatorOptions& options() const { return options_; }

  ObjectiveVector operator()(const CalibrationVector& x) const {
    const DecodedVector d = decode(x, bounds_);
    if (options_.cost_mode == CostMode::measured) {
      return evaluate_measured(d);
    }
    const double chamfer = alignment_error(d.transform, d.n).first;
    const CostBreakdown cost = computational_cost(
        d.n, bounds_.n_min(), bounds_.n_max(), CostMode::proxy);
    return {chamfer, cost.e_comp()};
  }

  // Alignment error of an explicit transform at full resolution; used by
  // validation probes and rendering, not by the optimizer.
  double alignment_error_at(const RigidTransform& t) const {
    return alignment_error(t, bounds_.n_max()).first;
  }

  // The feature points a candidate transform produces (what the Chamfer
  // objective sees). Depth discontinuities are detected on the unclipped
  // projected scan, so image-boundary clipping cannot splice distant scan
  // points together and mint spurious jumps; only the resulting feature
  // points are then limited to the image.
  EdgePointSet candidate_features(const RigidTransform& t,
                                  long long n) const {
    const PointCloud sub = subsample(n);
    ProjectedPointSet projected;
    projected.reserve(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) {
      const Eigen::Vector3d p = t.rotation * sub.points[i] + t.translation;
      if (p.z() <= kMinCameraDepth) continue;
      const double inv_z = 1.0 / p.z();
      projected.push_back({scene_->intrinsics.fx * p.x() * inv_z +
                               scene_->intrinsics.u0,
                           scene_->intrinsics.fy * p.y() * inv_z +
                               scene_->intrinsics.v0,
                           p.z(), sub.intensities[i]});
    }
    EdgePointSet features =
        extract_lidar_edges(projected, options_.depth_gap);
    EdgePointSet in_frame;
    const ImageSize size = scene_->image.size();
    for (const Eigen::Vector2d& p : features.points) {
      if (in_image(p.x(), p.y(), size)) in_frame.points.push_back(p);
    }
    return in_frame;
  }

 private:
  // The shuffle decides which n points participate; the selection is then
  // re-sorted into scan order because the LiDAR edge features are defined on
  // consecutive-scan depth jumps.
  PointCloud subsample(long long n) const {
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(n), shuffle_.size());
    std::vector<std::size_t> chosen(shuffle_.begin(),
                                    shuffle_.begin() + count);
    std::sort(chosen.begin(), chosen.end());
    PointCloud sub;
    sub.points.reserve(count);
    sub.intensities.reserve(count);
    for (std::size_t idx : chosen) {
      sub.points.push_back(scene_->cloud.points[idx]);
      sub.intensities.push_back(scene_->cloud.intensities[idx]);
    }
    return sub;
  }

  std::pair<double, CostMeasurement> alignment_error(const RigidTransform& t,
                                                     long long n) const {
    const EdgePointSet est = candidate_features(t, n);
    const double chamfer = weighted_chamfer(
        scene_->gt_edges, scene_->gt_intensity, est, options_.weights,
        options_.norm);
    CostMeasurement m;
    m.bytes_touched =
        static_cast<double>(n) * (3 * sizeof(double) + sizeof(double)) +
        static_cast<double>(est.size()) * sizeof(ProjectedPoint);
    return {chamfer, m};
  }

  ObjectiveVector evaluate_measured(const DecodedVector& d) const {
    if (!reference_) {
      const auto [_, ref] = timed_alignment(d.transform, bounds_.n_max());
      reference_ = CostReference{ref.elapsed_seconds, ref.bytes_touched};
    }
    const auto [chamfer, m] = timed_alignment(d.transform, d.n);
    const CostBreakdown cost =
        computational_cost(d.n, bounds_.n_min(), bounds_.n_max(),
                           CostMode::measured, m, reference_);
    return {chamfer, cost.e_comp()};
  }

  std::pair<double, CostMeasurement> timed_alignment(const RigidTransform& t,
                                                     long long n) const {
    const int repeats = std::max(1, options_.inner_iterations);
    double chamfer = 0.0;
    CostMeasurement m;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) {
      auto [value, meas] = alignment_error(t, n);
      chamfer = value;
      m.bytes_touched = meas.bytes_touched;
    }
    const auto stop = std::chrono::steady_clock::now();
    m.elapsed_seconds =
        std::chrono::duration<double>(stop - start).count() / repeats;
    return {chamfer, m};
  }

  const CalibrationScene* scene_;
  CalibrationBounds bounds_;
  EvaluatorOptions options_;
  std::vector<std::size_t> shuffle_;
  mutable std::optional<CostReference> reference_;
};

}  // namespace calib

#endif  // CALIB_OBJECTIVES_HPP
