// calibmoo: camera-LiDAR extrinsic calibration by bi-objective evolutionary
// search, with epsilon-constraint verification, knee selection, innovization
// and robustness analyses over the resulting Pareto archive.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calib/analysis.hpp"
#include "calib/baselines.hpp"
#include "calib/csv.hpp"
#include "calib/data.hpp"
#include "calib/evolution.hpp"
#include "calib/objectives.hpp"
#include "calib/render.hpp"
#include "calib/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace calib;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_threads() {
  if (const char* env = std::getenv("CALIBMOO_THREADS")) {
    const int value = std::atoi(env);
    if (value >= 1) return value;
  }
  return 1;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> values;
  const std::size_t first = text.find(':');
  if (first != std::string::npos) {
    // start:end:step
    const std::size_t second = text.find(':', first + 1);
    if (second == std::string::npos) {
      throw UsageError("expected start:end:step, got '" + text + "'");
    }
    const double start = std::stod(text.substr(0, first));
    const double end = std::stod(text.substr(first + 1, second - first - 1));
    const double step = std::stod(text.substr(second + 1));
    if (step <= 0.0 || end < start) {
      throw UsageError("invalid range '" + text + "'");
    }
    for (int k = 0;; ++k) {
      const double v = start + k * step;
      if (v > end + 1e-12) break;
      values.push_back(v);
    }
  } else {
    std::istringstream is(text);
    std::string cell;
    while (std::getline(is, cell, ',')) {
      if (!cell.empty()) values.push_back(std::stod(cell));
    }
  }
  if (values.empty()) throw UsageError("empty value list '" + text + "'");
  return values;
}

ObjectiveFn make_objective(const Evaluator& evaluator) {
  return [&evaluator](const CalibrationVector& x) { return evaluator(x); };
}

struct SceneSetup {
  CalibrationScene scene;
  CalibrationBounds bounds;
  EvaluatorOptions options;
};

struct SceneFlags {
  std::string manifest;
  double w1 = 0.8;
  std::string cost_mode = "proxy";
  std::string chamfer_norm = "mean";
  long long n_min = 100;
  double rot_bound_deg = 25.0;
  double trans_bound_m = 1.5;
  int inner_iterations = 1;
  std::uint64_t seed = 1;

  void add_to(CLI::App* cmd, bool with_w1 = true) {
    cmd->add_option("--scene", manifest, "scene manifest JSON")->required();
    if (with_w1) {
      cmd->add_option("--w1", w1,
                      "edge weight; intensity weight is 1 - w1");
    }
    cmd->add_option("--cost-mode", cost_mode, "proxy or measured")
        ->check(CLI::IsMember({"proxy", "measured"}));
    cmd->add_option("--chamfer-norm", chamfer_norm,
                    "mean (over ground-truth points) or sum")
        ->check(CLI::IsMember({"mean", "sum"}));
    cmd->add_option("--n-min", n_min, "lower bound on the sample count");
    cmd->add_option("--rot-bound-deg", rot_bound_deg,
                    "rotation bound, degrees per axis");
    cmd->add_option("--trans-bound-m", trans_bound_m,
                    "translation bound, meters per axis");
    cmd->add_option("--inner-iters", inner_iterations,
                    "measured-cost timing repeats per evaluation");
    cmd->add_option("--seed", seed, "run seed");
  }

  SceneSetup load() const {
    SceneSetup s{load_scene(manifest), {}, {}};
    const long long cloud_size =
        static_cast<long long>(s.scene.cloud.size());
    if (cloud_size < 2) {
      throw FileError("scene cloud has fewer than 2 points");
    }
    const long long lo = std::min(n_min, cloud_size - 1);
    s.bounds = CalibrationBounds::standard(std::max(1LL, lo), cloud_size,
                                           trans_bound_m,
                                           rot_bound_deg * kDegToRad);
    double edge_weight = w1;
    if (edge_weight == 1.0 && s.scene.gt_intensity.empty()) {
      std::cerr << "warning: scene has no intensity features; intensity term "
                   "disabled\n";
    } else if (!(edge_weight > 0.0 && edge_weight < 1.0)) {
      throw UsageError("--w1 must lie in (0, 1)");
    }
    s.options.weights = WeightPair(edge_weight);
    s.options.cost_mode =
        cost_mode == "measured" ? CostMode::measured : CostMode::proxy;
    s.options.norm = chamfer_norm == "sum" ? ChamferNorm::raw_sum
                                           : ChamferNorm::mean_over_gt;
    const SceneManifest manifest_data = load_manifest(manifest);
    s.options.depth_gap = manifest_data.thresholds.depth_gap;
    s.options.inner_iterations = inner_iterations;
    s.options.seed = seed;
    return s;
  }
};

int cmd_synth(const std::string& out_dir, std::uint64_t seed,
              const std::string& layout_name, double rot_deg, double trans_m,
              double edge_thr, double depth_gap, double intensity_thr,
              const std::string& intensity_source, double lidar_thr,
              int rays_u, int rays_v) {
  SyntheticLayout layout = SyntheticLayout::named(layout_name);
  if (rays_u > 0) layout.rays_u = rays_u;
  if (rays_v > 0) layout.rays_v = rays_v;
  const Decalibration dec =
      decalibrate(RigidTransform::identity(), rot_deg, trans_m, seed + 1);
  const FeatureThresholds thresholds{edge_thr, depth_gap, intensity_thr};
  const CalibrationScene scene =
      generate_synthetic_scene(seed, layout, dec.transform, thresholds);
  const IntensitySource source = intensity_source == "lidar"
                                     ? IntensitySource::lidar
                                     : IntensitySource::image;
  write_scene_files(out_dir, scene, thresholds, source, lidar_thr);
  std::cout << "scene written to " << out_dir << " ("
            << scene.cloud.size() << " points, " << scene.gt_edges.size()
            << " edge features, " << scene.gt_intensity.size()
            << " intensity features)\n";
  return 0;
}

int cmd_calibrate(const SceneFlags& flags, const std::string& out_dir,
                  EvolutionConfig cfg, bool paper_scale, bool pop_set,
                  bool gens_set) {
  if (paper_scale) {
    const EvolutionConfig paper = EvolutionConfig::paper_scale();
    if (!pop_set) cfg.population_size = paper.population_size;
    if (!gens_set) cfg.generations = paper.generations;
  }
  SceneSetup setup = flags.load();
  cfg.seed = flags.seed;
  if (setup.options.cost_mode == CostMode::measured && cfg.threads != 1) {
    std::cerr << "warning: measured cost mode forces serial evaluation\n";
    cfg.threads = 1;
  }
  const Evaluator evaluator(setup.scene, setup.bounds, setup.options);
  const EvolutionResult result =
      evolve(setup.bounds, make_objective(evaluator), cfg);

  fs::create_directories(out_dir);
  write_archive_csv(fs::path(out_dir) / "archive.csv", result.archive);
  write_generations_csv(fs::path(out_dir) / "generations.csv", result.log);
  write_front_svg(fs::path(out_dir) / "front.svg", result.archive);
  std::cout << "archive size " << result.archive.size() << ", best chamfer "
            << format_double(result.archive.min_chamfer().objectives.chamfer)
            << ", evaluations " << result.log.back().evaluations << "\n";
  return 0;
}

int cmd_epsilon(const SceneFlags& flags, const std::string& out,
                const std::string& eps_text, int num_eps,
                EvolutionConfig cfg) {
  SceneSetup setup = flags.load();
  cfg.seed = flags.seed;
  std::vector<double> epsilons;
  if (!eps_text.empty()) {
    epsilons = parse_value_list(eps_text);
  } else {
    // Span the achievable proxy-cost range.
    const double lo = 2.0 * static_cast<double>(setup.bounds.n_min()) /
                      static_cast<double>(setup.bounds.n_max());
    const double hi = 2.0;
    for (int k = 0; k < num_eps; ++k) {
      epsilons.push_back(lo + (hi - lo) * (k + 1) /
                                  static_cast<double>(num_eps));
    }
  }
  const std::vector<EpsilonResult> results =
      epsilon_constraint_sweep(setup.scene, setup.bounds, setup.options,
                               epsilons, cfg);
  write_epsilon_csv(out, results);
  for (const EpsilonResult& r : results) {
    std::cout << "epsilon " << format_double(r.epsilon) << ": "
              << (r.feasible ? "feasible" : "infeasible") << ", chamfer "
              << format_double(r.achieved.chamfer) << ", cost "
              << format_double(r.achieved.comp_cost) << "\n";
  }
  return 0;
}

int cmd_knee(const std::string& archive_path, const std::string& out,
             const std::string& svg) {
  const ParetoArchive archive = read_archive_csv(archive_path);
  KneeResult knee;
  try {
    knee = select_knee(archive);
  } catch (const std::invalid_argument&) {
    throw FileError("knee selection needs >= 3 archive entries, archive '" +
                    archive_path + "' has " + std::to_string(archive.size()));
  }
  std::ostringstream report;
  report << "knee entry " << knee.index << " of " << archive.size() << "\n"
         << "score " << format_double(knee.score) << "\n"
         << "chamfer " << format_double(knee.entry.objectives.chamfer) << "\n"
         << "comp_cost " << format_double(knee.entry.objectives.comp_cost)
         << "\n"
         << "genome";
  for (int i = 0; i < CalibrationVector::dim; ++i) {
    report << " " << format_double(knee.entry.genome.component(i));
  }
  report << "\n";
  std::cout << report.str();
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw FileError("cannot write file: " + out);
    f << report.str();
  }
  if (!svg.empty()) write_front_svg(svg, archive, knee.index);
  return 0;
}

int cmd_innovize(const std::string& archive_path, const std::string& out,
                 double threshold) {
  const ParetoArchive archive = read_archive_csv(archive_path);
  InnovizationReport report;
  try {
    report = innovization_report(archive, threshold);
  } catch (const std::invalid_argument&) {
    throw FileError("innovization needs >= 10 archive entries, archive '" +
                    archive_path + "' has " + std::to_string(archive.size()));
  }
  write_correlations_csv(out, report);
  if (report.flagged.empty()) {
    std::cout << "no variable/objective pair with |r| > "
              << format_double(threshold) << "\n";
  } else {
    for (const auto& p : report.flagged) {
      std::cout << report.labels[p.a] << " ~ " << report.labels[p.b]
                << ": r = " << format_double(p.r) << "\n";
    }
  }
  return 0;
}

int cmd_robustness(const SceneFlags& flags, const std::string& out,
                   const std::string& w1_list, EvolutionConfig cfg) {
  SceneSetup setup = flags.load();
  cfg.seed = flags.seed;
  const std::vector<double> w1_values = parse_value_list(w1_list);
  const std::vector<RobustnessPoint> sweep = robustness_sweep(
      setup.scene, setup.bounds, w1_values, setup.options, cfg);
  write_robustness_csv(out, sweep);
  for (const RobustnessPoint& p : sweep) {
    std::cout << "w1 " << format_double(p.w1) << ": best error "
              << format_double(p.best_error) << "\n";
  }
  return 0;
}

int cmd_project(const SceneFlags& flags, const std::string& out,
                const std::string& genome_text, bool use_gt) {
  SceneSetup setup = flags.load();
  const Evaluator evaluator(setup.scene, setup.bounds, setup.options);

  RigidTransform candidate;
  if (!genome_text.empty()) {
    const std::vector<double> v = parse_value_list(genome_text);
    if (v.size() != 7) {
      throw UsageError("--genome needs 7 comma-separated values");
    }
    CalibrationVector g;
    for (int i = 0; i < 7; ++i) g.component(i) = v[i];
    candidate = decode(g, setup.bounds).transform;
  } else if (use_gt) {
    if (!setup.scene.ground_truth) {
      throw FileError("scene has no ground-truth transform");
    }
    candidate = *setup.scene.ground_truth;
  } else {
    throw UsageError("project needs --genome or --use-gt");
  }

  const EdgePointSet candidate_pts =
      evaluator.candidate_features(candidate, setup.bounds.n_max());
  std::optional<EdgePointSet> gt_pts;
  if (setup.scene.ground_truth) {
    gt_pts = evaluator.candidate_features(*setup.scene.ground_truth,
                                          setup.bounds.n_max());
  }
  write_overlay_ppm(out, setup.scene.image, candidate_pts,
                    gt_pts ? &*gt_pts : nullptr);
  std::cout << "overlay written to " << out << " ("
            << candidate_pts.size() << " candidate feature points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camera-LiDAR extrinsic calibration on a Chamfer-vs-cost "
               "Pareto front"};
  app.require_subcommand(1);
  int exit_code = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string synth_out;
  std::uint64_t synth_seed = 1;
  std::string synth_layout = "default";
  double synth_rot = 10.0, synth_trans = 0.5;
  double synth_edge = 100.0, synth_gap = 0.5, synth_intensity = 200.0;
  std::string synth_source = "image";
  double synth_lidar_thr = 0.5;
  int synth_rays_u = 0, synth_rays_v = 0;
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--rays-u", synth_rays_u,
                    "horizontal LiDAR ray count (0 keeps the layout value)");
  synth->add_option("--rays-v", synth_rays_v,
                    "vertical LiDAR ray count (0 keeps the layout value)");
  synth->add_option("--seed", synth_seed, "scene seed");
  synth->add_option("--layout", synth_layout, "default or wall");
  synth->add_option("--decalib-rot-deg", synth_rot,
                    "true-transform rotation offset, degrees");
  synth->add_option("--decalib-trans-m", synth_trans,
                    "true-transform translation offset, meters");
  synth->add_option("--edge-threshold", synth_edge, "Sobel threshold");
  synth->add_option("--depth-gap", synth_gap, "LiDAR edge depth gap, meters");
  synth->add_option("--intensity-threshold", synth_intensity,
                    "luminance threshold for intensity features");
  synth->add_option("--intensity-source", synth_source,
                    "intensity feature source")
      ->check(CLI::IsMember({"image", "lidar"}));
  synth->add_option("--lidar-intensity-threshold", synth_lidar_thr,
                    "reflectance threshold when --intensity-source lidar");
  synth->callback([&] {
    exit_code = cmd_synth(synth_out, synth_seed, synth_layout, synth_rot,
                          synth_trans, synth_edge, synth_gap, synth_intensity,
                          synth_source, synth_lidar_thr, synth_rays_u,
                          synth_rays_v);
  });

  // shared evolution flags
  auto add_evolution_flags = [](CLI::App* cmd, EvolutionConfig& cfg) {
    auto* pop = cmd->add_option("--pop", cfg.population_size,
                                "population size (even, >= 4)");
    auto* gens = cmd->add_option("--gens", cfg.generations, "generations");
    cmd->add_option("--sbx-prob", cfg.sbx_probability, "SBX probability");
    cmd->add_option("--sbx-eta", cfg.sbx_eta, "SBX distribution index");
    cmd->add_option("--pm-eta", cfg.pm_eta, "mutation distribution index");
    cmd->add_option("--pm-prob", cfg.pm_probability,
                    "per-variable mutation probability (default 1/7)");
    cmd->add_option("--threads", cfg.threads, "evaluation threads");
    cmd->add_flag("--no-dedup",
                  [&cfg](std::int64_t) { cfg.eliminate_duplicates = false; },
                  "keep duplicate offspring");
    return std::pair{pop, gens};
  };

  // calibrate
  auto* calibrate = app.add_subcommand(
      "calibrate", "run the bi-objective NSGA-II search");
  SceneFlags calibrate_scene;
  calibrate_scene.add_to(calibrate);
  std::string calibrate_out = ".";
  calibrate->add_option("--out-dir", calibrate_out, "output directory");
  EvolutionConfig calibrate_cfg;
  calibrate_cfg.threads = default_threads();
  auto [calibrate_pop, calibrate_gens] =
      add_evolution_flags(calibrate, calibrate_cfg);
  bool paper_scale = false;
  calibrate->add_flag("--paper-scale", paper_scale,
                      "population 1000 x 200 generations preset");
  calibrate->callback([&, calibrate_pop = calibrate_pop,
                       calibrate_gens = calibrate_gens] {
    exit_code = cmd_calibrate(calibrate_scene, calibrate_out, calibrate_cfg,
                              paper_scale, calibrate_pop->count() > 0,
                              calibrate_gens->count() > 0);
  });

  // epsilon
  auto* epsilon = app.add_subcommand(
      "epsilon", "epsilon-constrained single-objective verification sweep");
  SceneFlags epsilon_scene;
  epsilon_scene.add_to(epsilon);
  std::string epsilon_out = "epsilon.csv";
  std::string epsilon_values;
  int epsilon_count = 5;
  EvolutionConfig epsilon_cfg;
  epsilon_cfg.generations = 25;
  epsilon_cfg.threads = default_threads();
  epsilon->add_option("--out", epsilon_out, "output CSV");
  epsilon->add_option("--epsilons", epsilon_values,
                      "explicit cost bounds (comma list or start:end:step)");
  epsilon->add_option("--num-eps", epsilon_count,
                      "bounds to place across the achievable cost range");
  add_evolution_flags(epsilon, epsilon_cfg);
  epsilon->callback([&] {
    exit_code = cmd_epsilon(epsilon_scene, epsilon_out, epsilon_values,
                            epsilon_count, epsilon_cfg);
  });

  // knee
  auto* knee = app.add_subcommand("knee", "select the Pareto knee entry");
  std::string knee_archive, knee_out = "knee.txt", knee_svg;
  knee->add_option("--archive", knee_archive, "archive CSV")->required();
  knee->add_option("--out", knee_out, "knee summary file");
  knee->add_option("--svg", knee_svg, "front scatter with the knee marked");
  knee->callback(
      [&] { exit_code = cmd_knee(knee_archive, knee_out, knee_svg); });

  // innovize
  auto* innovize = app.add_subcommand(
      "innovize", "variable/objective correlation study over the archive");
  std::string innovize_archive, innovize_out = "correlations.csv";
  double innovize_threshold = 0.8;
  innovize->add_option("--archive", innovize_archive, "archive CSV")
      ->required();
  innovize->add_option("--out", innovize_out, "correlation matrix CSV");
  innovize->add_option("--threshold", innovize_threshold,
                       "|r| flag threshold");
  innovize->callback([&] {
    exit_code = cmd_innovize(innovize_archive, innovize_out,
                             innovize_threshold);
  });

  // robustness
  auto* robustness = app.add_subcommand(
      "robustness", "edge/intensity weight sweep");
  SceneFlags robustness_scene;
  robustness_scene.add_to(robustness, /*with_w1=*/false);
  std::string robustness_out = "robustness.csv";
  std::string robustness_w1 = "0.1:0.9:0.1";
  EvolutionConfig robustness_cfg;
  robustness_cfg.threads = default_threads();
  robustness->add_option("--out", robustness_out, "output CSV");
  robustness->add_option("--w1-list", robustness_w1,
                         "weights (comma list or start:end:step)");
  add_evolution_flags(robustness, robustness_cfg);
  robustness->callback([&] {
    exit_code = cmd_robustness(robustness_scene, robustness_out,
                               robustness_w1, robustness_cfg);
  });

  // project
  auto* project = app.add_subcommand(
      "project", "render projected feature points over the camera image");
  SceneFlags project_scene;
  project_scene.add_to(project);
  std::string project_out = "overlay.ppm";
  std::string project_genome;
  bool project_use_gt = false;
  project->add_option("--out", project_out, "output PPM");
  project->add_option("--genome", project_genome,
                      "candidate as 7 comma-separated values");
  project->add_flag("--use-gt", project_use_gt,
                    "project the scene's ground-truth transform");
  project->callback([&] {
    exit_code =
        cmd_project(project_scene, project_out, project_genome,
                    project_use_gt);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
