#ifndef CALIB_BASELINES_HPP
#define CALIB_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "calib/evolution.hpp"
#include "calib/objectives.hpp"
#include "calib/problem.hpp"
#include "calib/rng.hpp"

namespace calib {

using ScalarObjectiveFn = std::function<double(const CalibrationVector&)>;

inline constexpr double kEpsilonFeasibilityTol = 1e-6;

namespace detail {

// Elitist (mu + lambda) genetic algorithm sharing the NSGA-II operators.
// `Score` must order with `less`; the per-generation best is therefore
// monotonically non-increasing. When pin_n is set the sample-count variable
// is held at its upper bound everywhere.
template <typename ScoreFn, typename Less>
struct GaRun {
  using Score = std::decay_t<std::invoke_result_t<const ScoreFn&,
                                                  const CalibrationVector&>>;
  std::vector<CalibrationVector> genomes;
  std::vector<Score> scores;
  std::vector<Score> trace;
};

template <typename ScoreFn, typename Less>
GaRun<ScoreFn, Less> ga_minimize(const CalibrationBounds& bounds,
                                 const ScoreFn& score_fn, const Less& less,
                                 const EvolutionConfig& cfg, bool pin_n) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int pop_size = cfg.population_size;
  const double n_top = bounds.upper[6];
  auto pin = [&](CalibrationVector v) {
    if (pin_n) v.n = n_top;
    return v;
  };

  GaRun<ScoreFn, Less> run;
  run.genomes.resize(pop_size);
  for (CalibrationVector& g : run.genomes) {
    g = pin(random_vector(bounds, rng));
  }
  run.scores = evaluate_all(score_fn, run.genomes, cfg.threads);

  auto best_index = [&]() {
    std::size_t best = 0;
    for (std::size_t i = 1; i < run.scores.size(); ++i) {
      if (less(run.scores[i], run.scores[best])) best = i;
    }
    return best;
  };
  run.trace.push_back(run.scores[best_index()]);

  const double pm_prob = cfg.mutation_probability();
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    auto tournament = [&]() {
      const std::size_t a = rng.integer(pop_size);
      const std::size_t b = rng.integer(pop_size);
      if (less(run.scores[a], run.scores[b])) return a;
      if (less(run.scores[b], run.scores[a])) return b;
      return std::min(a, b);
    };

    std::vector<CalibrationVector> offspring;
    offspring.reserve(pop_size);
    auto is_duplicate = [&](const CalibrationVector& c) {
      for (const CalibrationVector& g : run.genomes) {
        if (g == c) return true;
      }
      for (const CalibrationVector& g : offspring) {
        if (g == c) return true;
      }
      return false;
    };
    const long long max_matings = 50LL * pop_size;
    long long matings = 0;
    while (static_cast<int>(offspring.size()) < pop_size &&
           matings < max_matings) {
      ++matings;
      const CalibrationVector& p1 = run.genomes[tournament()];
      const CalibrationVector& p2 = run.genomes[tournament()];
      auto [c1, c2] = sbx_crossover(p1, p2, bounds, cfg.sbx_probability,
                                    cfg.sbx_eta, rng);
      for (CalibrationVector c : {c1, c2}) {
        if (static_cast<int>(offspring.size()) >= pop_size) break;
        c = pin(polynomial_mutation(c, bounds, pm_prob, cfg.pm_eta, rng));
        if (cfg.eliminate_duplicates && is_duplicate(c)) continue;
        offspring.push_back(c);
      }
    }
    while (static_cast<int>(offspring.size()) < pop_size) {
      offspring.push_back(pin(random_vector(bounds, rng)));
    }

    auto off_scores = evaluate_all(score_fn, offspring, cfg.threads);

    std::vector<CalibrationVector> combined = run.genomes;
    combined.insert(combined.end(), offspring.begin(), offspring.end());
    std::vector<typename GaRun<ScoreFn, Less>::Score> combined_scores =
        run.scores;
    combined_scores.insert(combined_scores.end(), off_scores.begin(),
                           off_scores.end());
    std::vector<std::size_t> order(combined.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return less(combined_scores[a], combined_scores[b]);
                     });
    for (int i = 0; i < pop_size; ++i) {
      run.genomes[i] = combined[order[i]];
      run.scores[i] = combined_scores[order[i]];
    }
    run.trace.push_back(run.scores[0]);
  }
  return run;
}

}  // namespace detail

struct SingleObjectiveResult {
  CalibrationVector best;
  double best_value = 0.0;
  // Per-generation best, index 0 being the initial population.
  std::vector<double> trace;
};

// Chamfer-only genetic minimization. By default the sample count is pinned
// at n_max so every candidate is scored at full resolution.
inline SingleObjectiveResult single_objective_minimize(
    const CalibrationBounds& bounds, const ScalarObjectiveFn& objective,
    const EvolutionConfig& cfg, bool pin_n = true) {
  auto run = detail::ga_minimize(bounds, objective, std::less<double>{}, cfg,
                                 pin_n);
  SingleObjectiveResult result;
  std::size_t best = 0;
  for (std::size_t i = 1; i < run.scores.size(); ++i) {
    if (run.scores[i] < run.scores[best]) best = i;
  }
  result.best = run.genomes[best];
  result.best_value = run.scores[best];
  result.trace = std::move(run.trace);
  return result;
}

inline SingleObjectiveResult single_objective_minimize(
    const CalibrationScene& scene, const CalibrationBounds& bounds,
    const EvaluatorOptions& options, const EvolutionConfig& cfg,
    bool pin_n = true) {
  Evaluator evaluator(scene, bounds, options);
  return single_objective_minimize(
      bounds,
      [evaluator](const CalibrationVector& x) { return evaluator(x).chamfer; },
      cfg, pin_n);
}

struct EpsilonResult {
  double epsilon = 0.0;
  bool feasible = false;
  CalibrationVector solution;
  ObjectiveVector achieved;
};

// The budget asymmetry the epsilon runs default to: a quarter of the
// NSGA-II generation budget.
inline EvolutionConfig epsilon_default_budget(const EvolutionConfig& nsga) {
  EvolutionConfig cfg = nsga;
  cfg.generations = std::max(1, nsga.generations / 4);
  return cfg;
}

// For each epsilon, minimizes chamfer subject to comp_cost <= epsilon with a
// death penalty: any feasible candidate outranks any infeasible one, and
// infeasible candidates order by constraint violation. Runs share the seed
// and budget. Because a solution feasible under a tight bound stays feasible
// under looser ones, every run's best is pooled and each epsilon reports the
// best pooled candidate it admits; chamfer is therefore non-increasing in
// epsilon.
inline std::vector<EpsilonResult> epsilon_constraint_sweep(
    const CalibrationBounds& bounds, const ObjectiveFn& objective,
    const std::vector<double>& epsilons, const EvolutionConfig& cfg) {
  struct Scored {
    ObjectiveVector objectives;
    double violation = 0.0;
  };
  std::vector<Scored> pool;
  std::vector<CalibrationVector> pool_genomes;

  for (double eps : epsilons) {
    auto score_fn = [&](const CalibrationVector& x) {
      const ObjectiveVector obj = objective(x);
      return Scored{obj, std::max(0.0, obj.comp_cost - eps)};
    };
    auto less = [](const Scored& a, const Scored& b) {
      if (a.violation != b.violation) return a.violation < b.violation;
      return a.objectives.chamfer < b.objectives.chamfer;
    };
    auto run = detail::ga_minimize(bounds, score_fn, less, cfg, false);
    pool.push_back(run.scores[0]);
    pool_genomes.push_back(run.genomes[0]);
  }

  std::vector<EpsilonResult> results;
  results.reserve(epsilons.size());
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    EpsilonResult r;
    r.epsilon = epsilons[k];
    int best = -1;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (pool[j].objectives.comp_cost >
          epsilons[k] + kEpsilonFeasibilityTol) {
        continue;
      }
      if (best < 0 ||
          pool[j].objectives.chamfer < pool[best].objectives.chamfer) {
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      r.feasible = true;
      r.solution = pool_genomes[best];
      r.achieved = pool[best].objectives;
    } else {
      // No run produced a candidate within this bound; report the run's own
      // best attempt, flagged infeasible.
      r.feasible = false;
      r.solution = pool_genomes[k];
      r.achieved = pool[k].objectives;
    }
    results.push_back(r);
  }
  return results;
}

inline std::vector<EpsilonResult> epsilon_constraint_sweep(
    const CalibrationScene& scene, const CalibrationBounds& bounds,
    const EvaluatorOptions& options, const std::vector<double>& epsilons,
    const EvolutionConfig& cfg) {
  Evaluator evaluator(scene, bounds, options);
  return epsilon_constraint_sweep(
      bounds,
      [evaluator](const CalibrationVector& x) { return evaluator(x); },
      epsilons, cfg);
}

}  // namespace calib

#endif  // CALIB_BASELINES_HPP
