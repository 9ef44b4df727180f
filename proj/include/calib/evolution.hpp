#ifndef CALIB_EVOLUTION_HPP
#define CALIB_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "calib/hypervolume.hpp"
#include "calib/objectives.hpp"
#include "calib/problem.hpp"
#include "calib/rng.hpp"

namespace calib {

// True iff a is at least as good as b in both objectives and strictly
// better in one (minimization).
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.chamfer <= b.chamfer && a.comp_cost <= b.comp_cost &&
         (a.chamfer < b.chamfer || a.comp_cost < b.comp_cost);
}

inline bool weakly_dominates(const ObjectiveVector& a,
                             const ObjectiveVector& b) {
  return a.chamfer <= b.chamfer && a.comp_cost <= b.comp_cost;
}

struct Individual {
  CalibrationVector genome;
  ObjectiveVector objectives;
  int rank = -1;
  double crowding = 0.0;
};

struct EvolutionConfig {
  int population_size = 100;
  int generations = 100;
  double sbx_probability = 0.9;
  double sbx_eta = 15.0;
  // Negative means the 1/n_variables default.
  double pm_probability = -1.0;
  double pm_eta = 20.0;
  std::uint64_t seed = 0;
  bool eliminate_duplicates = true;
  int threads = 1;

  double mutation_probability() const {
    return pm_probability < 0.0 ? 1.0 / CalibrationVector::dim
                                : pm_probability;
  }

  void validate() const {
    if (population_size < 4 || population_size % 2 != 0) {
      throw std::invalid_argument(
          "EvolutionConfig: population_size must be even and >= 4");
    }
    if (generations < 0) {
      throw std::invalid_argument("EvolutionConfig: generations must be >= 0");
    }
    if (sbx_probability < 0.0 || sbx_probability > 1.0 ||
        mutation_probability() > 1.0) {
      throw std::invalid_argument(
          "EvolutionConfig: probabilities must lie in [0, 1]");
    }
    if (sbx_eta <= 0.0 || pm_eta <= 0.0) {
      throw std::invalid_argument(
          "EvolutionConfig: distribution indices must be > 0");
    }
    if (threads < 1) {
      throw std::invalid_argument("EvolutionConfig: threads must be >= 1");
    }
  }

  static EvolutionConfig paper_scale() {
    EvolutionConfig cfg;
    cfg.population_size = 1000;
    cfg.generations = 200;
    return cfg;
  }
};

// Non-dominated set of everything evaluated so far, kept sorted by chamfer
// ascending (hence comp_cost strictly descending). A candidate weakly
// dominated by an entry is rejected; entries weakly dominated by an accepted
// candidate are removed, so no two entries ever share an objective value.
class ParetoArchive {
 public:
  struct Entry {
    CalibrationVector genome;
    ObjectiveVector objectives;
  };

  bool insert(const CalibrationVector& genome, const ObjectiveVector& obj) {
    auto tail = std::lower_bound(
        entries_.begin(), entries_.end(), obj.chamfer,
        [](const Entry& e, double c) { return e.objectives.chamfer < c; });
    auto after = std::upper_bound(
        tail, entries_.end(), obj.chamfer,
        [](double c, const Entry& e) { return c < e.objectives.chamfer; });
    if (after != entries_.begin() &&
        std::prev(after)->objectives.comp_cost <= obj.comp_cost) {
      return false;
    }
    auto keep = tail;
    while (keep != entries_.end() &&
           keep->objectives.comp_cost >= obj.comp_cost) {
      ++keep;
    }
    auto pos = entries_.erase(tail, keep);
    entries_.insert(pos, Entry{genome, obj});
    return true;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Entries are sorted by chamfer, so the ends are the two extremes.
  const Entry& min_chamfer() const { return entries_.front(); }
  const Entry& min_cost() const { return entries_.back(); }

  std::vector<ObjectiveVector> objective_points() const {
    std::vector<ObjectiveVector> pts;
    pts.reserve(entries_.size());
    for (const Entry& e : entries_) pts.push_back(e.objectives);
    return pts;
  }

 private:
  std::vector<Entry> entries_;
};

// Deb's fast non-dominated sort. Front 0 is the non-dominated set; front k
// is non-dominated once fronts < k are removed. Indices within a front stay
// in ascending order.
inline std::vector<std::vector<int>> non_dominated_sort(
    const std::vector<ObjectiveVector>& objectives) {
  const int n = static_cast<int>(objectives.size());
  std::vector<std::vector<int>> fronts;
  if (n == 0) return fronts;
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> domination_count(n, 0);
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      if (dominates(objectives[p], objectives[q])) {
        dominated[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(objectives[q], objectives[p])) {
        dominated[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  std::vector<int> current;
  for (int p = 0; p < n; ++p) {
    if (domination_count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int p : current) {
      for (int q : dominated[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

// Crowding distance within one front. Boundary individuals per objective get
// +inf; interior ones accumulate neighbor-gap / objective-range, with a
// zero range contributing nothing.
inline std::vector<double> crowding_distance(
    const std::vector<ObjectiveVector>& front) {
  if (front.empty()) {
    throw std::invalid_argument("crowding_distance: empty front");
  }
  const std::size_t n = front.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), inf);
    return distance;
  }
  const auto accessors = {+[](const ObjectiveVector& o) { return o.chamfer; },
                          +[](const ObjectiveVector& o) { return o.comp_cost; }};
  std::vector<std::size_t> order(n);
  for (auto value : accessors) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return value(front[a]) < value(front[b]);
                     });
    distance[order.front()] = inf;
    distance[order.back()] = inf;
    const double range = value(front[order.back()]) - value(front[order.front()]);
    if (range <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (distance[order[i]] == inf) continue;
      distance[order[i]] +=
          (value(front[order[i + 1]]) - value(front[order[i - 1]])) / range;
    }
  }
  return distance;
}

// Uniform sample inside the bounds (FloatRandomSampling).
template <typename RngT>
CalibrationVector random_vector(const CalibrationBounds& bounds, RngT& rng) {
  CalibrationVector v;
  for (int i = 0; i < CalibrationVector::dim; ++i) {
    v.component(i) = rng.uniform(bounds.lower[i], bounds.upper[i]);
  }
  return v;
}

// Simulated binary crossover. With probability `probability` every variable
// is recombined through a spread factor drawn from the SBX distribution with
// index eta; children are clamped back into the bounds. Variables the
// parents agree on are copied through unchanged.
template <typename RngT>
std::pair<CalibrationVector, CalibrationVector> sbx_crossover(
    const CalibrationVector& a, const CalibrationVector& b,
    const CalibrationBounds& bounds, double probability, double eta,
    RngT& rng) {
  CalibrationVector c1 = a;
  CalibrationVector c2 = b;
  if (probability > 0.0 && rng.uniform() <= probability) {
    const double exponent = 1.0 / (eta + 1.0);
    for (int i = 0; i < CalibrationVector::dim; ++i) {
      const double u = rng.uniform();
      const double x1 = a.component(i);
      const double x2 = b.component(i);
      if (x1 == x2) continue;
      const double beta = u <= 0.5
                              ? std::pow(2.0 * u, exponent)
                              : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
      c1.component(i) = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
      c2.component(i) = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
    }
  }
  return {repair(c1, bounds), repair(c2, bounds)};
}

// Polynomial mutation (bounded variant): each variable mutates with
// probability `probability`; the perturbation distribution with index eta is
// shaped by the distance to the bounds, and the result is clamped.
template <typename RngT>
CalibrationVector polynomial_mutation(const CalibrationVector& x,
                                      const CalibrationBounds& bounds,
                                      double probability, double eta,
                                      RngT& rng) {
  CalibrationVector m = x;
  if (probability <= 0.0) return repair(m, bounds);
  const double mut_pow = 1.0 / (eta + 1.0);
  for (int i = 0; i < CalibrationVector::dim; ++i) {
    if (rng.uniform() > probability) continue;
    const double u = rng.uniform();
    const double lo = bounds.lower[i];
    const double hi = bounds.upper[i];
    const double span = hi - lo;
    if (span <= 0.0) continue;
    const double y = m.component(i);
    double deltaq;
    if (u <= 0.5) {
      const double xy = 1.0 - (y - lo) / span;
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
      deltaq = std::pow(val, mut_pow) - 1.0;
    } else {
      const double xy = 1.0 - (hi - y) / span;
      const double val =
          2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
      deltaq = 1.0 - std::pow(val, mut_pow);
    }
    m.component(i) = y + deltaq * span;
  }
  return repair(m, bounds);
}

using ObjectiveFn = std::function<ObjectiveVector(const CalibrationVector&)>;

namespace detail {

inline std::string describe_genome(const CalibrationVector& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[x=" << v.x << " y=" << v.y << " z=" << v.z << " yaw=" << v.yaw
     << " pitch=" << v.pitch << " roll=" << v.roll << " n=" << v.n << "]";
  return os.str();
}

// Evaluates genomes, optionally fanning out to worker threads. Results are
// stored at the genome's own index, so ordering never depends on the thread
// schedule; workers never touch the engine RNG.
template <typename Fn>
auto evaluate_all(const Fn& objective,
                  const std::vector<CalibrationVector>& genomes, int threads)
    -> std::vector<std::decay_t<std::invoke_result_t<const Fn&,
                                                     const CalibrationVector&>>> {
  using Result =
      std::decay_t<std::invoke_result_t<const Fn&, const CalibrationVector&>>;
  std::vector<Result> results(genomes.size());
  std::vector<std::string> errors;
  auto run_range = [&](std::size_t begin, std::size_t end,
                       std::string* error) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        results[i] = objective(genomes[i]);
      } catch (const std::exception& e) {
        *error = "objective evaluation failed for genome " +
                 describe_genome(genomes[i]) + ": " + e.what();
        return;
      }
    }
  };
  const int workers =
      std::min<int>(threads, static_cast<int>(genomes.size()));
  if (workers <= 1) {
    std::string error;
    run_range(0, genomes.size(), &error);
    if (!error.empty()) throw std::runtime_error(error);
    return results;
  }
  errors.assign(workers, {});
  std::vector<std::thread> pool;
  const std::size_t chunk = (genomes.size() + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(genomes.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run_range, begin, end, &errors[w]);
  }
  for (std::thread& t : pool) t.join();
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return results;
}

// Binary tournament on (rank asc, crowding desc), index as the final tie
// break for determinism.
inline int binary_tournament(const std::vector<Individual>& pop, Rng& rng) {
  const int a = static_cast<int>(rng.integer(pop.size()));
  const int b = static_cast<int>(rng.integer(pop.size()));
  if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank ? a : b;
  if (pop[a].crowding != pop[b].crowding) {
    return pop[a].crowding > pop[b].crowding ? a : b;
  }
  return std::min(a, b);
}

// Non-dominated sort + crowding over `combined`, then truncate to `target`
// with the usual (rank, crowding desc, index) order. Survivors keep the rank
// and crowding assigned here.
inline std::vector<Individual> environmental_selection(
    std::vector<Individual> combined, int target) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(combined.size());
  for (const Individual& ind : combined) objs.push_back(ind.objectives);
  const auto fronts = non_dominated_sort(objs);
  std::vector<Individual> next;
  next.reserve(target);
  for (std::size_t f = 0; f < fronts.size() && static_cast<int>(next.size()) < target; ++f) {
    const std::vector<int>& front = fronts[f];
    std::vector<ObjectiveVector> front_objs;
    front_objs.reserve(front.size());
    for (int idx : front) front_objs.push_back(objs[idx]);
    const std::vector<double> crowd = crowding_distance(front_objs);
    for (std::size_t i = 0; i < front.size(); ++i) {
      combined[front[i]].rank = static_cast<int>(f);
      combined[front[i]].crowding = crowd[i];
    }
    if (static_cast<int>(next.size() + front.size()) <= target) {
      for (int idx : front) next.push_back(combined[idx]);
    } else {
      std::vector<int> order(front.begin(), front.end());
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (combined[a].crowding != combined[b].crowding) {
          return combined[a].crowding > combined[b].crowding;
        }
        return a < b;
      });
      for (int idx : order) {
        if (static_cast<int>(next.size()) >= target) break;
        next.push_back(combined[idx]);
      }
    }
  }
  return next;
}

inline void assign_ranks(std::vector<Individual>& population) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(population.size());
  for (const Individual& ind : population) objs.push_back(ind.objectives);
  const auto fronts = non_dominated_sort(objs);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<ObjectiveVector> front_objs;
    front_objs.reserve(fronts[f].size());
    for (int idx : fronts[f]) front_objs.push_back(objs[idx]);
    const std::vector<double> crowd = crowding_distance(front_objs);
    for (std::size_t i = 0; i < fronts[f].size(); ++i) {
      population[fronts[f][i]].rank = static_cast<int>(f);
      population[fronts[f][i]].crowding = crowd[i];
    }
  }
}

}  // namespace detail

struct GenerationStats {
  int generation = 0;
  long long evaluations = 0;
  double best_chamfer = 0.0;
  double mean_chamfer = 0.0;
  double best_comp = 0.0;
  std::size_t archive_size = 0;
  double archive_hypervolume = 0.0;
};

struct EvolutionResult {
  std::vector<Individual> population;
  ParetoArchive archive;
  std::vector<GenerationStats> log;
  // Hypervolume reference: componentwise max over every evaluation, +10%.
  ObjectiveVector reference_point;
};

// The NSGA-II generational loop. Fully deterministic given cfg.seed: the
// single RNG stream is consumed in a fixed order (sampling, then per
// offspring pair selection, crossover, mutation) regardless of how
// evaluations are parallelized.
inline EvolutionResult evolve(const CalibrationBounds& bounds,
                              const ObjectiveFn& objective,
                              const EvolutionConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int pop_size = cfg.population_size;

  EvolutionResult result;
  std::vector<std::vector<ObjectiveVector>> archive_snapshots;
  ObjectiveVector seen_max{0.0, 0.0};
  long long evaluations = 0;

  auto track = [&](const std::vector<Individual>& evaluated) {
    for (const Individual& ind : evaluated) {
      result.archive.insert(ind.genome, ind.objectives);
      seen_max.chamfer = std::max(seen_max.chamfer, ind.objectives.chamfer);
      seen_max.comp_cost =
          std::max(seen_max.comp_cost, ind.objectives.comp_cost);
    }
  };

  auto log_generation = [&](int gen, const std::vector<Individual>& pop) {
    GenerationStats s;
    s.generation = gen;
    s.evaluations = evaluations;
    s.best_chamfer = std::numeric_limits<double>::infinity();
    s.best_comp = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const Individual& ind : pop) {
      s.best_chamfer = std::min(s.best_chamfer, ind.objectives.chamfer);
      s.best_comp = std::min(s.best_comp, ind.objectives.comp_cost);
      sum += ind.objectives.chamfer;
    }
    s.mean_chamfer = sum / static_cast<double>(pop.size());
    s.archive_size = result.archive.size();
    result.log.push_back(s);
    archive_snapshots.push_back(result.archive.objective_points());
  };

  // Initial population.
  std::vector<CalibrationVector> genomes(pop_size);
  for (CalibrationVector& g : genomes) g = random_vector(bounds, rng);
  {
    const auto objs = detail::evaluate_all(objective, genomes, cfg.threads);
    evaluations += static_cast<long long>(genomes.size());
    std::vector<Individual>& pop = result.population;
    pop.resize(pop_size);
    for (int i = 0; i < pop_size; ++i) {
      pop[i] = Individual{genomes[i], objs[i]};
    }
    track(pop);
    detail::assign_ranks(pop);
    log_generation(0, pop);
  }

  const double pm_prob = cfg.mutation_probability();
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<Individual>& pop = result.population;

    std::vector<CalibrationVector> offspring;
    offspring.reserve(pop_size);
    auto is_duplicate = [&](const CalibrationVector& c) {
      for (const Individual& ind : pop) {
        if (ind.genome == c) return true;
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
      const int p1 = detail::binary_tournament(pop, rng);
      const int p2 = detail::binary_tournament(pop, rng);
      auto [c1, c2] = sbx_crossover(pop[p1].genome, pop[p2].genome, bounds,
                                    cfg.sbx_probability, cfg.sbx_eta, rng);
      c1 = polynomial_mutation(c1, bounds, pm_prob, cfg.pm_eta, rng);
      c2 = polynomial_mutation(c2, bounds, pm_prob, cfg.pm_eta, rng);
      for (const CalibrationVector& c : {c1, c2}) {
        if (static_cast<int>(offspring.size()) >= pop_size) break;
        if (cfg.eliminate_duplicates && is_duplicate(c)) continue;
        offspring.push_back(c);
      }
    }
    while (static_cast<int>(offspring.size()) < pop_size) {
      offspring.push_back(random_vector(bounds, rng));
    }

    const auto objs = detail::evaluate_all(objective, offspring, cfg.threads);
    evaluations += static_cast<long long>(offspring.size());
    std::vector<Individual> combined = pop;
    combined.reserve(2 * pop_size);
    for (int i = 0; i < pop_size; ++i) {
      combined.push_back(Individual{offspring[i], objs[i]});
    }
    track({combined.begin() + pop_size, combined.end()});
    result.population = detail::environmental_selection(std::move(combined),
                                                        pop_size);
    log_generation(gen, result.population);
  }

  result.reference_point = {
      seen_max.chamfer > 0.0 ? 1.1 * seen_max.chamfer : 1.0,
      seen_max.comp_cost > 0.0 ? 1.1 * seen_max.comp_cost : 1.0};
  for (std::size_t g = 0; g < result.log.size(); ++g) {
    result.log[g].archive_hypervolume =
        hypervolume_2d(archive_snapshots[g], result.reference_point);
  }
  return result;
}

}  // namespace calib

#endif  // CALIB_EVOLUTION_HPP
