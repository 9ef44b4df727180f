#ifndef CALIB_CSV_HPP
#define CALIB_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "calib/analysis.hpp"
#include "calib/baselines.hpp"
#include "calib/data.hpp"
#include "calib/evolution.hpp"

namespace calib {

// Round-trip-exact decimal rendering shared by every CSV writer, so repeated
// runs emit byte-identical artifacts.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline constexpr const char* kArchiveCsvHeader =
    "x,y,z,yaw,pitch,roll,n,chamfer,comp_cost";

inline void write_archive_csv(const std::filesystem::path& path,
                              const ParetoArchive& archive) {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << kArchiveCsvHeader << "\n";
  for (const ParetoArchive::Entry& e : archive.entries()) {
    for (int i = 0; i < CalibrationVector::dim; ++i) {
      f << format_double(e.genome.component(i)) << ",";
    }
    f << format_double(e.objectives.chamfer) << ","
      << format_double(e.objectives.comp_cost) << "\n";
  }
}

inline ParetoArchive read_archive_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FileError("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kArchiveCsvHeader) {
    throw MalformedFileError(path.string() + ": missing archive CSV header");
  }
  ParetoArchive archive;
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream is(line);
    double values[9];
    std::string cell;
    for (int i = 0; i < 9; ++i) {
      if (!std::getline(is, cell, ',')) {
        throw MalformedFileError(path.string() + ": row " +
                                 std::to_string(row) + " has fewer than 9 "
                                 "columns");
      }
      try {
        values[i] = std::stod(cell);
      } catch (const std::exception&) {
        throw MalformedFileError(path.string() + ": row " +
                                 std::to_string(row) + ", column " +
                                 std::to_string(i + 1) + " is not a number");
      }
    }
    CalibrationVector g;
    for (int i = 0; i < CalibrationVector::dim; ++i) {
      g.component(i) = values[i];
    }
    archive.insert(g, ObjectiveVector{values[7], values[8]});
  }
  return archive;
}

inline void write_generations_csv(const std::filesystem::path& path,
                                  const std::vector<GenerationStats>& log) {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "generation,evaluations,best_chamfer,mean_chamfer,best_comp,"
       "archive_size,archive_hypervolume\n";
  for (const GenerationStats& s : log) {
    f << s.generation << "," << s.evaluations << ","
      << format_double(s.best_chamfer) << "," << format_double(s.mean_chamfer)
      << "," << format_double(s.best_comp) << "," << s.archive_size << ","
      << format_double(s.archive_hypervolume) << "\n";
  }
}

inline void write_epsilon_csv(const std::filesystem::path& path,
                              const std::vector<EpsilonResult>& results) {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "epsilon,feasible,chamfer,comp_cost,x,y,z,yaw,pitch,roll,n\n";
  for (const EpsilonResult& r : results) {
    f << format_double(r.epsilon) << "," << (r.feasible ? 1 : 0) << ","
      << format_double(r.achieved.chamfer) << ","
      << format_double(r.achieved.comp_cost);
    for (int i = 0; i < CalibrationVector::dim; ++i) {
      f << "," << format_double(r.solution.component(i));
    }
    f << "\n";
  }
}

inline void write_robustness_csv(const std::filesystem::path& path,
                                 const std::vector<RobustnessPoint>& sweep) {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  f << "w1,best_error\n";
  for (const RobustnessPoint& p : sweep) {
    f << format_double(p.w1) << "," << format_double(p.best_error) << "\n";
  }
}

inline void write_correlations_csv(const std::filesystem::path& path,
                                   const InnovizationReport& report) {
  std::ofstream f(path);
  if (!f) throw FileError("cannot write file: " + path.string());
  for (const std::string& label : report.labels) f << "," << label;
  f << "\n";
  for (int a = 0; a < InnovizationReport::columns; ++a) {
    f << report.labels[a];
    for (int b = 0; b < InnovizationReport::columns; ++b) {
      f << "," << format_double(report.r(a, b));
    }
    f << "\n";
  }
}

}  // namespace calib

#endif  // CALIB_CSV_HPP
