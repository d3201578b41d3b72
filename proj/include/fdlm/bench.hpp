#pragma once

// Benchmark grids, the convergence test, performance and data profiles,
// and the paired comparison with and without recovery.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fdlm/problems.hpp"
#include "fdlm/solver.hpp"

namespace fdlm {

/// Solved when the reduction f0 - fk is at least (1 - tau) of the best
/// reduction f0 - fL. Throws when f0 < fL.
bool convergence_test(double f0, double fk, double fL, double tau);

struct NoiseSetting {
  NoiseKind kind = NoiseKind::none;
  double xi = 0.0;
};

enum class Variant { fdlm_fd, fdlm_cd, fdlm_fd_norec, fdlm_cd_norec, coord_search_baseline };
std::string to_string(Variant v);
Variant parse_variant(std::string_view s);
const std::vector<Variant>& all_variants();

/// Solver settings a variant runs with (bench stopping tests).
SolverConfig variant_config(Variant v, std::size_t budget, std::uint64_t seed);

/// Cyclic search along +-e_i, halving the step after a pass without
/// improvement. Its evaluations are booked as search evaluations.
RunHistory coordinate_search(Objective& obj, VecView x0, std::size_t budget,
                             double initial_step = 1.0);

struct BenchGrid {
  std::vector<std::string> problems;
  std::vector<NoiseSetting> noises;
  std::vector<Variant> variants;
  std::size_t seeds = 1;
  std::uint64_t master_seed = 0;
  std::size_t budget_factor = 100;  // budget = factor * n
};

/// Ten registry problems, four noise kinds at xi = 1e-6 and 1e-2, all
/// variants, two seeds.
BenchGrid default_grid();

struct BenchRun {
  std::string id;
  std::string problem;
  std::size_t n = 0;
  NoiseSetting noise;
  Variant variant = Variant::fdlm_fd;
  std::uint64_t seed = 0;  // index within the grid
  std::uint64_t budget = 0;
  RunHistory history;

  /// (problem, noise, seed): runs sharing it form one profile instance.
  std::string instance() const;
  double final_gap() const;
  bool reconciled() const;
};

/// Seed handed to the objective and solver of one instance.
std::uint64_t instance_seed(std::uint64_t master, std::string_view instance);

/// Runs every (problem, noise, seed, variant) combination on `workers`
/// threads. Results come back in grid order regardless of scheduling.
std::vector<BenchRun> run_grid(const BenchGrid& grid, unsigned workers);

struct ProfileCurve {
  std::string solver;
  std::vector<double> values;  // sorted finite abscissae, one per solved instance
  std::size_t total = 0;       // instance count

  /// Fraction of instances with value <= x.
  double at(double x) const;
};

struct ProfileSet {
  double tau = 0.0;
  std::vector<ProfileCurve> performance;  // eval ratios to the best solver
  std::vector<ProfileCurve> data;         // evals / (n + 1)
  std::size_t instances = 0;
};

/// Lowest gap per instance over every run and iterate.
std::vector<std::pair<std::string, double>> best_gaps(const std::vector<BenchRun>& runs);

/// Evaluations until the convergence test first holds, or empty.
std::optional<std::uint64_t> evals_to_solve(const BenchRun& run, double fL, double tau);

/// Profiles over the given solvers (all present in `runs` when empty).
ProfileSet build_profiles(const std::vector<BenchRun>& runs, double tau,
                          const std::vector<Variant>& solvers = {});

struct AblationPair {
  std::string instance;
  Variant with_recovery;
  double gap_with = 0.0;
  double gap_without = 0.0;
  bool recovery_fired = false;
};

struct AblationSummary {
  std::vector<AblationPair> pairs;
  std::size_t wins = 0;  // gap_with <= gap_without
  double win_fraction() const {
    return pairs.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(pairs.size());
  }
};

/// Pairs each recovery-enabled run with its _norec twin.
AblationSummary recovery_ablation(const std::vector<BenchRun>& runs);

void write_profile_csv(const ProfileSet& p, std::ostream& os, bool data);
std::string profile_svg(const std::vector<ProfileCurve>& curves, const std::string& title,
                        const std::string& x_label, bool log2_x);

/// Reads runs/<id>.csv files written by write_bench_outputs back into runs
/// (histories carry the logged columns only). Sorted by id.
std::vector<BenchRun> load_runs(const std::filesystem::path& runs_dir,
                                std::size_t budget_factor = 100);

/// Writes runs/<id>.csv, profiles/<tag>.{csv,svg} and summary.json under dir.
void write_bench_outputs(const std::vector<BenchRun>& runs, const std::vector<double>& taus,
                         const std::filesystem::path& dir);
/// profiles/ and summary.json only.
void write_profile_outputs(const std::vector<BenchRun>& runs, const std::vector<double>& taus,
                           const std::filesystem::path& dir);

}  // namespace fdlm
