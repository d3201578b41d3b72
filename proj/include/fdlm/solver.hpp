#pragma once

// Finite-difference L-BFGS driver with noise-adaptive intervals.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdlm/fd_gradient.hpp"
#include "fdlm/lbfgs.hpp"
#include "fdlm/line_search.hpp"
#include "fdlm/noise_estimation.hpp"
#include "fdlm/problems.hpp"
#include "fdlm/recovery.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

struct StopConfig {
  double grad_tol = 1e-6;       // |g|_inf <= grad_tol
  double fval_tau_hat = 2.0;    // |f_k - f_{k-1}| <= tau_hat * eps_f
  std::size_t ma_window = 10;   // M
  double ma_tol = 1e-8;         // |f_MA - f_k| <= ma_tol * max(1, |f_MA|)
  bool use_grad = true;
  bool use_fval = true;
  bool use_ma = true;

  void validate() const;
};

/// Stopping tests used by benchmark runs: gradient test at 1e-8 only.
StopConfig bench_stop_config();

enum class StopReason {
  grad_tol,
  fval_change,
  moving_average,
  budget,
  line_search_failed,
  evaluation_error,
};
std::string to_string(StopReason r);

struct StopState {
  VecView grad;
  std::span<const double> f_history;  // oldest first, ends with f_k
  double eps_f = 0.0;
  bool moved = true;  // false when the last iteration kept x
};

/// First enabled test that fires, in the order gradient, function change,
/// moving average. The function-value tests need a step that moved x;
/// the moving average also needs at least M values.
std::optional<StopReason> check_stop(const StopState& state, const StopConfig& stop);

struct SolverConfig {
  FDScheme scheme;
  std::size_t budget = 0;  // 0 selects 100 n
  LineSearchConfig ls;
  RecoveryConfig rec;
  bool recovery = true;
  std::size_t m = 10;
  double zeta = 1e-8;
  StopConfig stop;
  std::uint64_t seed = 0;
  bool parallel = false;
  // Difference-table settings; the noise kind of the objective only picks
  // defaults for q and delta when these are unset.
  std::size_t noise_q = 0;
  double noise_delta = 0.0;
};

struct IterationRecord {
  std::size_t k = 0;
  double f = 0.0;
  double phi_gap = 0.0;  // NaN when phi* is unknown
  double alpha = 0.0;
  double h = 0.0;
  double eps_f = 0.0;
  double grad_inf = 0.0;
  std::optional<LsFlag> ls_flag;  // empty at k = 0
  int recovery_case = 0;
  std::uint64_t t_count = 0;
  std::uint64_t t_ecn = 0;
  std::uint64_t t_grad = 0;
  std::uint64_t t_ls = 0;
  std::uint64_t t_rec = 0;
};

struct RunHistory {
  std::string problem;
  std::size_t n = 0;
  std::vector<IterationRecord> records;
  StopReason reason = StopReason::budget;
  std::string error;  // set for evaluation_error
  Vector x_final;
  double f_final = 0.0;
  std::uint64_t budget = 0;
  std::uint64_t gradients = 0;
  std::array<std::uint64_t, 6> recovery_cases{};  // index 1..5
  std::uint64_t objective_evals = 0;  // counter delta observed on the objective
  NoiseEstimate initial_noise;
  CurvatureEstimate initial_curvature;

  const IterationRecord& last() const { return records.back(); }
  /// 1 + t_ecn + t_grad + t_ls + t_rec of the last record.
  std::uint64_t reconstructed_count() const;
};

/// Runs the method from x0 until the budget is spent or a stopping test
/// fires. Evaluation failures end the run with reason evaluation_error and
/// keep the partial history.
RunHistory solve(Objective& obj, VecView x0, const SolverConfig& cfg);

void write_history_csv(const RunHistory& h, std::ostream& os);
std::string history_summary_json(const RunHistory& h);

}  // namespace fdlm
