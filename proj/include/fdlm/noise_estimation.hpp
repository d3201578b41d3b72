#pragma once

// Noise level estimation from Hamming's difference table.
//
// f is sampled at q+1 equally spaced points x + u_i * delta * v with
// u_i = -q/2 + i. Column j of the table holds the j-th forward differences;
// for i.i.d. noise every column's scaled mean square s_j^2 estimates the
// noise variance, while the contribution of the smooth part decays with j.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fdlm/problems.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

/// gamma_j = (j!)^2 / (2j)!
double gamma_coefficient(std::size_t j);

struct DifferenceTable {
  Vector values;                   // q+1 raw samples
  std::vector<Vector> columns;     // columns[j-1][i] = T[i][j]
  Vector sigma;                    // sigma[j-1] = s_j
  std::vector<bool> sign_change;   // sign_change[j-1]

  std::size_t q() const { return values.empty() ? 0 : values.size() - 1; }
  double entry(std::size_t i, std::size_t j) const { return columns[j - 1][i]; }
  double s(std::size_t j) const { return sigma[j - 1]; }
  bool changes_sign(std::size_t j) const { return sign_change[j - 1]; }
};

/// Builds the full table from at least four samples.
DifferenceTable build_table(VecView samples);

struct NoiseLevel {
  std::size_t order = 0;
  double eps_f = 0.0;
};

/// Smallest order j whose column changes sign and whose estimates
/// s_j, s_{j+1}, s_{j+2} (truncated at q) lie within `agreement` of each
/// other. Empty when no order qualifies.
std::optional<NoiseLevel> select_noise_level(const DifferenceTable& table,
                                             double agreement = 4.0);

struct NoiseProbeConfig {
  std::size_t q = 6;
  double delta = 0.0;  // 0 selects default_delta(x, kind)
  NoiseKind kind = NoiseKind::deterministic_additive;  // only picks defaults
  Vector direction;    // unit vector
  std::size_t max_retries = 1;
  double agreement = 4.0;
  // Hard cap on evaluations, used by callers working against a budget.
  std::size_t max_evals = std::numeric_limits<std::size_t>::max();
};

/// 4 spacings for stochastic kinds, 6 otherwise.
std::size_t default_q(NoiseKind kind);
/// 1e-6 * max(1, |x|_inf) for stochastic kinds, where samples need not be
/// spread out to decorrelate; 1e-2 * max(1, |x|_inf) otherwise.
double default_delta(VecView x, NoiseKind kind);

/// Probe configuration with the defaults for a noise kind.
NoiseProbeConfig default_probe_config(NoiseKind kind, Vector direction);

enum class NoiseStatus { ok, fallback, failed };
std::string to_string(NoiseStatus s);

struct NoiseEstimate {
  double eps_f = 0.0;
  std::size_t order_j = 0;
  double delta_used = 0.0;
  std::size_t evals = 0;
  NoiseStatus status = NoiseStatus::failed;
  std::size_t attempts = 0;
  DifferenceTable table;  // table of the last attempt
};

/// Samples f along the configured ray and applies select_noise_level,
/// rescaling delta between attempts. When every attempt fails, eps_f is
/// `fallback` if given, else machine precision * max(1, |f(x)|).
NoiseEstimate estimate_noise(Objective& obj, VecView x,
                             const NoiseProbeConfig& cfg,
                             std::optional<double> fallback = std::nullopt);

/// Estimate used when no table is built: machine precision relative to |f|.
NoiseEstimate machine_precision_estimate(double f_x);

}  // namespace fdlm
