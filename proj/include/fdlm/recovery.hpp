#pragma once

// Fallback after a failed line search: re-estimate the differencing
// interval, take a small step along d, jump to the best stencil point, or
// re-estimate the noise along a random direction.

#include <cstddef>
#include <limits>
#include <optional>
#include <random>

#include "fdlm/fd_gradient.hpp"
#include "fdlm/noise_estimation.hpp"
#include "fdlm/problems.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

struct RecoveryConfig {
  double gamma1 = 0.5;
  double gamma2 = 2.0;
  double c1 = 1e-4;

  void validate() const;
};

/// State of the run that recovery reads and may refresh.
struct RecoveryContext {
  FDScheme scheme;
  double eps_f = 0.0;
  CurvatureEstimate curv;
  NoiseProbeConfig probe;  // direction is overwritten; q, delta, kind kept
  std::mt19937_64* rng = nullptr;  // required for the random direction
  std::size_t max_evals = std::numeric_limits<std::size_t>::max();
};

struct RecoveryOutcome {
  Vector x_plus;
  double f_plus = 0.0;
  double h_new = 0.0;
  int case_id = 0;  // 1..5
  std::size_t evals = 0;
  std::optional<double> new_eps_f;
  std::optional<CurvatureEstimate> new_curv;
  bool budget_exhausted = false;
};

/// Classifies and resolves a line-search failure at (x_k, f_k) with search
/// direction d and gradient estimate g.
///   1: re-estimated interval outside [gamma1 h, gamma2 h]; keep x_k.
///   2: x_h = x_k + h d/|d| satisfies strict Armijo with a = h/|d|.
///   3: f_h <= f_s and f_h <= f_k; accept x_h.
///   4: f_k > f_s and f_h > f_s; accept the stencil best.
///   5: keep x_k and re-estimate noise along a random direction.
/// In smooth mode no noise is estimated and the interval is kept.
RecoveryOutcome recover(Objective& obj, VecView x_k, double f_k, VecView d,
                        VecView g, double h, const StencilBest& best,
                        const RecoveryConfig& cfg, const RecoveryContext& ctx);

}  // namespace fdlm
