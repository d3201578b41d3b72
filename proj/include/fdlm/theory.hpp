#pragma once

// Empirical checks of the convergence guarantees for gradient descent with
// noisy gradients: the fixed-step contraction and the relaxed-Armijo
// line-search contraction on strongly convex quadratics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "fdlm/problems.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

// Fixed steplength ------------------------------------------------------

/// e(x, k): gradient error injected at iterate k.
using NoiseInjector = std::function<Vector(VecView x, std::size_t k)>;

struct FixedStepTrajectory {
  std::vector<double> phi;     // phi(x_0) .. phi(x_K)
  std::vector<double> e_norm;  // |e(x_k)|, k = 0 .. K-1
  Vector x_final;
};

/// K steps of x_{k+1} = x_k - alpha (grad phi(x_k) + e(x_k)).
FixedStepTrajectory fixed_step_iterate(const std::function<double(VecView)>& phi,
                                       const std::function<Vector(VecView)>& grad,
                                       const NoiseInjector& noise, VecView x0,
                                       double alpha, std::size_t K);

struct FixedStepReport {
  std::size_t steps = 0;
  std::size_t contraction_violations = 0;  // per-step inequality
  std::size_t envelope_violations = 0;     // R-linear envelope
  std::size_t noise_bound_violations = 0;  // |e| > eps_g_bar
  double floor = 0.0;                      // eps_g_bar^2 / (2 mu)
  double trailing_mean_gap = 0.0;

  bool all_pass() const {
    return contraction_violations == 0 && envelope_violations == 0 &&
           noise_bound_violations == 0;
  }
};

/// Checks, at every step and with no tolerance,
///   phi_{k+1} - (phi* + c) <= (1 - alpha mu) (phi_k - (phi* + c)),
///   phi_k - phi* <= (1 - alpha mu)^k (phi_0 - phi* - c) + c,
/// with c = eps_g_bar^2 / (2 mu). The trailing mean covers the last
/// `trailing` gaps.
FixedStepReport check_fixed_step(const FixedStepTrajectory& t, double phi_star,
                                 double mu, double alpha, double eps_g_bar,
                                 std::size_t trailing = 50);

/// Uniform draw from the ball of radius r.
Vector random_in_ball(std::size_t n, double r, std::mt19937_64& rng);

// Relaxed-Armijo line search ---------------------------------------------

struct TheoryParams {
  double mu = 1.0;
  double L = 1.0;
  double c1 = 0.1;
  double tau = 0.5;
  double beta = 0.6;
  double eps_g_bar = 0.0;
  double eps_f_bar = 0.0;
  double eps_A = 0.0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  double rho() const;       // 1 - 2 mu c1 tau (1-beta)^2 / L
  double eta() const;       // per-step additive term
  double eta_bar() const;   // closed form of eta / (1 - rho)
  double simplified_rho() const;      // beta = 1 - 4 c1
  double simplified_eta_bar() const;  // beta = 1 - 4 c1

  /// beta = 1 - 4 c1, eps_A = 2 eps_f_bar, eps_g_bar = 2 sqrt(L eps_f_bar).
  static TheoryParams with_fd_noise(double mu, double L, double c1, double tau,
                                    double eps_f_bar);
};

/// Componentwise forward-difference error bound 2 sqrt(L eps_f) attained
/// by the interval 2 sqrt(eps_f / L).
double fd_error_bound(double L, double eps_f);
double fd_bound_interval(double L, double eps_f);

struct LineSearchTheoryReport {
  std::size_t steps = 0;
  std::size_t contraction_violations = 0;
  std::size_t floor_checks = 0;       // steps with beta_k <= beta
  std::size_t floor_violations = 0;   // ... where alpha_k <= tau / L
  std::size_t search_failures = 0;
  double max_error_ratio = 0.0;       // max |e| / eps_g_bar
  double rho = 0.0;
  double eta_bar = 0.0;
  double final_gap = 0.0;
  std::size_t evals = 0;

  bool all_pass() const { return contraction_violations == 0 && floor_violations == 0; }
};

/// Runs x_{k+1} = x_k - alpha_k g_k on `problem` (phi* and a separable
/// curvature in [mu, L] expected) with alpha_k from relaxed backtracking.
/// With eps_f_bar > 0 the objective carries uniform noise in
/// [-eps_f_bar, eps_f_bar] and g_k is a forward difference with interval
/// 2 sqrt(eps_f_bar / L); otherwise g_k is the exact gradient.
LineSearchTheoryReport verify_line_search_convergence(const TheoryParams& params,
                                                      const SmoothProblem& problem,
                                                      VecView x0, std::size_t K,
                                                      std::uint64_t seed);

}  // namespace fdlm
