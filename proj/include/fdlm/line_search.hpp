#pragma once

// Armijo-Wolfe search with a noise-relaxed Armijo test, and the plain
// relaxed backtracking search used by the convergence-theory harness.

#include <cstddef>
#include <limits>
#include <string>

#include "fdlm/problems.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

struct LineSearchConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t a_max = 10;
  double tau = 0.5;
  double eps_f = 0.0;     // slack 2*eps_f after the first trial
  double probe_h = 1e-8;  // step of the directional difference for Wolfe
  std::size_t backtrack_limit = 30;  // relaxed_backtracking stops below tau^30
  std::size_t max_evals = std::numeric_limits<std::size_t>::max();

  void validate() const;
};

enum class LsFlag { armijo_wolfe, armijo_only, failed };
std::string to_string(LsFlag f);

struct LineSearchResult {
  Vector x_plus;
  double f_plus = 0.0;
  double alpha = 0.0;
  std::size_t evals = 0;
  LsFlag flag = LsFlag::failed;
  bool budget_exhausted = false;
};

/// Tries alpha = 1 against the strict Armijo-Wolfe conditions, then
/// backtracks by tau with the relaxed test
///   f(x + a d) <= f(x) + c1 a g^T d + 2 eps_f.
/// When Armijo holds but Wolfe fails the step is expanded once by 1/tau.
/// Wolfe is checked with a forward difference along d / |d| of length
/// probe_h (one evaluation). Non-finite values fail the test.
LineSearchResult armijo_wolfe_search(Objective& obj, VecView x, double f_x,
                                     VecView g, VecView d,
                                     const LineSearchConfig& cfg);

/// Largest alpha in {1, tau, tau^2, ...} with
///   f(x - a g) <= f(x) - c1 a g^T g + 2 eps_A,
/// or failed once alpha would drop below tau^backtrack_limit.
LineSearchResult relaxed_backtracking(Objective& obj, VecView x, double f_x,
                                      VecView g, const LineSearchConfig& cfg,
                                      double eps_A);

}  // namespace fdlm
