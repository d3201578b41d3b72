#pragma once

// Finite-difference gradients with noise-adapted intervals.

#include <cstddef>
#include <optional>
#include <random>
#include <string>

#include "fdlm/noise_estimation.hpp"
#include "fdlm/problems.hpp"
#include "fdlm/vec.hpp"

namespace fdlm {

enum class FdVariant { forward, central };
enum class FdMode { smooth, noisy };

struct FDScheme {
  FdVariant variant = FdVariant::forward;
  FdMode mode = FdMode::noisy;

  std::size_t cost(std::size_t n) const {
    return variant == FdVariant::forward ? n : 2 * n;
  }
};

std::string to_string(FdVariant v);
std::string to_string(FdMode m);

enum class CurvatureSource { heuristic, table_backup, default_value };
std::string to_string(CurvatureSource s);

struct CurvatureEstimate {
  double nu2 = 1.0;
  double nu3 = 1.0;  // set equal to nu2
  std::size_t evals = 0;
  CurvatureSource source = CurvatureSource::default_value;
};

inline constexpr double kNu2Floor = 1e-8;

/// Base differencing interval.
///   noisy forward: 8^(1/4) (eps_f / nu2)^(1/2)
///   noisy central: 3^(1/3) (eps_f / nu3)^(1/3)
///   smooth: eps_m^(1/2) (forward) or eps_m^(1/3) (central); scaled per
///   component by component_step().
double interval(const FDScheme& scheme, double eps_f, const CurvatureEstimate& curv);

/// Step actually used along coordinate i: h * max(1, |x_i|) in smooth mode,
/// h otherwise.
double component_step(const FDScheme& scheme, double h, double x_i);

/// Scalar step for probes along arbitrary directions (line search, recovery):
/// h * max(1, |x|_inf) in smooth mode, h otherwise.
double effective_step(const FDScheme& scheme, double h, VecView x);

struct Nu2Options {
  double t0 = 0.0;  // initial width; 0 selects eps_f^(1/4) * max(1, |x|_inf)
  double reliable_factor = 8.0;
  double floor = kNu2Floor;
};

/// Second-derivative magnitude along `direction` from the second central
/// difference |f(x+tu) - 2 f(x) + f(x-tu)| / t^2, accepted once it clears
/// reliable_factor * eps_f. At most one width adjustment (4 evaluations).
/// Falls back to column 2 of `backup`'s table, then to 1.
CurvatureEstimate estimate_nu2(Objective& obj, VecView x, double f_x, double eps_f,
                               VecView direction,
                               const NoiseEstimate* backup = nullptr,
                               const Nu2Options& opts = {});

struct StencilBest {
  Vector x;
  double f = std::numeric_limits<double>::infinity();
};

struct GradientResult {
  Vector g;
  double h = 0.0;
  StencilBest best;
  std::size_t evals = 0;
  double f_at_x = 0.0;
};

/// Forward or central difference gradient. The forward variant reuses f_x
/// and never evaluates x itself. Probe tickets are reserved before dispatch,
/// so `parallel` (honoured only for reentrant objectives) does not change
/// the result. Throws EvaluationError on a non-finite probe value.
GradientResult gradient(Objective& obj, VecView x, std::optional<double> f_x,
                        const FDScheme& scheme, double h, bool parallel = false);

/// Uniformly distributed unit vector.
Vector random_unit_vector(std::size_t n, std::mt19937_64& rng);

}  // namespace fdlm
