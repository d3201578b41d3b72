#pragma once

// Test objectives, noise injection and evaluation accounting.
//
// An Objective wraps a smooth function phi with one of four noise models
// and counts every evaluation. Stochastic noise is counter-based: the draw
// for an evaluation depends only on (seed, probe_index), so probes that
// were assigned tickets up front give the same values in any order.

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fdlm/vec.hpp"

namespace fdlm {

struct SmoothProblem {
  std::string name;
  std::size_t dim = 0;
  std::function<double(VecView)> phi;
  std::function<Vector(VecView)> grad;  // analytic gradient; may be empty
  double phi_star = 0.0;
  Vector x0;
  std::optional<Vector> x_star;
  std::optional<double> mu;  // strong convexity constant, when known
  std::optional<double> L;   // gradient Lipschitz constant, when known
};

enum class NoiseKind {
  none,
  stochastic_additive,
  stochastic_multiplicative,
  deterministic_additive,
  deterministic_multiplicative,
};

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);
bool is_stochastic(NoiseKind kind);
bool is_multiplicative(NoiseKind kind);

struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double xi = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic noise shape T3(psi0(x)) in [-1, 1], where
/// psi0(x) = 0.9 sin(100 |x|_1) cos(100 |x|_inf) + 0.1 cos(|x|_2).
double chebyshev_noise(VecView x);

/// Counter-based uniform draw in [-1, 1], a pure function of its inputs.
double counter_uniform(std::uint64_t seed, std::uint64_t index);

/// Thrown by consumers that cannot tolerate a non-finite function value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Vector point)
      : std::runtime_error(what), point_(std::move(point)) {}
  const Vector& point() const noexcept { return point_; }

 private:
  Vector point_;
};

class Objective {
 public:
  explicit Objective(SmoothProblem problem, NoiseModel noise = {},
                     bool reentrant = true);

  Objective(const Objective&) = delete;
  Objective& operator=(const Objective&) = delete;

  /// Evaluates f at x using the next ticket.
  double operator()(VecView x) { return evaluate(x, reserve_tickets(1)); }

  /// Evaluates f at x with an explicitly assigned ticket. Counts as one
  /// evaluation. May return a non-finite value; callers decide.
  double evaluate(VecView x, std::uint64_t probe_index);

  /// Reserves k consecutive tickets and returns the first.
  std::uint64_t reserve_tickets(std::size_t k) {
    return next_ticket_.fetch_add(k, std::memory_order_relaxed);
  }

  /// Noiseless phi, evaluated out of band (not counted).
  double phi(VecView x) const;
  double phi_gap(VecView x) const { return phi(x) - problem_.phi_star; }

  std::uint64_t eval_count() const {
    return count_.load(std::memory_order_relaxed);
  }
  std::size_t dim() const { return problem_.dim; }
  bool reentrant() const { return reentrant_; }
  const SmoothProblem& problem() const { return problem_; }
  const NoiseModel& noise() const { return noise_; }

 private:
  SmoothProblem problem_;
  NoiseModel noise_;
  bool reentrant_;
  std::atomic<std::uint64_t> count_{0};
  std::atomic<std::uint64_t> next_ticket_{0};
};

// Registry -----------------------------------------------------------------

/// Separable quadratic 0.5 * sum(lambda_i x_i^2) with lambda log-spaced
/// from 1 to cond. Named "quad_n<n>_cond<cond>".
SmoothProblem make_quadratic(std::size_t n, double cond);
/// 0.5 * sum(lambda_i x_i^2) with lambda log-spaced from mu to L
/// (lambda = mu when n = 1).
SmoothProblem make_scaled_quadratic(std::size_t n, double mu, double L);
SmoothProblem make_ext_rosenbrock(std::size_t n);

const std::vector<SmoothProblem>& problem_registry();

/// Looks a problem up by name. Quadratics and extended Rosenbrock
/// functions of any size are also built on demand from their names.
SmoothProblem find_problem(std::string_view name);

}  // namespace fdlm
