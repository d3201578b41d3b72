#include "fdlm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fdlm/fd_gradient.hpp"
#include "fdlm/line_search.hpp"

namespace fdlm {

FixedStepTrajectory fixed_step_iterate(const std::function<double(VecView)>& phi,
                                       const std::function<Vector(VecView)>& grad,
                                       const NoiseInjector& noise, VecView x0,
                                       double alpha, std::size_t K) {
  if (!(alpha > 0.0)) throw std::invalid_argument("fixed_step_iterate: alpha must be > 0");
  FixedStepTrajectory t;
  Vector x(x0.begin(), x0.end());
  t.phi.reserve(K + 1);
  t.phi.push_back(phi(x));
  for (std::size_t k = 0; k < K; ++k) {
    Vector g = grad(x);
    if (noise) {
      const Vector e = noise(x, k);
      require_dim(e, x.size(), "noise injector");
      t.e_norm.push_back(norm2(e));
      axpy(1.0, e, g);
    } else {
      t.e_norm.push_back(0.0);
    }
    axpy(-alpha, g, x);
    t.phi.push_back(phi(x));
  }
  t.x_final = std::move(x);
  return t;
}

FixedStepReport check_fixed_step(const FixedStepTrajectory& t, double phi_star,
                                 double mu, double alpha, double eps_g_bar,
                                 std::size_t trailing) {
  FixedStepReport r;
  r.steps = t.phi.empty() ? 0 : t.phi.size() - 1;
  r.floor = eps_g_bar * eps_g_bar / (2.0 * mu);
  const double q = 1.0 - alpha * mu;
  const double start = t.phi.front() - phi_star - r.floor;
  double qk = 1.0;
  for (std::size_t k = 0; k < r.steps; ++k) {
    const double lhs = t.phi[k + 1] - phi_star - r.floor;
    const double rhs = q * (t.phi[k] - phi_star - r.floor);
    if (!(lhs <= rhs)) ++r.contraction_violations;
    if (t.e_norm[k] > eps_g_bar) ++r.noise_bound_violations;
    qk *= q;
    if (!(t.phi[k + 1] - phi_star <= qk * start + r.floor)) ++r.envelope_violations;
  }
  const std::size_t m = std::min(trailing, t.phi.size());
  double sum = 0.0;
  for (std::size_t i = t.phi.size() - m; i < t.phi.size(); ++i) sum += t.phi[i] - phi_star;
  r.trailing_mean_gap = m ? sum / static_cast<double>(m) : 0.0;
  return r;
}

Vector random_in_ball(std::size_t n, double r, std::mt19937_64& rng) {
  Vector v = random_unit_vector(n, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double radius = r * std::pow(u(rng), 1.0 / static_cast<double>(n));
  for (double& c : v) c *= radius;
  return v;
}

void TheoryParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("theory: " + what); };
  if (!(mu > 0.0)) fail("mu must be > 0");
  if (!(L >= mu)) fail("L must be >= mu");
  if (!(c1 > 0.0 && c1 < 0.5)) fail("c1 must lie in (0, 1/2)");
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0, 1)");
  const double beta_max = (1.0 - 2.0 * c1) / (1.0 + 2.0 * c1);
  if (!(beta > 0.0 && beta <= beta_max)) {
    fail("beta must lie in (0, (1 - 2 c1) / (1 + 2 c1)]");
  }
  if (!(eps_g_bar >= 0.0)) fail("eps_g_bar must be >= 0");
  if (!(eps_f_bar >= 0.0)) fail("eps_f_bar must be >= 0");
  if (!(eps_A > eps_f_bar)) fail("eps_A must exceed eps_f_bar");
}

double TheoryParams::rho() const {
  const double ob = 1.0 - beta;
  return 1.0 - 2.0 * mu * c1 * tau * ob * ob / L;
}

double TheoryParams::eta() const {
  const double ob = 1.0 - beta;
  return c1 * tau * ob * ob / (L * beta * beta) * eps_g_bar * eps_g_bar +
         2.0 * eps_A + 2.0 * eps_f_bar;
}

double TheoryParams::eta_bar() const {
  const double ob = 1.0 - beta;
  return eps_g_bar * eps_g_bar / (2.0 * mu * beta * beta) +
         L / (mu * c1 * tau * ob * ob) * (eps_A + eps_f_bar);
}

double TheoryParams::simplified_rho() const {
  if (!(c1 < 0.25)) throw std::invalid_argument("theory: simplified form needs c1 < 1/4");
  return 1.0 - 32.0 * mu * tau * c1 * c1 * c1 / L;
}

double TheoryParams::simplified_eta_bar() const {
  if (!(c1 < 0.25)) throw std::invalid_argument("theory: simplified form needs c1 < 1/4");
  const double b = 1.0 - 4.0 * c1;
  return eps_g_bar * eps_g_bar / (2.0 * mu * b * b) +
         L / (16.0 * mu * tau * c1 * c1 * c1) * (eps_A + eps_f_bar);
}

TheoryParams TheoryParams::with_fd_noise(double mu, double L, double c1, double tau,
                                         double eps_f_bar) {
  TheoryParams p;
  p.mu = mu;
  p.L = L;
  p.c1 = c1;
  p.tau = tau;
  p.beta = 1.0 - 4.0 * c1;
  p.eps_f_bar = eps_f_bar;
  p.eps_A = 2.0 * eps_f_bar;
  p.eps_g_bar = fd_error_bound(L, eps_f_bar);
  return p;
}

double fd_error_bound(double L, double eps_f) { return 2.0 * std::sqrt(L * eps_f); }
double fd_bound_interval(double L, double eps_f) { return 2.0 * std::sqrt(eps_f / L); }

LineSearchTheoryReport verify_line_search_convergence(const TheoryParams& params,
                                                      const SmoothProblem& problem,
                                                      VecView x0, std::size_t K,
                                                      std::uint64_t seed) {
  params.validate();
  require_dim(x0, problem.dim, "verify_line_search_convergence");
  const bool noisy = params.eps_f_bar > 0.0;
  Objective obj(problem, noisy ? NoiseModel{NoiseKind::stochastic_additive, params.eps_f_bar, seed}
                               : NoiseModel{});
  const FDScheme scheme{FdVariant::forward, FdMode::noisy};
  const double h = noisy ? fd_bound_interval(params.L, params.eps_f_bar) : 0.0;

  LineSearchConfig ls;
  ls.c1 = params.c1;
  ls.tau = params.tau;

  LineSearchTheoryReport r;
  r.rho = params.rho();
  r.eta_bar = params.eta_bar();
  const double phi_star = problem.phi_star;
  Vector x(x0.begin(), x0.end());
  double f = obj(x);

  for (std::size_t k = 0; k < K; ++k) {
    const Vector exact = problem.grad(x);
    Vector g = noisy ? gradient(obj, x, f, scheme, h).g : exact;
    const Vector e = sub(g, exact);
    const double en = norm2(e);
    if (params.eps_g_bar > 0.0) r.max_error_ratio = std::max(r.max_error_ratio, en / params.eps_g_bar);

    const double gap = problem.phi(x) - phi_star;
    const LineSearchResult step = relaxed_backtracking(obj, x, f, g, ls, params.eps_A);
    if (step.flag == LsFlag::failed) ++r.search_failures;
    Vector x_next = step.flag == LsFlag::failed ? x : step.x_plus;
    const double gap_next = problem.phi(x_next) - phi_star;

    if (!(gap_next - r.eta_bar <= r.rho * (gap - r.eta_bar))) ++r.contraction_violations;
    const double gn = norm2(exact);
    if (gn > 0.0 && en / gn <= params.beta) {
      ++r.floor_checks;
      if (step.flag == LsFlag::failed || !(step.alpha > params.tau / params.L)) {
        ++r.floor_violations;
      }
    }
    if (step.flag != LsFlag::failed) f = step.f_plus;
    x = std::move(x_next);
    ++r.steps;
  }
  r.final_gap = problem.phi(x) - phi_star;
  r.evals = obj.eval_count();
  return r;
}

}  // namespace fdlm
