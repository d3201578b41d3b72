#include "fdlm/fd_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fdlm {

std::string to_string(FdVariant v) {
  return v == FdVariant::forward ? "forward" : "central";
}

std::string to_string(FdMode m) { return m == FdMode::smooth ? "smooth" : "noisy"; }

std::string to_string(CurvatureSource s) {
  switch (s) {
    case CurvatureSource::heuristic: return "heuristic";
    case CurvatureSource::table_backup: return "table_backup";
    case CurvatureSource::default_value: return "default";
  }
  return "default";
}

double interval(const FDScheme& scheme, double eps_f, const CurvatureEstimate& curv) {
  if (scheme.mode == FdMode::smooth) {
    return scheme.variant == FdVariant::forward ? std::sqrt(kMachineEps)
                                                : std::cbrt(kMachineEps);
  }
  if (!(eps_f > 0.0)) {
    throw std::invalid_argument("interval: noisy mode needs eps_f > 0");
  }
  if (scheme.variant == FdVariant::forward) {
    return std::pow(8.0, 0.25) * std::sqrt(eps_f / std::max(curv.nu2, kNu2Floor));
  }
  return std::cbrt(3.0) * std::cbrt(eps_f / std::max(curv.nu3, kNu2Floor));
}

double component_step(const FDScheme& scheme, double h, double x_i) {
  return scheme.mode == FdMode::smooth ? h * std::max(1.0, std::abs(x_i)) : h;
}

double effective_step(const FDScheme& scheme, double h, VecView x) {
  return scheme.mode == FdMode::smooth ? h * std::max(1.0, norm_inf(x)) : h;
}

Vector random_unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  double nv = 0.0;
  while (nv == 0.0) {
    for (double& c : v) c = normal(rng);
    nv = norm2(v);
  }
  for (double& c : v) c /= nv;
  return v;
}

CurvatureEstimate estimate_nu2(Objective& obj, VecView x, double f_x, double eps_f,
                               VecView direction, const NoiseEstimate* backup,
                               const Nu2Options& opts) {
  require_dim(x, obj.dim(), "estimate_nu2");
  require_dim(direction, obj.dim(), "estimate_nu2 direction");
  CurvatureEstimate c;
  const double noise = std::max(eps_f, 0.0);
  double t = opts.t0 > 0.0 ? opts.t0
                           : std::pow(std::max(noise, kMachineEps), 0.25) *
                                 std::max(1.0, norm_inf(x));

  for (int trial = 0; trial < 2; ++trial) {
    const std::uint64_t ticket = obj.reserve_tickets(2);
    const double fp = obj.evaluate(step(x, t, direction), ticket);
    const double fm = obj.evaluate(step(x, -t, direction), ticket + 1);
    c.evals += 2;
    const double delta2 = fp - 2.0 * f_x + fm;
    if (!std::isfinite(delta2)) {
      t *= 0.1;
      continue;
    }
    const double a = std::abs(delta2);
    if (a >= opts.reliable_factor * noise && a > 0.0) {
      c.nu2 = std::max(a / (t * t), opts.floor);
      c.nu3 = c.nu2;
      c.source = CurvatureSource::heuristic;
      return c;
    }
    // Signal below the noise floor: widen so the predicted difference
    // reaches 100 eps_f, at most a factor 100.
    const double grow = a > 0.0 ? std::sqrt(100.0 * noise / a) : 100.0;
    t *= std::clamp(grow, 2.0, 100.0);
  }

  if (backup != nullptr && backup->table.q() >= 2 && backup->delta_used > 0.0) {
    const Vector& col2 = backup->table.columns[1];
    double mean_abs = 0.0;
    for (double v : col2) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(col2.size());
    c.nu2 = std::max(mean_abs / (backup->delta_used * backup->delta_used), opts.floor);
    c.source = CurvatureSource::table_backup;
  } else {
    c.nu2 = 1.0;
    c.source = CurvatureSource::default_value;
  }
  c.nu3 = c.nu2;
  return c;
}

GradientResult gradient(Objective& obj, VecView x, std::optional<double> f_x,
                        const FDScheme& scheme, double h, bool parallel) {
  const std::size_t n = obj.dim();
  require_dim(x, n, "gradient");
  if (!(h > 0.0)) throw std::invalid_argument("gradient: h must be > 0");
  const bool forward = scheme.variant == FdVariant::forward;
  if (forward && !f_x) {
    throw std::invalid_argument("gradient: forward differences need f(x)");
  }

  const std::size_t m = scheme.cost(n);
  const std::uint64_t ticket = obj.reserve_tickets(m);
  Vector steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = component_step(scheme, h, x[i]);

  // Probe p: coordinate p (forward) or p/2 with sign +,- (central).
  auto probe_point = [&](std::size_t p) {
    Vector y(x.begin(), x.end());
    if (forward) {
      y[p] += steps[p];
    } else {
      y[p / 2] += (p % 2 == 0) ? steps[p / 2] : -steps[p / 2];
    }
    return y;
  };

  Vector values(m);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      values[p] = obj.evaluate(probe_point(p), ticket + p);
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, m);
  if (parallel && obj.reentrant() && workers > 1) {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (m + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(m, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
  } else {
    run(0, m);
  }

  GradientResult r;
  r.g.resize(n);
  r.h = h;
  r.evals = m;
  r.f_at_x = f_x.value_or(std::numeric_limits<double>::quiet_NaN());
  std::size_t best = 0;
  for (std::size_t p = 0; p < m; ++p) {
    if (!std::isfinite(values[p])) {
      throw EvaluationError("non-finite function value in gradient stencil",
                            probe_point(p));
    }
    if (values[p] < values[best]) best = p;
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Divide by the representable displacement, not the nominal step.
    const double up = (x[i] + steps[i]) - x[i];
    r.g[i] = forward ? (values[i] - *f_x) / up
                     : (values[2 * i] - values[2 * i + 1]) / ((x[i] + steps[i]) - (x[i] - steps[i]));
  }
  r.best.x = probe_point(best);
  r.best.f = values[best];
  return r;
}

}  // namespace fdlm
