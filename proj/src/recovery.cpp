#include "fdlm/recovery.hpp"

#include <cmath>
#include <stdexcept>

namespace fdlm {

void RecoveryConfig::validate() const {
  if (!(gamma1 > 0.0 && gamma1 < 1.0)) throw std::invalid_argument("recovery: gamma1 in (0,1)");
  if (!(gamma2 > 1.0)) throw std::invalid_argument("recovery: gamma2 must exceed 1");
  if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("recovery: c1 in (0,1)");
}

namespace {

std::size_t remaining(const RecoveryContext& ctx, std::size_t used) {
  return ctx.max_evals > used ? ctx.max_evals - used : 0;
}

}  // namespace

RecoveryOutcome recover(Objective& obj, VecView x_k, double f_k, VecView d,
                        VecView g, double h, const StencilBest& best,
                        const RecoveryConfig& cfg, const RecoveryContext& ctx) {
  cfg.validate();
  require_dim(x_k, obj.dim(), "recover");
  require_dim(d, obj.dim(), "recover direction");
  if (!(h > 0.0)) throw std::invalid_argument("recover: h must be > 0");
  const double dnorm = norm2(d);
  if (!(dnorm > 0.0)) throw std::invalid_argument("recover: d == 0");
  const bool noisy = ctx.scheme.mode == FdMode::noisy;

  RecoveryOutcome out;
  out.x_plus.assign(x_k.begin(), x_k.end());
  out.f_plus = f_k;
  out.h_new = h;

  const Vector unit_d = scaled(d, 1.0 / dnorm);

  if (noisy) {
    NoiseProbeConfig probe = ctx.probe;
    probe.direction = unit_d;
    probe.max_evals = remaining(ctx, out.evals);
    const NoiseEstimate est = estimate_noise(obj, x_k, probe, ctx.eps_f);
    out.evals += est.evals;
    if (est.status == NoiseStatus::ok) {
      const double h_bar = interval(ctx.scheme, est.eps_f, ctx.curv);
      if (h_bar < cfg.gamma1 * h || h_bar > cfg.gamma2 * h) {
        out.case_id = 1;
        out.h_new = h_bar;
        out.new_eps_f = est.eps_f;
        return out;
      }
    }
  }

  const double step_len = effective_step(ctx.scheme, h, x_k);
  if (remaining(ctx, out.evals) < 1) {
    out.case_id = 5;
    out.budget_exhausted = true;
    return out;
  }
  Vector x_h = step(x_k, step_len, unit_d);
  double f_h = obj(x_h);
  ++out.evals;
  if (!std::isfinite(f_h)) f_h = std::numeric_limits<double>::infinity();

  const double alpha = step_len / dnorm;
  if (f_h <= f_k + cfg.c1 * alpha * dot(g, d)) {
    out.case_id = 2;
    out.x_plus = std::move(x_h);
    out.f_plus = f_h;
    return out;
  }
  if (f_h <= best.f && f_h <= f_k) {
    out.case_id = 3;
    out.x_plus = std::move(x_h);
    out.f_plus = f_h;
    return out;
  }
  if (f_k > best.f && f_h > best.f) {
    out.case_id = 4;
    out.x_plus = best.x;
    out.f_plus = best.f;
    return out;
  }

  out.case_id = 5;
  if (!noisy) return out;
  if (ctx.rng == nullptr) throw std::invalid_argument("recover: rng required");
  const Vector v = random_unit_vector(obj.dim(), *ctx.rng);
  NoiseProbeConfig probe = ctx.probe;
  probe.direction = v;
  probe.max_evals = remaining(ctx, out.evals);
  const NoiseEstimate est = estimate_noise(obj, x_k, probe, ctx.eps_f);
  out.evals += est.evals;
  if (est.status != NoiseStatus::ok) {
    out.budget_exhausted = est.evals == 0;
    return out;
  }
  out.new_eps_f = est.eps_f;
  CurvatureEstimate curv = ctx.curv;
  if (remaining(ctx, out.evals) >= 4) {
    curv = estimate_nu2(obj, x_k, f_k, est.eps_f, v, &est);
    out.evals += curv.evals;
    out.new_curv = curv;
  }
  out.h_new = interval(ctx.scheme, est.eps_f, curv);
  return out;
}

}  // namespace fdlm
