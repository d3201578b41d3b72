#include "fdlm/line_search.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace fdlm {

void LineSearchConfig::validate() const {
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) {
    throw std::invalid_argument("line search: need 0 < c1 < c2 < 1");
  }
  if (a_max < 1) throw std::invalid_argument("line search: a_max must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("line search: tau in (0,1)");
  if (eps_f < 0.0) throw std::invalid_argument("line search: eps_f < 0");
  if (!(probe_h > 0.0)) throw std::invalid_argument("line search: probe_h <= 0");
}

std::string to_string(LsFlag f) {
  switch (f) {
    case LsFlag::armijo_wolfe: return "armijo_wolfe";
    case LsFlag::armijo_only: return "armijo_only";
    case LsFlag::failed: return "failed";
  }
  return "failed";
}

namespace {

LineSearchResult failure(VecView x, double f_x, std::size_t evals, bool budget) {
  LineSearchResult r;
  r.x_plus.assign(x.begin(), x.end());
  r.f_plus = f_x;
  r.alpha = 0.0;
  r.evals = evals;
  r.flag = LsFlag::failed;
  r.budget_exhausted = budget;
  return r;
}

}  // namespace

LineSearchResult armijo_wolfe_search(Objective& obj, VecView x, double f_x,
                                     VecView g, VecView d,
                                     const LineSearchConfig& cfg) {
  cfg.validate();
  require_dim(x, obj.dim(), "armijo_wolfe_search");
  const double dnorm = norm2(d);
  if (!(dnorm > 0.0)) throw std::invalid_argument("armijo_wolfe_search: d == 0");
  const double gtd = dot(g, d);
  const Vector unit_d = scaled(d, 1.0 / dnorm);

  struct Candidate {
    Vector x;
    double f;
    double alpha;
  };
  std::optional<Candidate> armijo_point;
  bool expanded = false;
  std::size_t evals = 0;
  double alpha = 1.0;

  auto accept = [&](const Candidate& c, LsFlag flag) {
    LineSearchResult r;
    r.x_plus = c.x;
    r.f_plus = c.f;
    r.alpha = c.alpha;
    r.evals = evals;
    r.flag = flag;
    return r;
  };

  for (std::size_t it = 0; it < cfg.a_max; ++it) {
    if (evals + 1 > cfg.max_evals) {
      if (armijo_point) return accept(*armijo_point, LsFlag::armijo_only);
      return failure(x, f_x, evals, true);
    }
    Vector y = step(x, alpha, d);
    const double fy = obj(y);
    ++evals;

    const double slack = it == 0 ? 0.0 : 2.0 * cfg.eps_f;
    const bool armijo = std::isfinite(fy) && fy <= f_x + cfg.c1 * alpha * gtd + slack;
    if (!armijo) {
      // Overshot after an expansion: fall back to the last Armijo point.
      if (armijo_point) return accept(*armijo_point, LsFlag::armijo_only);
      alpha *= cfg.tau;
      continue;
    }

    Candidate here{std::move(y), fy, alpha};
    if (evals + 1 > cfg.max_evals) return accept(here, LsFlag::armijo_only);
    const double f_probe = obj(step(here.x, cfg.probe_h, unit_d));
    ++evals;
    const double slope = (f_probe - fy) / cfg.probe_h * dnorm;
    if (std::isfinite(slope) && slope >= cfg.c2 * gtd) {
      return accept(here, LsFlag::armijo_wolfe);
    }
    if (expanded) return accept(here, LsFlag::armijo_only);
    armijo_point = std::move(here);
    expanded = true;
    alpha /= cfg.tau;
  }

  if (armijo_point) return accept(*armijo_point, LsFlag::armijo_only);
  return failure(x, f_x, evals, false);
}

LineSearchResult relaxed_backtracking(Objective& obj, VecView x, double f_x,
                                      VecView g, const LineSearchConfig& cfg,
                                      double eps_A) {
  if (!(cfg.c1 > 0.0 && cfg.c1 < 1.0)) throw std::invalid_argument("backtracking: c1 in (0,1)");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw std::invalid_argument("backtracking: tau in (0,1)");
  if (eps_A < 0.0) throw std::invalid_argument("backtracking: eps_A < 0");
  require_dim(x, obj.dim(), "relaxed_backtracking");

  const double gtg = dot(g, g);
  std::size_t evals = 0;
  double alpha = 1.0;
  for (std::size_t j = 0; j <= cfg.backtrack_limit; ++j) {
    if (evals + 1 > cfg.max_evals) return failure(x, f_x, evals, true);
    Vector y = step(x, -alpha, g);
    const double fy = obj(y);
    ++evals;
    if (std::isfinite(fy) && fy <= f_x - cfg.c1 * alpha * gtg + 2.0 * eps_A) {
      LineSearchResult r;
      r.x_plus = std::move(y);
      r.f_plus = fy;
      r.alpha = alpha;
      r.evals = evals;
      r.flag = LsFlag::armijo_only;
      return r;
    }
    alpha *= cfg.tau;
  }
  return failure(x, f_x, evals, false);
}

}  // namespace fdlm
