#include "fdlm/solver.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace fdlm {

void StopConfig::validate() const {
  if (!(grad_tol > 0.0)) throw std::invalid_argument("stop: grad_tol must be > 0");
  if (ma_window < 1) throw std::invalid_argument("stop: ma_window must be >= 1");
  if (!(fval_tau_hat > 1.0)) throw std::invalid_argument("stop: fval_tau_hat must exceed 1");
  if (!(ma_tol >= 0.0)) throw std::invalid_argument("stop: ma_tol must be >= 0");
}

StopConfig bench_stop_config() {
  StopConfig s;
  s.grad_tol = 1e-8;
  s.use_fval = false;
  s.use_ma = false;
  return s;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::fval_change: return "fval_change";
    case StopReason::moving_average: return "moving_average";
    case StopReason::budget: return "budget";
    case StopReason::line_search_failed: return "line_search_failed";
    case StopReason::evaluation_error: return "evaluation_error";
  }
  return "budget";
}

std::optional<StopReason> check_stop(const StopState& state, const StopConfig& stop) {
  if (stop.use_grad && !state.grad.empty() && norm_inf(state.grad) <= stop.grad_tol) {
    return StopReason::grad_tol;
  }
  const auto& fh = state.f_history;
  if (!state.moved || fh.empty()) return std::nullopt;
  const double fk = fh.back();
  if (stop.use_fval && fh.size() >= 2 &&
      std::abs(fk - fh[fh.size() - 2]) <= stop.fval_tau_hat * state.eps_f) {
    return StopReason::fval_change;
  }
  if (stop.use_ma && fh.size() >= stop.ma_window) {
    double sum = 0.0;
    for (std::size_t i = fh.size() - stop.ma_window; i < fh.size(); ++i) sum += fh[i];
    const double ma = sum / static_cast<double>(stop.ma_window);
    if (std::abs(ma - fk) <= stop.ma_tol * std::max(1.0, std::abs(ma))) {
      return StopReason::moving_average;
    }
  }
  return std::nullopt;
}

std::uint64_t RunHistory::reconstructed_count() const {
  if (records.empty()) return 0;
  const IterationRecord& r = records.back();
  return 1 + r.t_ecn + r.t_grad + r.t_ls + r.t_rec;
}

namespace {

struct Counters {
  std::uint64_t ecn = 0, grad = 0, ls = 0, rec = 0;
  std::uint64_t total() const { return 1 + ecn + grad + ls + rec; }
};

std::size_t room(std::size_t budget, std::uint64_t used, std::size_t reserve) {
  return budget > used + reserve ? budget - used - reserve : 0;
}

}  // namespace

RunHistory solve(Objective& obj, VecView x0, const SolverConfig& cfg) {
  const std::size_t n = obj.dim();
  require_dim(x0, n, "solve");
  cfg.ls.validate();
  cfg.rec.validate();
  cfg.stop.validate();
  const std::size_t budget = cfg.budget ? cfg.budget : 100 * n;
  if (budget < n + 2) throw std::invalid_argument("solve: budget must be >= n + 2");

  const FDScheme& scheme = cfg.scheme;
  const bool noisy = scheme.mode == FdMode::noisy;
  const std::size_t grad_cost = scheme.cost(n);
  const std::uint64_t start_count = obj.eval_count();
  std::mt19937_64 rng(cfg.seed);

  RunHistory hist;
  hist.problem = obj.problem().name;
  hist.n = n;
  hist.budget = budget;

  Counters c;
  Vector x(x0.begin(), x0.end());
  Vector g;
  std::vector<double> f_hist;
  double h = 0.0, eps_f = 0.0;
  CurvatureEstimate curv;
  StencilBest best;
  LbfgsMemory mem(cfg.m, cfg.zeta);
  const bool known_star = std::isfinite(obj.problem().phi_star);

  auto record = [&](double f, double alpha, std::optional<LsFlag> flag, int rec_case) {
    IterationRecord r;
    r.k = hist.records.size();
    r.f = f;
    r.phi_gap = known_star ? obj.phi_gap(x) : std::numeric_limits<double>::quiet_NaN();
    r.alpha = alpha;
    r.h = h;
    r.eps_f = eps_f;
    r.grad_inf = g.empty() ? std::numeric_limits<double>::quiet_NaN() : norm_inf(g);
    r.ls_flag = flag;
    r.recovery_case = rec_case;
    r.t_count = c.total();
    r.t_ecn = c.ecn;
    r.t_grad = c.grad;
    r.t_ls = c.ls;
    r.t_rec = c.rec;
    hist.records.push_back(r);
  };
  auto finish = [&](StopReason reason) {
    hist.reason = reason;
    hist.x_final = x;
    hist.f_final = f_hist.empty() ? std::numeric_limits<double>::quiet_NaN() : f_hist.back();
    hist.objective_evals = obj.eval_count() - start_count;
    return hist;
  };

  const double f0 = obj(x);
  f_hist.push_back(f0);
  if (!std::isfinite(f0)) {
    hist.error = "non-finite function value at x0";
    record(f0, 0.0, std::nullopt, 0);
    return finish(StopReason::evaluation_error);
  }

  NoiseProbeConfig probe;
  if (noisy) {
    const Vector v = random_unit_vector(n, rng);
    probe = default_probe_config(obj.noise().kind, v);
    if (cfg.noise_q) probe.q = cfg.noise_q;
    if (cfg.noise_delta > 0.0) probe.delta = cfg.noise_delta;
    probe.max_evals = room(budget, c.total(), grad_cost);
    NoiseEstimate est = estimate_noise(obj, x, probe);
    c.ecn += est.evals;
    eps_f = est.eps_f;
    if (room(budget, c.total(), grad_cost) >= 4) {
      curv = estimate_nu2(obj, x, f0, eps_f, v, &est);
      c.ecn += curv.evals;
    }
    hist.initial_noise = std::move(est);
    hist.initial_curvature = curv;
  } else {
    hist.initial_noise = machine_precision_estimate(f0);
    eps_f = hist.initial_noise.eps_f;
  }
  h = interval(scheme, eps_f, curv);

  auto take_gradient = [&](double fx) -> bool {
    try {
      GradientResult gr = gradient(obj, x, fx, scheme, h, cfg.parallel);
      c.grad += gr.evals;
      ++hist.gradients;
      g = std::move(gr.g);
      best = std::move(gr.best);
      return true;
    } catch (const EvaluationError& e) {
      c.grad += grad_cost;
      hist.error = e.what();
      return false;
    }
  };

  if (c.total() + grad_cost > budget) {
    record(f0, 0.0, std::nullopt, 0);
    return finish(StopReason::budget);
  }
  if (!take_gradient(f0)) {
    record(f0, 0.0, std::nullopt, 0);
    return finish(StopReason::evaluation_error);
  }
  record(f0, 0.0, std::nullopt, 0);

  bool moved = true;
  for (;;) {
    const StopState st{g, f_hist, eps_f, moved};
    if (auto reason = check_stop(st, cfg.stop)) return finish(*reason);
    if (c.total() + 1 + grad_cost > budget) return finish(StopReason::budget);

    Vector d = mem.apply_inverse_hessian(g);
    if (!(dot(g, d) < 0.0)) {
      mem.clear();
      d = scaled(g, -1.0);
    }
    if (!(norm2(d) > 0.0)) return finish(StopReason::grad_tol);

    const double f_k = f_hist.back();
    LineSearchConfig ls = cfg.ls;
    ls.eps_f = eps_f;
    ls.probe_h = effective_step(scheme, h, x);
    ls.max_evals = room(budget, c.total(), grad_cost);
    LineSearchResult lr = armijo_wolfe_search(obj, x, f_k, g, d, ls);
    c.ls += lr.evals;

    Vector x_new;
    double f_new = f_k;
    int rec_case = 0;
    if (lr.flag != LsFlag::failed) {
      x_new = std::move(lr.x_plus);
      f_new = lr.f_plus;
    } else if (!cfg.recovery || lr.budget_exhausted) {
      record(f_k, 0.0, lr.flag, 0);
      return finish(lr.budget_exhausted ? StopReason::budget
                                        : StopReason::line_search_failed);
    } else {
      RecoveryContext ctx;
      ctx.scheme = scheme;
      ctx.eps_f = eps_f;
      ctx.curv = curv;
      ctx.probe = probe;
      ctx.rng = &rng;
      ctx.max_evals = room(budget, c.total(), grad_cost);
      RecoveryOutcome ro = recover(obj, x, f_k, d, g, h, best, cfg.rec, ctx);
      c.rec += ro.evals;
      rec_case = ro.case_id;
      ++hist.recovery_cases[static_cast<std::size_t>(rec_case)];
      x_new = std::move(ro.x_plus);
      f_new = ro.f_plus;
      h = ro.h_new;
      if (ro.new_eps_f) eps_f = *ro.new_eps_f;
      if (ro.new_curv) curv = *ro.new_curv;
    }

    moved = x_new != x;
    const Vector g_old = g;
    const Vector x_old = x;
    x = std::move(x_new);
    f_hist.push_back(f_new);
    if (!take_gradient(f_new)) {
      record(f_new, lr.alpha, lr.flag, rec_case);
      return finish(StopReason::evaluation_error);
    }
    if (moved) mem.try_store(sub(x, x_old), sub(g, g_old));
    record(f_new, lr.alpha, lr.flag, rec_case);
  }
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_history_csv(const RunHistory& h, std::ostream& os) {
  os << "k,f,phi_gap,evals,alpha,h,eps_f,ls_flag,recovery_case,t_ecn,t_grad,t_ls,t_rec\n";
  for (const IterationRecord& r : h.records) {
    os << r.k << ',' << num(r.f) << ',' << num(r.phi_gap) << ',' << r.t_count << ','
       << num(r.alpha) << ',' << num(r.h) << ',' << num(r.eps_f) << ','
       << (r.ls_flag ? to_string(*r.ls_flag) : std::string("none")) << ','
       << r.recovery_case << ',' << r.t_ecn << ',' << r.t_grad << ',' << r.t_ls << ','
       << r.t_rec << '\n';
  }
}

std::string history_summary_json(const RunHistory& h) {
  nlohmann::ordered_json j;
  const IterationRecord* last = h.records.empty() ? nullptr : &h.records.back();
  j["problem"] = h.problem;
  j["n"] = h.n;
  j["termination"] = to_string(h.reason);
  if (!h.error.empty()) j["error"] = h.error;
  j["iterations"] = h.records.empty() ? 0 : h.records.size() - 1;
  j["f_final"] = h.f_final;
  if (last && std::isfinite(last->phi_gap)) j["phi_gap"] = last->phi_gap;
  j["evals"] = h.objective_evals;
  j["budget"] = h.budget;
  j["gradients"] = h.gradients;
  if (last) {
    j["t_ecn"] = last->t_ecn;
    j["t_grad"] = last->t_grad;
    j["t_ls"] = last->t_ls;
    j["t_rec"] = last->t_rec;
    j["h"] = last->h;
    j["eps_f"] = last->eps_f;
  }
  j["recovery_cases"] = std::vector<std::uint64_t>(h.recovery_cases.begin() + 1,
                                                   h.recovery_cases.end());
  j["initial_noise"] = {{"eps_f", h.initial_noise.eps_f},
                        {"order", h.initial_noise.order_j},
                        {"status", to_string(h.initial_noise.status)},
                        {"evals", h.initial_noise.evals}};
  j["initial_nu2"] = {{"value", h.initial_curvature.nu2},
                      {"source", to_string(h.initial_curvature.source)}};
  return j.dump(2);
}

}  // namespace fdlm
