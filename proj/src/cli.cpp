#include "fdlm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdlm/bench.hpp"
#include "fdlm/fd_gradient.hpp"
#include "fdlm/noise_estimation.hpp"
#include "fdlm/problems.hpp"
#include "fdlm/solver.hpp"
#include "fdlm/theory.hpp"

namespace fdlm::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string fmt(const std::string& s) { return s; }
std::string fmt(bool b) { return b ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
std::string fmt(T v) {
  return std::to_string(v);
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  const auto last = s.find_last_not_of(" \t\r");
  s.erase(last == std::string::npos ? 0 : last + 1);
  return s;
}

/// Registers options on a subcommand and remembers how to echo them.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    echo_.emplace_back(name, [&var] { return fmt(var); });
    return app_->add_option("--" + name, var, help)->capture_default_str();
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    echo_.emplace_back(name, [&var] { return fmt(var); });
    return app_->add_flag("--" + name, var, help);
  }
  void write_echo(const fs::path& file) const {
    std::ofstream os(file);
    for (const auto& [name, get] : echo_) os << name << '=' << get() << '\n';
  }
  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> echo_;
};

const CLI::Validator kProblemName(
    [](std::string& s) -> std::string {
      try {
        find_problem(s);
      } catch (const std::exception& e) {
        return e.what();
      }
      return {};
    },
    "PROBLEM");

const CLI::Validator kNoiseName(
    [](std::string& s) -> std::string {
      try {
        parse_noise_kind(s);
      } catch (const std::exception& e) {
        return e.what();
      }
      return {};
    },
    "NOISE");

struct ProblemOpts {
  std::string problem;
  std::string noise = "none";
  double xi = 1e-4;
  std::uint64_t seed = 0;

  void bind(Binder& b, bool required = true) {
    auto* p = b.option("problem", problem, "registry problem name")->check(kProblemName);
    if (required) p->required();
    b.option("noise", noise, "noise kind")->check(kNoiseName);
    b.option("xi", xi, "noise level")->check(CLI::NonNegativeNumber);
    b.option("seed", seed, "random seed");
  }
};

struct SchemeOpts {
  std::string scheme = "forward";
  std::string mode = "auto";

  void bind(Binder& b) {
    b.option("scheme", scheme, "difference scheme")->check(CLI::IsMember({"forward", "central"}));
    b.option("mode", mode, "interval rule")->check(CLI::IsMember({"auto", "smooth", "noisy"}));
  }
  FDScheme get(NoiseKind kind) const {
    FDScheme s;
    s.variant = scheme == "central" ? FdVariant::central : FdVariant::forward;
    const bool smooth = mode == "smooth" || (mode == "auto" && kind == NoiseKind::none);
    s.mode = smooth ? FdMode::smooth : FdMode::noisy;
    return s;
  }
};

void prepare_out(const std::string& out_dir) { fs::create_directories(out_dir); }

// solve -------------------------------------------------------------------

struct SolveCmd {
  ProblemOpts prob;
  SchemeOpts scheme;
  std::size_t budget = 0;
  double grad_tol = 1e-6;
  double fval_tau_hat = 2.0;
  std::size_t ma_window = 10;
  double ma_tol = 1e-8;
  std::string stop_tests = "all";
  bool no_recovery = false;
  std::size_t m = 10;
  double zeta = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  double ls_tau = 0.5;
  std::size_t a_max = 10;
  double gamma1 = 0.5;
  double gamma2 = 2.0;
  bool parallel = false;

  void bind(Binder& b) {
    prob.bind(b);
    scheme.bind(b);
    b.option("budget", budget, "evaluation budget (0: 100 n)");
    b.option("grad-tol", grad_tol, "gradient infinity-norm tolerance");
    b.option("fval-tau-hat", fval_tau_hat, "function change test factor");
    b.option("ma-window", ma_window, "moving average length");
    b.option("ma-tol", ma_tol, "moving average tolerance");
    b.option("stop-tests", stop_tests, "enabled stopping tests")
        ->check(CLI::IsMember({"all", "grad"}));
    b.flag("no-recovery", no_recovery, "stop on line search failure");
    b.option("m", m, "L-BFGS memory");
    b.option("zeta", zeta, "curvature pair threshold");
    b.option("c1", c1, "Armijo constant");
    b.option("c2", c2, "Wolfe constant");
    b.option("ls-tau", ls_tau, "backtracking factor");
    b.option("a-max", a_max, "line search trials");
    b.option("gamma1", gamma1, "lower interval acceptance factor");
    b.option("gamma2", gamma2, "upper interval acceptance factor");
    b.flag("parallel", parallel, "evaluate stencils on worker threads");
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    const SmoothProblem p = find_problem(prob.problem);
    const NoiseKind kind = parse_noise_kind(prob.noise);
    Objective obj(p, NoiseModel{kind, prob.xi, prob.seed});
    SolverConfig cfg;
    cfg.scheme = scheme.get(kind);
    cfg.budget = budget;
    cfg.stop.grad_tol = grad_tol;
    cfg.stop.fval_tau_hat = fval_tau_hat;
    cfg.stop.ma_window = ma_window;
    cfg.stop.ma_tol = ma_tol;
    cfg.stop.use_fval = cfg.stop.use_ma = stop_tests == "all";
    cfg.recovery = !no_recovery;
    cfg.m = m;
    cfg.zeta = zeta;
    cfg.ls.c1 = c1;
    cfg.ls.c2 = c2;
    cfg.ls.tau = ls_tau;
    cfg.ls.a_max = a_max;
    cfg.rec.c1 = c1;
    cfg.rec.gamma1 = gamma1;
    cfg.rec.gamma2 = gamma2;
    cfg.seed = prob.seed;
    cfg.parallel = parallel;

    const RunHistory h = solve(obj, p.x0, cfg);
    prepare_out(out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    {
      std::ofstream os(fs::path(out_dir) / "history.csv");
      write_history_csv(h, os);
    }
    std::ofstream(fs::path(out_dir) / "summary.json") << history_summary_json(h) << '\n';
    out << "solve " << p.name << ": termination=" << to_string(h.reason)
        << " f=" << short_num(h.f_final);
    if (std::isfinite(h.last().phi_gap)) out << " phi_gap=" << short_num(h.last().phi_gap);
    out << " evals=" << h.objective_evals << '\n';
    if (h.reason == StopReason::evaluation_error) {
      throw std::runtime_error("evaluation failed: " + h.error);
    }
    return kExitOk;
  }
};

// noise -------------------------------------------------------------------

struct NoiseCmd {
  ProblemOpts prob;
  std::size_t q = 0;
  double delta = 0.0;

  void bind(Binder& b) {
    prob.bind(b);
    b.option("q", q, "table spacings (0: by noise kind)");
    b.option("delta", delta, "sample spacing (0: by noise kind)")->check(CLI::NonNegativeNumber);
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    const SmoothProblem p = find_problem(prob.problem);
    const NoiseKind kind = parse_noise_kind(prob.noise);
    Objective obj(p, NoiseModel{kind, prob.xi, prob.seed});
    std::mt19937_64 rng(prob.seed);
    NoiseProbeConfig cfg = default_probe_config(kind, random_unit_vector(p.dim, rng));
    if (q) cfg.q = q;
    if (delta > 0.0) cfg.delta = delta;
    const NoiseEstimate est = estimate_noise(obj, p.x0, cfg);
    const DifferenceTable& t = est.table;

    char buf[64];
    out << "difference table (delta=" << short_num(est.delta_used) << ")\n";
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%3zu %14.6e", i, t.values[i]);
      out << buf;
      for (std::size_t j = 1; j + i <= t.q(); ++j) {
        std::snprintf(buf, sizeof buf, " %11.3e", t.entry(i, j));
        out << buf;
      }
      out << '\n';
    }
    out << "s_j:";
    for (std::size_t j = 1; j <= t.q(); ++j) {
      std::snprintf(buf, sizeof buf, " %.3e%s", t.s(j), t.changes_sign(j) ? "" : "*");
      out << buf;
    }
    out << "   (* no sign change)\n";

    prepare_out(out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    nlohmann::ordered_json j;
    j["problem"] = p.name;
    j["noise"] = prob.noise;
    j["xi"] = prob.xi;
    j["eps_f"] = est.eps_f;
    j["order"] = est.order_j;
    j["status"] = to_string(est.status);
    j["evals"] = est.evals;
    j["attempts"] = est.attempts;
    j["delta"] = est.delta_used;
    j["values"] = t.values;
    j["s"] = t.sigma;
    std::ofstream(fs::path(out_dir) / "noise.json") << j.dump(2) << '\n';

    out << "noise " << p.name << ": order=" << est.order_j << " eps_f=" << short_num(est.eps_f)
        << " status=" << to_string(est.status) << " evals=" << est.evals << '\n';
    return kExitOk;
  }
};

// grad-check --------------------------------------------------------------

struct GradCheckCmd {
  ProblemOpts prob;
  SchemeOpts scheme;

  void bind(Binder& b) {
    prob.bind(b);
    scheme.bind(b);
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    const SmoothProblem p = find_problem(prob.problem);
    const NoiseKind kind = parse_noise_kind(prob.noise);
    Objective obj(p, NoiseModel{kind, prob.xi, prob.seed});
    const FDScheme s = scheme.get(kind);
    const Vector& x = p.x0;
    const double f0 = obj(x);
    NoiseEstimate est = machine_precision_estimate(f0);
    CurvatureEstimate curv;
    if (s.mode == FdMode::noisy) {
      std::mt19937_64 rng(prob.seed);
      const Vector v = random_unit_vector(p.dim, rng);
      est = estimate_noise(obj, x, default_probe_config(kind, v));
      curv = estimate_nu2(obj, x, f0, est.eps_f, v, &est);
    }
    const double h = interval(s, est.eps_f, curv);
    const GradientResult gr = gradient(obj, x, f0, s, h);
    const Vector exact = p.grad(x);
    double max_err = 0.0, max_rel = 0.0;
    for (std::size_t i = 0; i < p.dim; ++i) {
      const double e = std::abs(gr.g[i] - exact[i]);
      max_err = std::max(max_err, e);
      max_rel = std::max(max_rel, e / std::max(1.0, std::abs(exact[i])));
    }

    prepare_out(out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    nlohmann::ordered_json j;
    j["problem"] = p.name;
    j["scheme"] = to_string(s.variant);
    j["mode"] = to_string(s.mode);
    j["eps_f"] = est.eps_f;
    j["nu2"] = curv.nu2;
    j["nu2_source"] = to_string(curv.source);
    j["h"] = h;
    j["fd_gradient"] = gr.g;
    j["exact_gradient"] = exact;
    j["max_abs_error"] = max_err;
    j["max_rel_error"] = max_rel;
    j["evals"] = obj.eval_count();
    std::ofstream(fs::path(out_dir) / "grad_check.json") << j.dump(2) << '\n';

    out << "grad-check " << p.name << ": h=" << short_num(h) << " eps_f=" << short_num(est.eps_f)
        << " nu2=" << short_num(curv.nu2) << " max_abs_error=" << short_num(max_err)
        << " evals=" << obj.eval_count() << '\n';
    return kExitOk;
  }
};

// bench / profile ---------------------------------------------------------

std::vector<double> parse_taus(const std::string& s) {
  std::vector<double> out;
  for (const std::string& t : split_list(s)) {
    const double v = std::stod(t);
    if (!(v > 0.0 && v < 1.0)) throw UsageError("tau must lie in (0, 1): " + t);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("no tau values given");
  return out;
}

std::string solved_line(const std::vector<BenchRun>& runs, double tau) {
  const ProfileSet ps = build_profiles(runs, tau);
  std::string s = "solved(tau=" + short_num(tau) + ")";
  for (const ProfileCurve& c : ps.performance) {
    s += " " + c.solver + "=" + short_num(c.at(std::numeric_limits<double>::infinity()));
  }
  return s;
}

struct BenchCmd {
  std::string problems;
  std::string noises;
  std::string variants;
  std::size_t seeds = 2;
  std::uint64_t master_seed = 20240101;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t budget_factor = 100;
  std::string taus = "0.1,1e-5,1e-9";

  BenchCmd() {
    const BenchGrid g = default_grid();
    for (const auto& p : g.problems) problems += (problems.empty() ? "" : ",") + p;
    for (const auto& n : g.noises) {
      noises += (noises.empty() ? "" : ",") + to_string(n.kind) + ":" + fmt(n.xi);
    }
    for (Variant v : g.variants) variants += (variants.empty() ? "" : ",") + to_string(v);
  }

  void bind(Binder& b) {
    b.option("problems", problems, "comma-separated problem names");
    b.option("noises", noises, "comma-separated kind:xi settings");
    b.option("variants", variants, "comma-separated solver variants");
    b.option("seeds", seeds, "seeds per (problem, noise)");
    b.option("master-seed", master_seed, "master seed");
    b.option("workers", workers, "worker threads")->check(CLI::PositiveNumber);
    b.option("budget-factor", budget_factor, "budget = factor * n")->check(CLI::PositiveNumber);
    b.option("taus", taus, "comma-separated profile accuracies");
  }

  BenchGrid grid() const {
    BenchGrid g;
    for (const std::string& p : split_list(problems)) {
      try {
        g.problems.push_back(find_problem(p).name);
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
    }
    for (const std::string& n : split_list(noises)) {
      const auto colon = n.find(':');
      if (colon == std::string::npos) throw UsageError("noise setting needs kind:xi: " + n);
      try {
        g.noises.push_back({parse_noise_kind(n.substr(0, colon)), std::stod(n.substr(colon + 1))});
      } catch (const std::exception& e) {
        throw UsageError(std::string("bad noise setting ") + n + ": " + e.what());
      }
    }
    for (const std::string& v : split_list(variants)) {
      try {
        g.variants.push_back(parse_variant(v));
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
    }
    if (g.problems.empty() || g.noises.empty() || g.variants.empty()) {
      throw UsageError("bench grid needs problems, noises and variants");
    }
    g.seeds = seeds;
    g.master_seed = master_seed;
    g.budget_factor = budget_factor;
    return g;
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    const BenchGrid g = grid();
    const std::vector<double> t = parse_taus(taus);
    const std::vector<BenchRun> runs = run_grid(g, workers);
    write_bench_outputs(runs, t, out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    std::size_t reconciled = 0;
    for (const BenchRun& r : runs) reconciled += r.reconciled() ? 1 : 0;
    out << "bench: runs=" << runs.size() << " reconciled=" << reconciled << ' '
        << solved_line(runs, t[t.size() / 2]) << '\n';
    return kExitOk;
  }
};

struct ProfileCmd {
  std::string runs_dir;
  std::size_t budget_factor = 100;
  std::string taus = "0.1,1e-5,1e-9";

  void bind(Binder& b) {
    b.option("runs", runs_dir, "directory of run CSVs (default: <out>/runs)");
    b.option("budget-factor", budget_factor, "budget = factor * n")->check(CLI::PositiveNumber);
    b.option("taus", taus, "comma-separated profile accuracies");
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    const std::vector<double> t = parse_taus(taus);
    const fs::path dir = runs_dir.empty() ? fs::path(out_dir) / "runs" : fs::path(runs_dir);
    const std::vector<BenchRun> runs = load_runs(dir, budget_factor);
    if (runs.empty()) throw std::runtime_error("no run files in " + dir.string());
    write_profile_outputs(runs, t, out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    out << "profile: runs=" << runs.size() << ' ' << solved_line(runs, t[t.size() / 2]) << '\n';
    return kExitOk;
  }
};

// theory ------------------------------------------------------------------

struct TheoryCmd {
  std::string theorem = "line-search";
  double mu = 1.0;
  double L = 10.0;
  double c1 = 0.1;
  double tau = 0.5;
  double eps_f = 1e-6;
  double eps_g = 1e-3;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t iterations = 0;
  std::size_t seeds = 50;

  void bind(Binder& b) {
    b.option("theorem", theorem, "fixed-step or line-search")
        ->check(CLI::IsMember({"fixed-step", "line-search"}));
    b.option("mu", mu, "strong convexity constant");
    b.option("L", L, "gradient Lipschitz constant");
    b.option("c1", c1, "Armijo constant (line-search)");
    b.option("tau", tau, "backtracking factor (line-search)");
    b.option("eps-f", eps_f, "function noise bound (line-search)");
    b.option("eps-g", eps_g, "gradient noise bound (fixed-step)");
    b.option("alpha", alpha, "fixed steplength (0: 1/(2L))");
    b.option("n", n, "dimension (0: 10 fixed-step, 2 line-search)");
    b.option("iterations", iterations, "iterations (0: 200 fixed-step, 500 line-search)");
    b.option("seeds", seeds, "seeded trials")->check(CLI::PositiveNumber);
  }

  int run(const std::string& out_dir, const Binder& b, std::ostream& out) const {
    if (!(mu > 0.0 && L >= mu)) throw UsageError("need 0 < mu <= L");
    nlohmann::ordered_json j;
    j["theorem"] = theorem;
    bool pass = true;
    if (theorem == "fixed-step") {
      const std::size_t dim = n ? n : 10;
      const std::size_t K = iterations ? iterations : 200;
      const double a = alpha > 0.0 ? alpha : 1.0 / (2.0 * L);
      if (a > 1.0 / L) throw UsageError("alpha must not exceed 1/L");
      const SmoothProblem p = make_scaled_quadratic(dim, mu, L);
      std::size_t contraction = 0, envelope = 0, bound = 0;
      double worst_mean = 0.0, floor = 0.0;
      for (std::uint64_t s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(s);
        const auto t = fixed_step_iterate(
            p.phi, p.grad, [&](VecView, std::size_t) { return random_in_ball(dim, eps_g, rng); },
            p.x0, a, K);
        const FixedStepReport r = check_fixed_step(t, p.phi_star, mu, a, eps_g);
        contraction += r.contraction_violations;
        envelope += r.envelope_violations;
        bound += r.noise_bound_violations;
        worst_mean = std::max(worst_mean, r.trailing_mean_gap);
        floor = r.floor;
      }
      pass = contraction == 0 && envelope == 0 && bound == 0;
      j.update({{"n", dim}, {"alpha", a}, {"iterations", K}, {"seeds", seeds},
                {"contraction_violations", contraction}, {"envelope_violations", envelope},
                {"floor", floor}, {"worst_trailing_mean_gap", worst_mean}, {"pass", pass}});
      out << "fixed-step per-step contraction: violations=" << contraction << " of "
          << seeds * K << '\n';
      out << "fixed-step R-linear envelope: violations=" << envelope << '\n';
      out << "fixed-step neighborhood: floor=" << short_num(floor)
          << " worst trailing mean gap=" << short_num(worst_mean) << '\n';
    } else {
      const std::size_t dim = n ? n : 2;
      const std::size_t K = iterations ? iterations : 500;
      const TheoryParams params = TheoryParams::with_fd_noise(mu, L, c1, tau, eps_f);
      try {
        params.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const SmoothProblem p = make_scaled_quadratic(dim, mu, L);
      std::size_t contraction = 0, checks = 0, floor_viol = 0, failures = 0;
      double max_ratio = 0.0, worst_gap = 0.0;
      for (std::uint64_t s = 0; s < seeds; ++s) {
        const LineSearchTheoryReport r = verify_line_search_convergence(params, p, p.x0, K, s);
        contraction += r.contraction_violations;
        checks += r.floor_checks;
        floor_viol += r.floor_violations;
        failures += r.search_failures;
        max_ratio = std::max(max_ratio, r.max_error_ratio);
        worst_gap = std::max(worst_gap, r.final_gap);
      }
      pass = contraction == 0 && floor_viol == 0;
      const double eta_check = params.eta() / (1.0 - params.rho());
      j.update({{"n", dim}, {"iterations", K}, {"seeds", seeds}, {"rho", params.rho()},
                {"eta_bar", params.eta_bar()}, {"eta_over_one_minus_rho", eta_check},
                {"contraction_violations", contraction}, {"floor_checks", checks},
                {"floor_violations", floor_viol}, {"search_failures", failures},
                {"max_error_ratio", max_ratio}, {"worst_final_gap", worst_gap}, {"pass", pass}});
      out << "line-search constants: rho=" << short_num(params.rho())
          << " eta_bar=" << short_num(params.eta_bar())
          << " eta/(1-rho)=" << short_num(eta_check) << '\n';
      out << "line-search per-step contraction: violations=" << contraction << " of "
          << seeds * K << '\n';
      out << "line-search steplength floor: violations=" << floor_viol << " of " << checks
          << '\n';
      out << "line-search gradient error: max |e|/eps_g=" << short_num(max_ratio) << '\n';
    }
    prepare_out(out_dir);
    b.write_echo(fs::path(out_dir) / "config.txt");
    std::ofstream(fs::path(out_dir) / "theory.json") << j.dump(2) << '\n';
    out << "theory " << theorem << ": " << (pass ? "all-pass" : "FAIL") << '\n';
    return pass ? kExitOk : kExitFailure;
  }
};

void print_chain(std::ostream& err, const std::exception& e, int depth = 0) {
  err << (depth == 0 ? "error: " : "  caused by: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_chain(err, inner, depth + 1);
  } catch (...) {
  }
}

/// Lines of `key=value` become `--key=value` arguments.
std::vector<std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    out.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-difference L-BFGS for noisy objective functions", "fdlm"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);

  SolveCmd solve_cmd;
  NoiseCmd noise_cmd;
  GradCheckCmd grad_cmd;
  BenchCmd bench_cmd;
  ProfileCmd profile_cmd;
  TheoryCmd theory_cmd;
  std::string out_dir = "fdlm_out";
  std::string config_path;

  std::vector<std::pair<CLI::App*, std::unique_ptr<Binder>>> subs;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto binder = std::make_unique<Binder>(sub);
    sub->add_option("--config", config_path, "key=value file of option defaults");
    binder->option("out", out_dir, "output directory");
    cmd.bind(*binder);
    subs.emplace_back(sub, std::move(binder));
  };
  add("solve", "minimize one problem", solve_cmd);
  add("noise", "estimate the noise level at x0", noise_cmd);
  add("grad-check", "compare a finite-difference gradient with the exact one", grad_cmd);
  add("bench", "run a benchmark grid and build profiles", bench_cmd);
  add("profile", "rebuild profiles from saved runs", profile_cmd);
  add("theory", "check convergence inequalities empirically", theory_cmd);

  try {
    // Config values go first so that explicit flags take precedence.
    std::vector<std::string> args = args_in;
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
      } else {
        continue;
      }
      const std::vector<std::string> extra = read_config(path);
      if (!args.empty()) args.insert(args.begin() + 1, extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    err << "run 'fdlm --help' for usage\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    for (const auto& [sub, binder] : subs) {
      if (!sub->parsed()) continue;
      const std::string name = sub->get_name();
      if (name == "solve") return solve_cmd.run(out_dir, *binder, out);
      if (name == "noise") return noise_cmd.run(out_dir, *binder, out);
      if (name == "grad-check") return grad_cmd.run(out_dir, *binder, out);
      if (name == "bench") return bench_cmd.run(out_dir, *binder, out);
      if (name == "profile") return profile_cmd.run(out_dir, *binder, out);
      if (name == "theory") return theory_cmd.run(out_dir, *binder, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    print_chain(err, e);
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace fdlm::cli
