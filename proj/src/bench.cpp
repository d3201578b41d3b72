#include "fdlm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace fdlm {

bool convergence_test(double f0, double fk, double fL, double tau) {
  if (f0 < fL) throw std::invalid_argument("convergence_test: f0 < fL");
  return f0 - fk >= (1.0 - tau) * (f0 - fL);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::fdlm_fd: return "fdlm_fd";
    case Variant::fdlm_cd: return "fdlm_cd";
    case Variant::fdlm_fd_norec: return "fdlm_fd_norec";
    case Variant::fdlm_cd_norec: return "fdlm_cd_norec";
    case Variant::coord_search_baseline: return "coord_search_baseline";
  }
  return "fdlm_fd";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::fdlm_fd, Variant::fdlm_cd,
                                      Variant::fdlm_fd_norec, Variant::fdlm_cd_norec,
                                      Variant::coord_search_baseline};
  return v;
}

Variant parse_variant(std::string_view s) {
  for (Variant v : all_variants()) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown solver variant: " + std::string(s));
}

SolverConfig variant_config(Variant v, std::size_t budget, std::uint64_t seed) {
  SolverConfig cfg;
  const bool central = v == Variant::fdlm_cd || v == Variant::fdlm_cd_norec;
  cfg.scheme = {central ? FdVariant::central : FdVariant::forward, FdMode::noisy};
  cfg.recovery = v == Variant::fdlm_fd || v == Variant::fdlm_cd;
  cfg.budget = budget;
  cfg.seed = seed;
  cfg.stop = bench_stop_config();
  return cfg;
}

RunHistory coordinate_search(Objective& obj, VecView x0, std::size_t budget,
                             double initial_step) {
  const std::size_t n = obj.dim();
  require_dim(x0, n, "coordinate_search");
  if (budget < 1) throw std::invalid_argument("coordinate_search: budget must be >= 1");
  const std::uint64_t start = obj.eval_count();
  const bool known_star = std::isfinite(obj.problem().phi_star);

  RunHistory hist;
  hist.problem = obj.problem().name;
  hist.n = n;
  hist.budget = budget;
  Vector x(x0.begin(), x0.end());
  double f = obj(x);
  std::uint64_t searched = 0;
  double s = initial_step;

  auto record = [&](double alpha) {
    IterationRecord r;
    r.k = hist.records.size();
    r.f = f;
    r.phi_gap = known_star ? obj.phi_gap(x) : std::numeric_limits<double>::quiet_NaN();
    r.alpha = alpha;
    r.h = s;
    r.t_ls = searched;
    r.t_count = 1 + searched;
    hist.records.push_back(r);
  };
  record(0.0);
  if (!std::isfinite(f)) {
    hist.reason = StopReason::evaluation_error;
    hist.error = "non-finite function value at x0";
  } else {
    hist.reason = StopReason::budget;
    bool improved_in_pass = false;
    std::size_t i = 0;
    while (1 + searched < budget) {
      bool moved = false;
      for (double sign : {1.0, -1.0}) {
        if (1 + searched >= budget) break;
        Vector y = x;
        y[i] += sign * s;
        const double fy = obj(y);
        ++searched;
        if (std::isfinite(fy) && fy < f) {
          x = std::move(y);
          f = fy;
          moved = true;
          record(s);
          break;
        }
      }
      improved_in_pass = improved_in_pass || moved;
      if (++i == n) {
        i = 0;
        if (!improved_in_pass) s *= 0.5;
        improved_in_pass = false;
      }
    }
  }
  hist.x_final = x;
  hist.f_final = f;
  hist.objective_evals = obj.eval_count() - start;
  if (hist.records.back().t_count != 1 + searched) record(0.0);
  return hist;
}

BenchGrid default_grid() {
  BenchGrid g;
  g.problems = {"quad_n10_cond100", "ext_rosenbrock_10", "beale", "booth", "helical_valley",
                "powell_singular", "wood", "zakharov_5", "trid_6", "dixon_price_10"};
  for (NoiseKind k : {NoiseKind::stochastic_additive, NoiseKind::stochastic_multiplicative,
                      NoiseKind::deterministic_additive,
                      NoiseKind::deterministic_multiplicative}) {
    for (double xi : {1e-6, 1e-2}) g.noises.push_back({k, xi});
  }
  g.variants = all_variants();
  g.seeds = 2;
  g.master_seed = 20240101;
  return g;
}

namespace {

std::string fmt_xi(double xi) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", xi);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string BenchRun::instance() const {
  return problem + "__" + to_string(noise.kind) + "__" + fmt_xi(noise.xi) + "__s" +
         std::to_string(seed);
}

double BenchRun::final_gap() const { return history.records.back().phi_gap; }

bool BenchRun::reconciled() const {
  return history.reconstructed_count() == history.objective_evals &&
         history.records.back().t_count == history.objective_evals;
}

std::uint64_t instance_seed(std::uint64_t master, std::string_view instance) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : instance) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return mix(master ^ h);
}

std::vector<BenchRun> run_grid(const BenchGrid& grid, unsigned workers) {
  std::vector<BenchRun> runs;
  for (const std::string& name : grid.problems) {
    const SmoothProblem p = find_problem(name);
    for (const NoiseSetting& ns : grid.noises) {
      for (std::uint64_t s = 0; s < grid.seeds; ++s) {
        for (Variant v : grid.variants) {
          BenchRun r;
          r.problem = p.name;
          r.n = p.dim;
          r.noise = ns;
          r.variant = v;
          r.seed = s;
          r.budget = grid.budget_factor * p.dim;
          r.id = r.instance() + "__" + to_string(v);
          runs.push_back(std::move(r));
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) {
      BenchRun& r = runs[i];
      const SmoothProblem p = find_problem(r.problem);
      const std::uint64_t seed = instance_seed(grid.master_seed, r.instance());
      Objective obj(p, NoiseModel{r.noise.kind, r.noise.xi, seed}, false);
      if (r.variant == Variant::coord_search_baseline) {
        r.history = coordinate_search(obj, p.x0, r.budget);
      } else {
        r.history = solve(obj, p.x0, variant_config(r.variant, r.budget, seed));
      }
    }
  };
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(runs.size())));
  if (w == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(work);
  }
  return runs;
}

double ProfileCurve::at(double x) const {
  if (total == 0) return 0.0;
  const auto it = std::upper_bound(values.begin(), values.end(), x);
  return static_cast<double>(it - values.begin()) / static_cast<double>(total);
}

std::vector<std::pair<std::string, double>> best_gaps(const std::vector<BenchRun>& runs) {
  std::map<std::string, double> best;
  for (const BenchRun& r : runs) {
    auto [it, inserted] = best.try_emplace(r.instance(), std::numeric_limits<double>::infinity());
    for (const IterationRecord& rec : r.history.records) {
      if (rec.t_count <= r.budget && rec.phi_gap < it->second) it->second = rec.phi_gap;
    }
  }
  return {best.begin(), best.end()};
}

std::optional<std::uint64_t> evals_to_solve(const BenchRun& run, double fL, double tau) {
  const auto& recs = run.history.records;
  const double f0 = recs.front().phi_gap;
  for (const IterationRecord& rec : recs) {
    if (rec.t_count > run.budget) break;
    if (convergence_test(f0, rec.phi_gap, std::min(fL, f0), tau)) return rec.t_count;
  }
  return std::nullopt;
}

ProfileSet build_profiles(const std::vector<BenchRun>& runs, double tau,
                          const std::vector<Variant>& solvers_in) {
  std::vector<Variant> solvers = solvers_in;
  if (solvers.empty()) {
    for (Variant v : all_variants()) {
      if (std::any_of(runs.begin(), runs.end(), [&](const BenchRun& r) { return r.variant == v; })) {
        solvers.push_back(v);
      }
    }
  }
  const auto fL = best_gaps(runs);
  std::map<std::string, double> fL_map(fL.begin(), fL.end());

  // instance -> solver index -> evals to solve
  std::map<std::string, std::vector<std::optional<std::uint64_t>>> solved;
  std::map<std::string, std::size_t> dims;
  for (const BenchRun& r : runs) {
    const auto pos = std::find(solvers.begin(), solvers.end(), r.variant);
    if (pos == solvers.end()) continue;
    auto& row = solved[r.instance()];
    row.resize(solvers.size());
    row[pos - solvers.begin()] = evals_to_solve(r, fL_map.at(r.instance()), tau);
    dims[r.instance()] = r.n;
  }

  ProfileSet out;
  out.tau = tau;
  out.instances = solved.size();
  for (Variant v : solvers) {
    out.performance.push_back({to_string(v), {}, solved.size()});
    out.data.push_back({to_string(v), {}, solved.size()});
  }
  for (const auto& [inst, row] : solved) {
    std::optional<std::uint64_t> best;
    for (const auto& e : row) {
      if (e && (!best || *e < *best)) best = e;
    }
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (!row[s]) continue;
      out.performance[s].values.push_back(static_cast<double>(*row[s]) / static_cast<double>(*best));
      out.data[s].values.push_back(static_cast<double>(*row[s]) /
                                   static_cast<double>(dims.at(inst) + 1));
    }
  }
  for (auto* set : {&out.performance, &out.data}) {
    for (ProfileCurve& c : *set) std::sort(c.values.begin(), c.values.end());
  }
  return out;
}

AblationSummary recovery_ablation(const std::vector<BenchRun>& runs) {
  std::map<std::pair<std::string, Variant>, const BenchRun*> index;
  for (const BenchRun& r : runs) index[{r.instance(), r.variant}] = &r;
  AblationSummary out;
  for (const auto& [key, run] : index) {
    Variant twin;
    if (key.second == Variant::fdlm_fd) {
      twin = Variant::fdlm_fd_norec;
    } else if (key.second == Variant::fdlm_cd) {
      twin = Variant::fdlm_cd_norec;
    } else {
      continue;
    }
    const auto it = index.find({key.first, twin});
    if (it == index.end()) continue;
    AblationPair p;
    p.instance = key.first;
    p.with_recovery = key.second;
    p.gap_with = run->final_gap();
    p.gap_without = it->second->final_gap();
    for (std::size_t c = 1; c <= 5; ++c) p.recovery_fired |= run->history.recovery_cases[c] > 0;
    if (p.gap_with <= p.gap_without) ++out.wins;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

void write_profile_csv(const ProfileSet& p, std::ostream& os, bool data) {
  os << "solver,x,fraction\n";
  for (const ProfileCurve& c : data ? p.data : p.performance) {
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (i + 1 < c.values.size() && c.values[i + 1] == c.values[i]) continue;
      os << c.solver << ',' << num(c.values[i]) << ',' << num(c.at(c.values[i])) << '\n';
    }
  }
}

std::string profile_svg(const std::vector<ProfileCurve>& curves, const std::string& title,
                        const std::string& x_label, bool log2_x) {
  const double W = 640, H = 420, left = 60, right = 170, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto tx = [&](double v) { return log2_x ? std::log2(std::max(v, 1.0)) : v; };
  double xmax = 1.0;
  for (const ProfileCurve& c : curves) {
    if (!c.values.empty()) xmax = std::max(xmax, tx(c.values.back()));
  }
  xmax *= 1.05;
  auto X = [&](double v) { return left + pw * v / xmax; };
  auto Y = [&](double f) { return top + ph * (1.0 - f); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream s;
  char buf[160];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  s << buf;
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                  left - 6, Y(f) + 4, f);
    s << buf;
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = xmax * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                  X(v), top + ph + 16, log2_x ? std::exp2(v) : v);
    s << buf;
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
    << x_label << "</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + ph / 2 << ")\">fraction of problems</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const ProfileCurve& c = curves[k];
    const char* color = colors[k % 6];
    std::ostringstream path;
    double prev_y = 0.0;
    std::snprintf(buf, sizeof buf, "M%.2f,%.2f", X(0.0), Y(0.0));
    path << buf;
    for (double v : c.values) {
      const double f = c.at(v);
      std::snprintf(buf, sizeof buf, " L%.2f,%.2f L%.2f,%.2f", X(tx(v)), Y(prev_y), X(tx(v)), Y(f));
      path << buf;
      prev_y = f;
    }
    std::snprintf(buf, sizeof buf, " L%.2f,%.2f", X(xmax), Y(prev_y));
    path << buf;
    s << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 16 + 18.0 * static_cast<double>(k);
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  left + pw + 12, ly, left + pw + 32, ly, color);
    s << buf;
    s << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << c.solver << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<BenchRun> load_runs(const std::filesystem::path& runs_dir,
                                std::size_t budget_factor) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(runs_dir)) {
    throw std::runtime_error("runs directory not found: " + runs_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  auto split = [](const std::string& s, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t pos = 0, next;
    while ((next = s.find(sep, pos)) != std::string::npos) {
      out.push_back(s.substr(pos, next - pos));
      pos = next + sep.size();
    }
    out.push_back(s.substr(pos));
    return out;
  };

  std::vector<BenchRun> runs;
  for (const fs::path& file : files) {
    const std::string id = file.stem().string();
    const auto parts = split(id, "__");
    if (parts.size() != 5 || parts[3].size() < 2 || parts[3][0] != 's') {
      throw std::runtime_error("unrecognized run file name: " + file.string());
    }
    BenchRun r;
    r.id = id;
    r.problem = parts[0];
    r.n = find_problem(r.problem).dim;
    r.noise = {parse_noise_kind(parts[1]), std::stod(parts[2])};
    r.seed = std::stoull(parts[3].substr(1));
    r.variant = parse_variant(parts[4]);
    r.budget = budget_factor * r.n;
    r.history.problem = r.problem;
    r.history.n = r.n;
    r.history.budget = r.budget;

    std::ifstream in(file);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split(line, ",");
      if (c.size() != 13) throw std::runtime_error("malformed row in " + file.string());
      IterationRecord rec;
      rec.k = std::stoull(c[0]);
      rec.f = std::stod(c[1]);
      rec.phi_gap = std::stod(c[2]);
      rec.t_count = std::stoull(c[3]);
      rec.alpha = std::stod(c[4]);
      rec.h = std::stod(c[5]);
      rec.eps_f = std::stod(c[6]);
      if (c[7] != "none") {
        rec.ls_flag = c[7] == "armijo_wolfe" ? LsFlag::armijo_wolfe
                      : c[7] == "armijo_only" ? LsFlag::armijo_only
                                              : LsFlag::failed;
      }
      rec.recovery_case = std::stoi(c[8]);
      rec.t_ecn = std::stoull(c[9]);
      rec.t_grad = std::stoull(c[10]);
      rec.t_ls = std::stoull(c[11]);
      rec.t_rec = std::stoull(c[12]);
      if (rec.recovery_case >= 1 && rec.recovery_case <= 5) {
        ++r.history.recovery_cases[static_cast<std::size_t>(rec.recovery_case)];
      }
      r.history.records.push_back(rec);
    }
    if (r.history.records.empty()) throw std::runtime_error("empty run file: " + file.string());
    r.history.objective_evals = r.history.records.back().t_count;
    r.history.f_final = r.history.records.back().f;
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_bench_outputs(const std::vector<BenchRun>& runs, const std::vector<double>& taus,
                         const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "runs");
  for (const BenchRun& r : runs) {
    std::ofstream os(dir / "runs" / (r.id + ".csv"));
    write_history_csv(r.history, os);
  }
  write_profile_outputs(runs, taus, dir);
}

void write_profile_outputs(const std::vector<BenchRun>& runs, const std::vector<double>& taus,
                           const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "profiles");

  nlohmann::ordered_json summary;
  summary["runs"] = runs.size();
  std::size_t reconciled = 0;
  for (const BenchRun& r : runs) reconciled += r.reconciled() ? 1 : 0;
  summary["reconciled_runs"] = reconciled;

  nlohmann::ordered_json profiles = nlohmann::ordered_json::array();
  for (double tau : taus) {
    const ProfileSet ps = build_profiles(runs, tau);
    char tag[32];
    std::snprintf(tag, sizeof tag, "tau%g", tau);
    for (bool data : {false, true}) {
      const std::string name = std::string(data ? "data_" : "perf_") + tag;
      std::ofstream csv(dir / "profiles" / (name + ".csv"));
      write_profile_csv(ps, csv, data);
      std::ofstream svg(dir / "profiles" / (name + ".svg"));
      svg << profile_svg(data ? ps.data : ps.performance,
                         std::string(data ? "Data profile" : "Performance profile") +
                             " (tau = " + fmt_xi(tau) + ")",
                         data ? "budget in units of n+1 evaluations" : "ratio to best solver",
                         !data);
    }
    nlohmann::ordered_json entry;
    entry["tau"] = tau;
    entry["instances"] = ps.instances;
    for (const ProfileCurve& c : ps.performance) {
      entry["solved_fraction"][c.solver] =
          c.total ? static_cast<double>(c.values.size()) / static_cast<double>(c.total) : 0.0;
    }
    profiles.push_back(entry);
  }
  summary["profiles"] = profiles;

  const AblationSummary ab = recovery_ablation(runs);
  summary["recovery_ablation"] = {{"pairs", ab.pairs.size()},
                                  {"wins", ab.wins},
                                  {"win_fraction", ab.win_fraction()}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
}

}  // namespace fdlm
