#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fdlm/bench.hpp"

using namespace fdlm;
namespace fs = std::filesystem;

namespace {

// A run whose history is the given (evaluations, gap) sequence.
BenchRun synthetic(const std::string& problem, std::size_t n, Variant v,
                   std::vector<std::pair<std::uint64_t, double>> trace, std::uint64_t budget = 1000) {
  BenchRun r;
  r.problem = problem;
  r.n = n;
  r.variant = v;
  r.budget = budget;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.t_count = trace[k].first;
    rec.phi_gap = trace[k].second;
    rec.f = trace[k].second;
    r.history.records.push_back(rec);
  }
  return r;
}

const ProfileCurve& curve(const std::vector<ProfileCurve>& cs, Variant v) {
  for (const auto& c : cs)
    if (c.solver == to_string(v)) return c;
  throw std::runtime_error("missing curve");
}

BenchGrid small_grid() {
  BenchGrid g;
  g.problems = {"quad_n10_cond100", "beale", "wood"};
  g.noises = {{NoiseKind::none, 0.0}, {NoiseKind::stochastic_multiplicative, 1e-2},
              {NoiseKind::deterministic_additive, 1e-6}};
  g.variants = all_variants();
  g.seeds = 2;
  g.master_seed = 99;
  return g;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

std::string history_csv(const RunHistory& h) {
  std::ostringstream os;
  write_history_csv(h, os);
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fdlm_bench_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("convergence test") {
  CHECK(convergence_test(10.0, 1e-4, 0.0, 1e-5));
  CHECK_FALSE(convergence_test(10.0, 1.1e-4, 0.0, 1e-5));
  for (double tau : {1e-9, 1e-5, 0.5, 0.999}) {
    CHECK(convergence_test(7.0, 2.0, 2.0, tau));
    CHECK_FALSE(convergence_test(7.0, 7.0, 2.0, tau));
  }
  CHECK_THROWS(convergence_test(1.0, 1.0, 2.0, 0.1));
}

TEST_CASE("single solver solving everything") {
  std::vector<BenchRun> runs;
  for (int i = 0; i < 4; ++i) {
    auto r = synthetic("p" + std::to_string(i), 2, Variant::fdlm_fd, {{1, 1.0}, {30, 0.0}});
    runs.push_back(r);
  }
  const auto p = build_profiles(runs, 1e-5);
  REQUIRE(p.performance.size() == 1);
  CHECK(p.performance[0].at(1.0) == 1.0);
  CHECK(p.instances == 4);
}

TEST_CASE("solver solving nothing") {
  std::vector<BenchRun> runs{
      synthetic("p", 2, Variant::fdlm_fd, {{1, 1.0}, {30, 0.0}}),
      synthetic("p", 2, Variant::coord_search_baseline, {{1, 1.0}, {30, 0.9}})};
  const auto p = build_profiles(runs, 1e-5);
  const auto& c = curve(p.performance, Variant::coord_search_baseline);
  CHECK(c.at(1.0) == 0.0);
  CHECK(c.at(1e300) == 0.0);
  CHECK(curve(p.data, Variant::coord_search_baseline).at(1e300) == 0.0);
}

TEST_CASE("ratio steps for two solvers") {
  std::vector<BenchRun> runs{
      synthetic("p", 3, Variant::fdlm_fd, {{1, 1.0}, {10, 0.0}}),
      synthetic("p", 3, Variant::fdlm_cd, {{1, 1.0}, {20, 0.0}})};
  const auto p = build_profiles(runs, 1e-5);
  const auto& fd = curve(p.performance, Variant::fdlm_fd);
  const auto& cd = curve(p.performance, Variant::fdlm_cd);
  CHECK(fd.at(0.999) == 0.0);
  CHECK(fd.at(1.0) == 1.0);
  CHECK(cd.at(1.999) == 0.0);
  CHECK(cd.at(2.0) == 1.0);
}

TEST_CASE("data profile counts budgets in simplex gradients") {
  std::vector<BenchRun> runs{
      synthetic("solved", 9, Variant::fdlm_fd, {{1, 1.0}, {100, 0.0}}),
      synthetic("unsolved", 9, Variant::fdlm_fd, {{1, 1.0}, {100, 1.0}}),
      synthetic("unsolved", 9, Variant::fdlm_cd, {{1, 1.0}, {50, 0.0}})};
  const auto p = build_profiles(runs, 1e-5);
  const auto& d = curve(p.data, Variant::fdlm_fd);
  CHECK(d.values == std::vector<double>{10.0});
  CHECK(d.at(9.99) == 0.0);
  CHECK(d.at(10.0) == 0.5);
  CHECK(d.at(std::numeric_limits<double>::infinity()) == 0.5);
  CHECK(curve(p.data, Variant::fdlm_cd).at(1e9) == 0.5);
}

TEST_CASE("iterates beyond the budget do not count") {
  std::vector<BenchRun> runs{synthetic("p", 1, Variant::fdlm_fd, {{1, 1.0}, {300, 0.0}}, 200),
                             synthetic("p", 1, Variant::fdlm_cd, {{1, 1.0}, {150, 0.5}}, 200)};
  const auto fL = best_gaps(runs);
  REQUIRE(fL.size() == 1);
  CHECK(fL[0].second == 0.5);
  CHECK_FALSE(evals_to_solve(runs[0], 0.5, 1e-5).has_value());
  CHECK(evals_to_solve(runs[1], 0.5, 1e-5) == 150u);
}

TEST_CASE("variant names") {
  for (Variant v : all_variants()) CHECK(parse_variant(to_string(v)) == v);
  CHECK(all_variants().size() == 5);
  CHECK_THROWS(parse_variant("fdlm_xx"));
}

TEST_CASE("coordinate search books every probe") {
  Objective obj(find_problem("beale"), {NoiseKind::stochastic_additive, 1e-3, 2});
  const auto h = coordinate_search(obj, obj.problem().x0, 200);
  CHECK(h.reconstructed_count() == h.objective_evals);
  CHECK(h.objective_evals == obj.eval_count());
  CHECK(h.objective_evals <= 200);
  CHECK(h.last().phi_gap < h.records.front().phi_gap);
}

TEST_CASE("instance seeds depend on master and instance") {
  CHECK(instance_seed(1, "a") == instance_seed(1, "a"));
  CHECK(instance_seed(1, "a") != instance_seed(2, "a"));
  CHECK(instance_seed(1, "a") != instance_seed(1, "b"));
}

TEST_CASE("grid runs reconcile and profiles are monotone") {
  const auto grid = small_grid();
  const auto runs = run_grid(grid, 4);
  CHECK(runs.size() == 3 * 3 * 5 * 2);
  for (const auto& r : runs) {
    CAPTURE(r.id);
    CHECK(r.reconciled());
    CHECK(r.history.objective_evals <= r.budget);
  }

  // fL recomputed by a separate pass over every record
  std::map<std::string, double> oracle;
  for (const auto& r : runs) {
    double& v = oracle.try_emplace(r.instance(), INFINITY).first->second;
    for (const auto& rec : r.history.records) v = std::min(v, rec.phi_gap);
  }
  for (const auto& [inst, gap] : best_gaps(runs)) CHECK(oracle.at(inst) == gap);

  for (double tau : {1e-1, 1e-3, 1e-5}) {
    const auto p = build_profiles(runs, tau);
    for (const auto* set : {&p.performance, &p.data}) {
      for (const auto& c : *set) {
        double prev = 0.0;
        for (double x = 0.5; x < 1e5; x *= 1.3) {
          const double y = c.at(x);
          CHECK(y >= prev);
          CHECK(y <= 1.0);
          prev = y;
        }
      }
    }
    double best_at_one = 0.0;
    for (const auto& c : p.performance) best_at_one += c.at(1.0);
    CHECK(best_at_one >= 1.0 - 1e-12);  // every solved instance has a best solver
  }
}

TEST_CASE("runs without recovery match their twins") {
  const auto runs = run_grid(small_grid(), 2);
  std::map<std::pair<std::string, Variant>, const BenchRun*> index;
  for (const auto& r : runs) index[{r.instance(), r.variant}] = &r;
  std::size_t compared = 0;
  for (const auto& pair : recovery_ablation(runs).pairs) {
    if (pair.recovery_fired) continue;
    const Variant twin = pair.with_recovery == Variant::fdlm_fd ? Variant::fdlm_fd_norec
                                                                : Variant::fdlm_cd_norec;
    const auto& a = index.at({pair.instance, pair.with_recovery})->history;
    const auto& b = index.at({pair.instance, twin})->history;
    CHECK(history_csv(a) == history_csv(b));
    CHECK(pair.gap_with == pair.gap_without);
    ++compared;
  }
  CHECK(compared > 0);
}

TEST_CASE("grid outputs are byte reproducible") {
  const auto grid = small_grid();
  const auto a = scratch("a");
  const auto b = scratch("b");
  write_bench_outputs(run_grid(grid, 1), {1e-3, 1e-5}, a);
  write_bench_outputs(run_grid(grid, 8), {1e-3, 1e-5}, b);
  const auto fa = read_tree(a);
  const auto fb = read_tree(b);
  CHECK(fa.size() == 3 * 3 * 5 * 2 + 2 * 4 + 1);
  CHECK(fa == fb);

  // profiles rebuilt from the written run files match
  const auto c = scratch("c");
  write_profile_outputs(load_runs(a / "runs"), {1e-3, 1e-5}, c);
  const auto fc = read_tree(c);
  for (const auto& [name, content] : fc) {
    CAPTURE(name);
    CHECK(fa.at(name) == content);
  }
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("profile files") {
  std::vector<BenchRun> runs{
      synthetic("p", 3, Variant::fdlm_fd, {{1, 1.0}, {10, 0.0}}),
      synthetic("p", 3, Variant::fdlm_cd, {{1, 1.0}, {20, 0.0}})};
  const auto p = build_profiles(runs, 1e-5);
  std::ostringstream os;
  write_profile_csv(p, os, false);
  CHECK(os.str().find("fdlm_fd") != std::string::npos);
  const auto svg = profile_svg(p.performance, "perf", "ratio", true);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}
