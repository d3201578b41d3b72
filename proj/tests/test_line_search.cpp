#include <cmath>
#include <random>

#include "doctest.h"
#include "fdlm/line_search.hpp"
#include "fdlm/theory.hpp"
#include "helpers.hpp"

using namespace fdlm;
using fdlm::testing::custom_problem;

namespace {

SmoothProblem one_dim(std::function<double(double)> f) {
  return custom_problem("one_dim", 1, [f](VecView x) { return f(x[0]); });
}

}  // namespace

TEST_CASE("square with a full Newton-length overshoot") {
  Objective obj(one_dim([](double x) { return x * x; }));
  LineSearchConfig cfg;
  const auto r = armijo_wolfe_search(obj, Vector{1.0}, 1.0, Vector{2.0}, Vector{-2.0}, cfg);
  CHECK(r.flag == LsFlag::armijo_wolfe);
  CHECK(r.alpha == 0.5);
  CHECK(r.x_plus[0] == 0.0);
  CHECK(r.f_plus == 0.0);
  CHECK(r.evals == 3);
  CHECK(obj.eval_count() == 3);
}

TEST_CASE("ascent direction fails and keeps x") {
  Objective obj(one_dim([](double x) { return x; }));
  LineSearchConfig cfg;
  cfg.a_max = 3;
  const auto r = armijo_wolfe_search(obj, Vector{0.0}, 0.0, Vector{1.0}, Vector{1.0}, cfg);
  CHECK(r.flag == LsFlag::failed);
  CHECK(r.x_plus == Vector{0.0});
  CHECK(r.f_plus == 0.0);
  CHECK(r.evals == 3);
}

TEST_CASE("large noise slack never fails") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Objective obj(one_dim([](double x) { return std::sin(x); }));
  LineSearchConfig cfg;
  cfg.eps_f = 2.0;  // 2 eps_f exceeds the total variation of sin
  for (int t = 0; t < 200; ++t) {
    const double x = u(rng);
    const double d = u(rng);
    const auto r = armijo_wolfe_search(obj, Vector{x}, std::sin(x), Vector{std::cos(x)},
                                       Vector{d == 0.0 ? 1.0 : d}, cfg);
    CHECK(r.flag != LsFlag::failed);
  }
}

TEST_CASE("first trial uses the strict test") {
  Objective obj(one_dim([](double x) { return x * x; }));
  LineSearchConfig cfg;
  cfg.eps_f = 10.0;
  const auto r = armijo_wolfe_search(obj, Vector{1.0}, 1.0, Vector{2.0}, Vector{-2.0}, cfg);
  CHECK(r.alpha == 0.5);
}

TEST_CASE("one expansion when Wolfe fails") {
  // phi = x^2 from x = 10 along d = -1/4: alpha = 1 satisfies Armijo but
  // the slope is still steep, so alpha grows to 2 and is kept.
  Objective obj(one_dim([](double x) { return x * x; }));
  LineSearchConfig cfg;
  const auto r = armijo_wolfe_search(obj, Vector{10.0}, 100.0, Vector{20.0}, Vector{-0.25}, cfg);
  CHECK(r.alpha == 2.0);
  CHECK(r.flag == LsFlag::armijo_only);
  CHECK(r.evals == 4);
}

TEST_CASE("evaluation allowance") {
  Objective obj(one_dim([](double x) { return x; }));
  LineSearchConfig cfg;
  cfg.max_evals = 2;
  const auto r = armijo_wolfe_search(obj, Vector{0.0}, 0.0, Vector{1.0}, Vector{1.0}, cfg);
  CHECK(r.flag == LsFlag::failed);
  CHECK(r.budget_exhausted);
  CHECK(r.evals == 2);
  CHECK(obj.eval_count() == 2);
}

TEST_CASE("evaluations match the objective counter and replay exactly") {
  const NoiseModel nm{NoiseKind::stochastic_additive, 1e-3, 5};
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 100; ++t) {
    Objective a(find_problem("ext_rosenbrock_10"), nm);
    Objective b(find_problem("ext_rosenbrock_10"), nm);
    Vector x = a.problem().x0;
    for (double& v : x) v += 0.1 * nd(rng);
    const Vector g = a.problem().grad(x);
    Vector d = scaled(g, -1e-3);
    LineSearchConfig cfg;
    cfg.eps_f = 1e-3;
    const double f = a.phi(x);
    const auto ra = armijo_wolfe_search(a, x, f, g, d, cfg);
    const auto rb = armijo_wolfe_search(b, x, f, g, d, cfg);
    CHECK(ra.evals == a.eval_count());
    CHECK(ra.x_plus == rb.x_plus);
    CHECK(ra.f_plus == rb.f_plus);
    CHECK(ra.alpha == rb.alpha);
    CHECK(ra.flag == rb.flag);
  }
}

TEST_CASE("configuration is validated") {
  LineSearchConfig cfg;
  cfg.c2 = cfg.c1 / 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.tau = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.a_max = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("relaxed backtracking accepts the unit step on half square") {
  Objective obj(one_dim([](double x) { return 0.5 * x * x; }));
  LineSearchConfig cfg;
  cfg.c1 = 0.25;
  cfg.tau = 0.5;
  const auto r = relaxed_backtracking(obj, Vector{1.0}, 0.5, Vector{1.0}, cfg, 0.0);
  CHECK(r.alpha == 1.0);
  CHECK(r.x_plus == Vector{0.0});
  CHECK(r.flag == LsFlag::armijo_only);
  CHECK(r.evals == 1);
}

TEST_CASE("slack above the total decrease accepts the unit step") {
  Objective obj(one_dim([](double x) { return x * x; }));
  LineSearchConfig cfg;
  // x - g lands on -1 with f unchanged; f(x) - min f = 1.
  auto r = relaxed_backtracking(obj, Vector{1.0}, 1.0, Vector{2.0}, cfg, 0.0);
  CHECK(r.alpha == 0.5);
  r = relaxed_backtracking(obj, Vector{1.0}, 1.0, Vector{2.0}, cfg, 1.1);
  CHECK(r.alpha == 1.0);
}

TEST_CASE("relaxed backtracking gives up below the floor") {
  Objective obj(one_dim([](double x) { return -x; }));
  LineSearchConfig cfg;
  cfg.backtrack_limit = 5;
  const auto r = relaxed_backtracking(obj, Vector{0.0}, 0.0, Vector{1.0}, cfg, 0.0);
  CHECK(r.flag == LsFlag::failed);
  CHECK(r.evals == 6);
}

TEST_CASE("accepted steps stay above tau over L") {
  const double mu = 1.0, L = 10.0;
  const double eps_f = 1e-6, eps_g = 1e-3;
  const auto quad = make_scaled_quadratic(4, mu, L);
  Objective obj(quad, {NoiseKind::stochastic_additive, eps_f, 31});
  LineSearchConfig cfg;
  cfg.c1 = 0.1;
  cfg.tau = 0.5;
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t checked = 0;
  for (int t = 0; t < 1000; ++t) {
    Vector x(4);
    for (double& v : x) v = u(rng);
    Vector g = quad.grad(x);
    if (norm2(g) < 1e-2) continue;  // keep |e| well below |grad phi|
    const Vector e = random_in_ball(4, eps_g, rng);
    axpy(1.0, e, g);
    const auto r = relaxed_backtracking(obj, x, obj(x), g, cfg, 2.0 * eps_f);
    REQUIRE(r.flag != LsFlag::failed);
    CHECK(r.alpha > cfg.tau / L);
    ++checked;
  }
  CHECK(checked > 900);
}
