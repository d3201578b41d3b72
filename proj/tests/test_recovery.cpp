#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fdlm/recovery.hpp"
#include "helpers.hpp"

using namespace fdlm;
using fdlm::testing::custom_problem;

namespace {

const FDScheme kSmooth{FdVariant::forward, FdMode::smooth};
const FDScheme kNoisy{FdVariant::forward, FdMode::noisy};

RecoveryContext smooth_context() {
  RecoveryContext ctx;
  ctx.scheme = kSmooth;
  return ctx;
}

// Constant value everywhere; the caller supplies f_k and the stencil best.
SmoothProblem constant(double value) {
  return custom_problem("constant", 2, [value](VecView) { return value; });
}

StencilBest best_at(double f) { return StencilBest{Vector{5.0, 5.0}, f}; }

}  // namespace

TEST_CASE("re-estimated interval far below h") {
  // Alternating values +-e on a grid of spacing delta along the first axis
  // give s_1 = sqrt(2) e at order 1.
  const double e = 2.5e-9;
  const double delta = 1e-3;
  auto p = custom_problem("alternating", 2, [e, delta](VecView x) {
    const long long k = std::llround(x[0] / delta);
    return (k % 2 == 0) ? e : -e;
  });
  Objective obj(p);
  RecoveryContext ctx;
  ctx.scheme = kNoisy;
  ctx.eps_f = 1e-3;
  ctx.probe = default_probe_config(NoiseKind::stochastic_additive, {});
  ctx.probe.delta = delta;
  const double h = 1e-2;
  const auto out = recover(obj, Vector{0.0, 0.0}, e, Vector{-1.0, 0.0}, Vector{1.0, 0.0}, h,
                           best_at(0.0), RecoveryConfig{}, ctx);
  CHECK(out.case_id == 1);
  REQUIRE(out.new_eps_f.has_value());
  CHECK(*out.new_eps_f == doctest::Approx(std::sqrt(2.0) * e).epsilon(1e-12));
  CHECK(out.h_new == doctest::Approx(1e-4).epsilon(1e-10));
  CHECK(out.x_plus == Vector{0.0, 0.0});
  CHECK(out.f_plus == e);
  CHECK(out.evals == 5);
  CHECK(obj.eval_count() == 5);
}

TEST_CASE("small step along d satisfies Armijo") {
  Objective obj(constant(0.0));
  const auto out = recover(obj, Vector{0.0, 0.0}, 1.0, Vector{-1.0, 0.0}, Vector{1.0, 0.0},
                           0.1, best_at(0.5), RecoveryConfig{}, smooth_context());
  CHECK(out.case_id == 2);
  CHECK(out.x_plus[0] == doctest::Approx(-0.1));
  CHECK(out.f_plus == 0.0);
  CHECK(out.h_new == 0.1);
  CHECK(out.evals == 1);
}

TEST_CASE("stencil best wins when both probes are worse") {
  Objective obj(constant(0.7));
  // g^T d is steep enough that the Armijo test at x_h fails.
  const auto out = recover(obj, Vector{0.0, 0.0}, 1.0, Vector{-1.0, 0.0}, Vector{1e4, 0.0},
                           10.0, best_at(0.4), RecoveryConfig{}, smooth_context());
  CHECK(out.case_id == 4);
  CHECK(out.x_plus == Vector{5.0, 5.0});
  CHECK(out.f_plus == 0.4);
}

TEST_CASE("step along d accepted when it beats both") {
  Objective obj(constant(0.9));
  const auto out = recover(obj, Vector{0.0, 0.0}, 1.0, Vector{-1.0, 0.0}, Vector{1e4, 0.0},
                           10.0, best_at(1.2), RecoveryConfig{}, smooth_context());
  CHECK(out.case_id == 3);
  CHECK(out.x_plus[0] == doctest::Approx(-10.0));
  CHECK(out.f_plus == 0.9);
}

TEST_CASE("no improvement in smooth mode keeps x and h") {
  Objective obj(constant(1.5));
  const auto out = recover(obj, Vector{0.0, 0.0}, 1.0, Vector{-1.0, 0.0}, Vector{1e4, 0.0},
                           10.0, best_at(1.2), RecoveryConfig{}, smooth_context());
  CHECK(out.case_id == 5);
  CHECK(out.x_plus == Vector{0.0, 0.0});
  CHECK(out.f_plus == 1.0);
  CHECK(out.h_new == 10.0);
  CHECK_FALSE(out.new_eps_f.has_value());
}

TEST_CASE("noisy mode without improvement re-estimates along a random direction") {
  Objective obj(custom_problem("flat", 3, [](VecView) { return 1.5; }),
                {NoiseKind::stochastic_additive, 1e-3, 9});
  std::mt19937_64 rng(10);
  RecoveryContext ctx;
  ctx.scheme = kNoisy;
  ctx.eps_f = 1e-3 / std::sqrt(3.0);
  ctx.curv.nu2 = ctx.curv.nu3 = 1.0;
  ctx.probe = default_probe_config(NoiseKind::stochastic_additive, {});
  ctx.rng = &rng;
  const double h = interval(kNoisy, ctx.eps_f, ctx.curv);
  const auto out = recover(obj, Vector{0, 0, 0}, 1.0, Vector{-1, 0, 0}, Vector{1e4, 0, 0}, h,
                           StencilBest{Vector{1, 1, 1}, 0.9}, RecoveryConfig{}, ctx);
  CHECK(obj.eval_count() == out.evals);
  if (out.case_id == 5 && out.new_eps_f) {
    CHECK(out.h_new == interval(kNoisy, *out.new_eps_f, out.new_curv.value_or(ctx.curv)));
    CHECK(out.x_plus == Vector{0, 0, 0});
  }
}

TEST_CASE("every call lands in exactly one case") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<int, 6> seen{};
  for (int trial = 0; trial < 400; ++trial) {
    const NoiseModel nm{trial % 2 ? NoiseKind::stochastic_additive : NoiseKind::deterministic_additive,
                        1e-3, static_cast<std::uint64_t>(trial)};
    Objective obj(find_problem("ext_rosenbrock_10"), nm);
    Vector x = obj.problem().x0;
    for (double& v : x) v += 0.2 * u(rng);
    Vector d(10), g(10);
    for (double& v : d) v = u(rng);
    for (double& v : g) v = u(rng);
    const double f_k = obj(x);
    const double h = 1e-3 * (1.0 + 9.0 * (u(rng) + 1.0));
    StencilBest best{step(x, h, g), obj(step(x, h, g))};

    RecoveryContext ctx;
    ctx.scheme = {trial % 3 ? FdVariant::forward : FdVariant::central,
                  trial % 5 ? FdMode::noisy : FdMode::smooth};
    ctx.eps_f = 1e-3;
    ctx.probe = default_probe_config(nm.kind, {});
    ctx.rng = &rng;
    const auto before = obj.eval_count();
    const auto out = recover(obj, x, f_k, d, g, h, best, RecoveryConfig{}, ctx);
    CAPTURE(trial);
    REQUIRE(out.case_id >= 1);
    REQUIRE(out.case_id <= 5);
    ++seen[static_cast<std::size_t>(out.case_id)];
    CHECK(obj.eval_count() - before == out.evals);
    switch (out.case_id) {
      case 1:
      case 5:
        CHECK(out.x_plus == x);
        CHECK(out.f_plus == f_k);
        break;
      case 2:
      case 3:
        CHECK(out.f_plus <= f_k);
        break;
      case 4:
        CHECK(out.x_plus == best.x);
        CHECK(out.f_plus == best.f);
        CHECK(out.f_plus < f_k);
        break;
    }
    if (out.case_id == 3) CHECK(out.f_plus <= best.f);
  }
  CHECK(seen[1] + seen[2] + seen[3] + seen[4] + seen[5] == 400);
}

TEST_CASE("evaluation allowance") {
  Objective obj(find_problem("quad_n2_cond10"), {NoiseKind::stochastic_additive, 1e-3, 2});
  std::mt19937_64 rng(3);
  RecoveryContext ctx;
  ctx.scheme = kNoisy;
  ctx.eps_f = 1e-3;
  ctx.probe = default_probe_config(NoiseKind::stochastic_additive, {});
  ctx.rng = &rng;
  for (std::size_t cap : {0u, 1u, 3u, 6u, 9u}) {
    ctx.max_evals = cap;
    const auto before = obj.eval_count();
    const auto out = recover(obj, Vector{1.0, 1.0}, obj(Vector{1.0, 1.0}), Vector{-1.0, -1.0},
                             Vector{1.0, 1.0}, 1e-2, best_at(10.0), RecoveryConfig{}, ctx);
    CHECK(out.evals <= cap);
    CHECK(obj.eval_count() - before - 1 == out.evals);
  }
}

TEST_CASE("configuration is validated") {
  RecoveryConfig cfg;
  cfg.gamma1 = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.gamma2 = 0.9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
