#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fdlm/noise_estimation.hpp"
#include "helpers.hpp"

using namespace fdlm;

namespace {

// Independent oracle for the scaled mean square of column j.
double oracle_s(const Vector& samples, std::size_t j) {
  Vector col = samples;
  for (std::size_t k = 0; k < j; ++k) {
    for (std::size_t i = 0; i + 1 < col.size(); ++i) col[i] = col[i + 1] - col[i];
    col.pop_back();
  }
  double fact_j = 1.0, fact_2j = 1.0;
  for (std::size_t k = 1; k <= j; ++k) fact_j *= static_cast<double>(k);
  for (std::size_t k = 1; k <= 2 * j; ++k) fact_2j *= static_cast<double>(k);
  const double gamma = fact_j * fact_j / fact_2j;
  double ss = 0.0;
  for (double v : col) ss += v * v;
  return std::sqrt(gamma / static_cast<double>(col.size()) * ss);
}

Vector unit(std::size_t n, std::size_t i) {
  Vector e(n, 0.0);
  e[i] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("gamma coefficients") {
  CHECK(gamma_coefficient(1) == doctest::Approx(1.0 / 2.0).epsilon(1e-15));
  CHECK(gamma_coefficient(2) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(gamma_coefficient(3) == doctest::Approx(1.0 / 20.0).epsilon(1e-15));
  CHECK(gamma_coefficient(4) == doctest::Approx(576.0 / 40320.0).epsilon(1e-15));
}

TEST_CASE("constant samples give zero differences") {
  const auto t = build_table(Vector(7, 3.25));
  for (std::size_t j = 1; j <= t.q(); ++j) {
    CHECK(t.s(j) == 0.0);
    CHECK_FALSE(t.changes_sign(j));
    for (double v : t.columns[j - 1]) CHECK(v == 0.0);
  }
}

TEST_CASE("table of squares") {
  const auto t = build_table(Vector{0, 1, 4, 9, 16, 25, 36});
  CHECK(t.q() == 6);
  CHECK(t.columns[0] == Vector{1, 3, 5, 7, 9, 11});
  CHECK(t.columns[1] == Vector{2, 2, 2, 2, 2});
  for (double v : t.columns[2]) CHECK(v == 0.0);
  CHECK(t.s(2) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  CHECK(t.s(2) == doctest::Approx(0.8165).epsilon(1e-4));
  CHECK_FALSE(select_noise_level(t).has_value());
}

TEST_CASE("alternating samples") {
  const double e = 1e-3;
  const auto t = build_table(Vector{e, -e, e, -e, e});
  CHECK(t.columns[0] == Vector{-2 * e, 2 * e, -2 * e, 2 * e});
  CHECK(t.changes_sign(1));
  CHECK(t.s(1) == doctest::Approx(std::sqrt(2.0) * e).epsilon(1e-14));
  CHECK(t.s(1) == doctest::Approx(1.414e-3).epsilon(1e-3));
}

TEST_CASE("selection takes the smallest agreeing order") {
  DifferenceTable t;
  t.values = Vector(5, 0.0);
  t.columns = {Vector(4, 1.0), Vector(3, 1.0), Vector(2, 1.0), Vector(1, 1.0)};
  t.sigma = {5.0, 1.0, 1.5, 3.9};
  t.sign_change = {false, true, true, true};
  auto level = select_noise_level(t);
  REQUIRE(level.has_value());
  CHECK(level->order == 2);
  CHECK(level->eps_f == 1.0);

  t.sigma = {5.0, 1.0, 1.5, 4.1};
  level = select_noise_level(t);
  REQUIRE(level.has_value());
  CHECK(level->order == 3);
}

TEST_CASE("too few samples") {
  CHECK_THROWS_AS(build_table(Vector{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("table matches an independent oracle on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector s(4 + static_cast<std::size_t>(trial % 6));
    for (double& v : s) v = u(rng);
    const auto t = build_table(s);
    for (std::size_t j = 1; j < t.q(); ++j) {
      for (std::size_t i = 0; i + j < t.q(); ++i) {
        CHECK(t.entry(i, j + 1) - (t.entry(i + 1, j) - t.entry(i, j)) == 0.0);
      }
    }
    for (std::size_t j = 1; j <= t.q(); ++j) {
      CHECK(t.s(j) >= 0.0);
      CHECK(t.s(j) == doctest::Approx(oracle_s(s, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("scaling samples scales every estimate") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector s(7);
    for (double& v : s) v = 2.0 + 0.3 * static_cast<double>(&v - s.data()) + 1e-2 * u(rng);
    const double c = 8.0;  // power of two keeps the comparison exact
    const auto a = build_table(s);
    const auto b = build_table(scaled(s, c));
    for (std::size_t j = 1; j <= a.q(); ++j) {
      CHECK(b.s(j) == doctest::Approx(c * a.s(j)).epsilon(1e-13));
      CHECK(b.changes_sign(j) == a.changes_sign(j));
    }
    const auto la = select_noise_level(a);
    const auto lb = select_noise_level(b);
    CHECK(la.has_value() == lb.has_value());
    if (la && lb) CHECK(la->order == lb->order);
  }
}

TEST_CASE("each column estimates the noise variance") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double var = 1.0 / 3.0;
  const std::size_t reps = 10000;
  Vector mean_sq(6, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    Vector s(7);
    for (double& v : s) v = u(rng);
    const auto t = build_table(s);
    for (std::size_t j = 1; j <= 6; ++j) mean_sq[j - 1] += t.s(j) * t.s(j);
  }
  for (std::size_t j = 1; j <= 6; ++j) {
    CAPTURE(j);
    CHECK(std::abs(mean_sq[j - 1] / static_cast<double>(reps) - var) <= 0.05 * var);
  }
}

TEST_CASE("noisy quadratic estimate lands near the noise level") {
  const double xi = 1e-4;
  const double sigma = xi / std::sqrt(3.0);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Objective obj(find_problem("quad_n2_cond10"), {NoiseKind::stochastic_additive, xi, seed});
    const Vector x{0.5, -0.25};
    auto cfg = default_probe_config(NoiseKind::stochastic_additive, Vector{0.6, 0.8});
    CHECK(cfg.q == 4);
    const auto est = estimate_noise(obj, x, cfg);
    CHECK(est.evals == obj.eval_count());
    if (est.status == NoiseStatus::ok && est.eps_f >= sigma / 3 && est.eps_f <= 3 * sigma) ++hits;
    if (est.status == NoiseStatus::ok) {
      CHECK(est.table.changes_sign(est.order_j));
      CHECK(est.eps_f == est.table.s(est.order_j));
    }
  }
  CHECK(hits >= 90);
}

TEST_CASE("four spacings cost five evaluations") {
  Objective obj(find_problem("quad_n2_cond1"), {NoiseKind::stochastic_additive, 1e-4, 3});
  auto cfg = default_probe_config(NoiseKind::stochastic_additive, unit(2, 0));
  const auto est = estimate_noise(obj, Vector{1.0, 1.0}, cfg);
  REQUIRE(est.status == NoiseStatus::ok);
  CHECK(est.evals == 5);
  CHECK(obj.eval_count() == 5);
}

TEST_CASE("noiseless quadratic yields no spurious estimate") {
  Objective obj(find_problem("quad_n2_cond10"));
  auto cfg = default_probe_config(NoiseKind::deterministic_additive, unit(2, 1));
  const auto est = estimate_noise(obj, Vector{0.3, 0.7}, cfg);
  CHECK((est.status == NoiseStatus::failed || est.eps_f <= 1e-12));
  CHECK(est.evals <= (cfg.max_retries + 1) * (cfg.q + 1));
}

TEST_CASE("failed estimates report the fallback") {
  Objective obj(find_problem("quad_n2_cond10"));
  auto cfg = default_probe_config(NoiseKind::deterministic_additive, unit(2, 1));
  const auto est = estimate_noise(obj, Vector{0.3, 0.7}, cfg, 0.125);
  if (est.status == NoiseStatus::failed) CHECK(est.eps_f == 0.125);
}

TEST_CASE("probe configuration is validated") {
  Objective obj(find_problem("quad_n2_cond1"));
  NoiseProbeConfig cfg;
  cfg.direction = Vector{1.0, 1.0};
  CHECK_THROWS_AS(estimate_noise(obj, Vector{0, 0}, cfg), std::invalid_argument);
  cfg.direction = unit(2, 0);
  cfg.q = 2;
  CHECK_THROWS_AS(estimate_noise(obj, Vector{0, 0}, cfg), std::invalid_argument);
}

TEST_CASE("evaluation cap is respected") {
  Objective obj(find_problem("quad_n2_cond1"));
  auto cfg = default_probe_config(NoiseKind::deterministic_additive, unit(2, 0));
  cfg.max_evals = 7;
  const auto est = estimate_noise(obj, Vector{0.3, 0.7}, cfg);
  CHECK(est.evals <= 7);
  CHECK(obj.eval_count() == est.evals);
}

TEST_CASE("defaults by kind") {
  CHECK(default_q(NoiseKind::stochastic_additive) == 4);
  CHECK(default_q(NoiseKind::stochastic_multiplicative) == 4);
  CHECK(default_q(NoiseKind::deterministic_additive) == 6);
  CHECK(default_q(NoiseKind::none) == 6);
  CHECK(default_delta(Vector{3.0, -5.0}, NoiseKind::deterministic_additive) == doctest::Approx(5e-2));
  CHECK(default_delta(Vector{0.1}, NoiseKind::stochastic_additive) == doctest::Approx(1e-6));
  const auto mp = machine_precision_estimate(-4.0);
  CHECK(mp.status == NoiseStatus::fallback);
  CHECK(mp.eps_f == 4.0 * kMachineEps);
}
