#include "fdlm/noise_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdlm {

double gamma_coefficient(std::size_t j) {
  double g = 1.0;
  for (std::size_t k = 1; k <= j; ++k) {
    g *= static_cast<double>(k) / (2.0 * static_cast<double>(2 * k - 1));
  }
  return g;
}

DifferenceTable build_table(VecView samples) {
  if (samples.size() < 4) {
    throw std::invalid_argument("build_table: need at least 4 samples");
  }
  DifferenceTable t;
  t.values.assign(samples.begin(), samples.end());
  const std::size_t q = t.q();
  t.columns.reserve(q);
  t.sigma.reserve(q);
  t.sign_change.reserve(q);

  Vector prev = t.values;
  for (std::size_t j = 1; j <= q; ++j) {
    Vector col(prev.size() - 1);
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = prev[i + 1] - prev[i];

    double sumsq = 0.0;
    double lo = col[0], hi = col[0];
    for (double v : col) {
      sumsq += v * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    t.sigma.push_back(std::sqrt(gamma_coefficient(j) /
                                static_cast<double>(q + 1 - j) * sumsq));
    t.sign_change.push_back(lo * hi < 0.0);
    t.columns.push_back(col);
    prev = std::move(col);
  }
  return t;
}

std::optional<NoiseLevel> select_noise_level(const DifferenceTable& table,
                                             double agreement) {
  const std::size_t q = table.q();
  for (std::size_t j = 1; j <= q; ++j) {
    if (!table.changes_sign(j)) continue;
    const std::size_t last = std::min(j + 2, q);
    double lo = table.s(j), hi = table.s(j);
    for (std::size_t k = j + 1; k <= last; ++k) {
      lo = std::min(lo, table.s(k));
      hi = std::max(hi, table.s(k));
    }
    if (hi <= agreement * lo) return NoiseLevel{j, table.s(j)};
  }
  return std::nullopt;
}

std::size_t default_q(NoiseKind kind) { return is_stochastic(kind) ? 4 : 6; }

double default_delta(VecView x, NoiseKind kind) {
  const double rel = is_stochastic(kind) ? 1e-6 : 1e-2;
  return rel * std::max(1.0, norm_inf(x));
}

NoiseProbeConfig default_probe_config(NoiseKind kind, Vector direction) {
  NoiseProbeConfig cfg;
  cfg.kind = kind;
  cfg.q = default_q(kind);
  cfg.direction = std::move(direction);
  return cfg;
}

std::string to_string(NoiseStatus s) {
  switch (s) {
    case NoiseStatus::ok: return "ok";
    case NoiseStatus::fallback: return "fallback";
    case NoiseStatus::failed: return "failed";
  }
  return "failed";
}

NoiseEstimate machine_precision_estimate(double f_x) {
  NoiseEstimate e;
  e.eps_f = kMachineEps * std::max(1.0, std::abs(f_x));
  e.status = NoiseStatus::fallback;
  return e;
}

namespace {

// Value used to judge whether first differences are lost in rounding.
double reference_magnitude(const DifferenceTable& t) {
  const std::size_t q = t.q();
  if (q % 2 == 0) return std::abs(t.values[q / 2]);
  double s = 0.0;
  for (double v : t.values) s += std::abs(v);
  return s / static_cast<double>(t.values.size());
}

bool first_differences_negligible(const DifferenceTable& t) {
  const double floor = kMachineEps * std::max(1.0, reference_magnitude(t));
  for (double v : t.columns[0]) {
    if (std::abs(v) > floor) return false;
  }
  return true;
}

}  // namespace

NoiseEstimate estimate_noise(Objective& obj, VecView x,
                             const NoiseProbeConfig& cfg,
                             std::optional<double> fallback) {
  require_dim(x, obj.dim(), "estimate_noise");
  require_dim(cfg.direction, obj.dim(), "estimate_noise direction");
  if (cfg.q < 3) throw std::invalid_argument("estimate_noise: q must be >= 3");
  if (std::abs(norm2(cfg.direction) - 1.0) > 1e-12) {
    throw std::invalid_argument("estimate_noise: direction must have unit norm");
  }
  if (cfg.delta < 0.0) throw std::invalid_argument("estimate_noise: delta < 0");

  const std::size_t q = cfg.q;
  NoiseEstimate est;
  double delta = cfg.delta > 0.0 ? cfg.delta : default_delta(x, cfg.kind);

  for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (est.evals + q + 1 > cfg.max_evals) break;

    Vector samples(q + 1);
    const std::uint64_t ticket = obj.reserve_tickets(q + 1);
    for (std::size_t i = 0; i <= q; ++i) {
      const double u = -static_cast<double>(q) / 2.0 + static_cast<double>(i);
      samples[i] = obj.evaluate(step(x, u * delta, cfg.direction), ticket + i);
    }
    est.evals += q + 1;
    est.attempts = attempt + 1;
    est.delta_used = delta;

    if (!std::all_of(samples.begin(), samples.end(),
                     [](double v) { return std::isfinite(v); })) {
      // Probe left the region where f is finite; shrink toward x.
      delta *= 1e-2;
      continue;
    }

    est.table = build_table(samples);
    if (auto level = select_noise_level(est.table, cfg.agreement)) {
      est.eps_f = level->eps_f;
      est.order_j = level->order;
      est.status = NoiseStatus::ok;
      return est;
    }

    if (first_differences_negligible(est.table)) {
      delta *= 1e2;
    } else {
      // Low-order columns still carry the smooth part (s_1 well above the
      // noisy columns), or no column looks like noise: either way the
      // spacing is too wide.
      delta *= 1e-2;
    }
  }

  est.status = NoiseStatus::failed;
  est.order_j = 0;
  if (fallback) {
    est.eps_f = *fallback;
  } else {
    const double fx = est.table.values.empty() ? 0.0 : reference_magnitude(est.table);
    est.eps_f = kMachineEps * std::max(1.0, fx);
  }
  return est;
}

}  // namespace fdlm
