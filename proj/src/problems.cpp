#include "fdlm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdlm {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::stochastic_additive: return "stochastic_additive";
    case NoiseKind::stochastic_multiplicative: return "stochastic_multiplicative";
    case NoiseKind::deterministic_additive: return "deterministic_additive";
    case NoiseKind::deterministic_multiplicative: return "deterministic_multiplicative";
  }
  return "none";
}

NoiseKind parse_noise_kind(std::string_view text) {
  for (auto k : {NoiseKind::none, NoiseKind::stochastic_additive,
                 NoiseKind::stochastic_multiplicative,
                 NoiseKind::deterministic_additive,
                 NoiseKind::deterministic_multiplicative}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown noise kind: " + std::string(text));
}

bool is_stochastic(NoiseKind kind) {
  return kind == NoiseKind::stochastic_additive ||
         kind == NoiseKind::stochastic_multiplicative;
}

bool is_multiplicative(NoiseKind kind) {
  return kind == NoiseKind::stochastic_multiplicative ||
         kind == NoiseKind::deterministic_multiplicative;
}

double chebyshev_noise(VecView x) {
  // Sorted magnitudes make the sums independent of coordinate order.
  Vector a(x.size());
  std::transform(x.begin(), x.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end());
  const double n1 = norm1(a);
  const double ninf = norm_inf(a);
  const double n2 = norm2(a);
  const double psi0 = 0.9 * std::sin(100.0 * n1) * std::cos(100.0 * ninf) +
                      0.1 * std::cos(n2);
  return psi0 * (4.0 * psi0 * psi0 - 3.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ index);
  // 53 random mantissa bits -> [0, 1]
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

Objective::Objective(SmoothProblem problem, NoiseModel noise, bool reentrant)
    : problem_(std::move(problem)), noise_(noise), reentrant_(reentrant) {
  if (noise_.xi < 0.0) throw std::invalid_argument("noise xi must be >= 0");
  if (!problem_.phi) throw std::invalid_argument("problem has no phi");
}

double Objective::phi(VecView x) const {
  require_dim(x, problem_.dim, "Objective::phi");
  return problem_.phi(x);
}

double Objective::evaluate(VecView x, std::uint64_t probe_index) {
  require_dim(x, problem_.dim, "Objective::evaluate");
  count_.fetch_add(1, std::memory_order_relaxed);
  const double p = problem_.phi(x);
  switch (noise_.kind) {
    case NoiseKind::none:
      return p;
    case NoiseKind::stochastic_additive:
      return p + noise_.xi * counter_uniform(noise_.seed, probe_index);
    case NoiseKind::stochastic_multiplicative:
      return p * (1.0 + noise_.xi * counter_uniform(noise_.seed, probe_index));
    case NoiseKind::deterministic_additive:
      return p + noise_.xi * chebyshev_noise(x);
    case NoiseKind::deterministic_multiplicative:
      return p * (1.0 + noise_.xi * chebyshev_noise(x));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Test functions

SmoothProblem make_scaled_quadratic(std::size_t n, double mu, double L) {
  if (n == 0 || !(mu > 0.0) || !(L >= mu)) {
    throw std::invalid_argument("quadratic needs n >= 1 and 0 < mu <= L");
  }
  Vector lambda(n, mu);
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    lambda[i] = mu * std::pow(L / mu, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  std::ostringstream name;
  name << "quad_n" << n << "_mu" << mu << "_L" << L;
  SmoothProblem p;
  p.name = name.str();
  p.dim = n;
  p.phi = [lambda](VecView x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += lambda[i] * x[i] * x[i];
    return 0.5 * s;
  };
  p.grad = [lambda](VecView x) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = lambda[i] * x[i];
    return g;
  };
  p.phi_star = 0.0;
  p.x0 = Vector(n, 1.0);
  p.x_star = Vector(n, 0.0);
  p.mu = mu;
  p.L = L;
  return p;
}

SmoothProblem make_quadratic(std::size_t n, double cond) {
  if (!(cond >= 1.0)) throw std::invalid_argument("quadratic needs cond >= 1");
  SmoothProblem p = make_scaled_quadratic(n, 1.0, n > 1 ? cond : 1.0);
  std::ostringstream name;
  name << "quad_n" << n << "_cond" << cond;
  p.name = name.str();
  return p;
}

SmoothProblem make_ext_rosenbrock(std::size_t n) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("extended Rosenbrock needs even n >= 2");
  }
  SmoothProblem p;
  p.name = "ext_rosenbrock_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      s += 100.0 * a * a + b * b;
    }
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
      const double a = x[i + 1] - x[i] * x[i];
      g[i] = -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
      g[i + 1] = 200.0 * a;
    }
    return g;
  };
  p.phi_star = 0.0;
  p.x0.resize(n);
  for (std::size_t i = 0; i < n; i += 2) {
    p.x0[i] = -1.2;
    p.x0[i + 1] = 1.0;
  }
  p.x_star = Vector(n, 1.0);
  return p;
}

namespace {

SmoothProblem beale() {
  SmoothProblem p;
  p.name = "beale";
  p.dim = 2;
  static constexpr double c[3] = {1.5, 2.25, 2.625};
  p.phi = [](VecView x) {
    double s = 0.0, yk = 1.0;
    for (int k = 0; k < 3; ++k) {
      yk *= x[1];
      const double r = c[k] - x[0] + x[0] * yk;
      s += r * r;
    }
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(2, 0.0);
    double yk = 1.0;
    for (int k = 0; k < 3; ++k) {
      const double yprev = yk;
      yk *= x[1];
      const double r = c[k] - x[0] + x[0] * yk;
      g[0] += 2.0 * r * (yk - 1.0);
      g[1] += 2.0 * r * x[0] * (k + 1) * yprev;
    }
    return g;
  };
  p.x0 = {1.0, 1.0};
  p.x_star = Vector{3.0, 0.5};
  return p;
}

SmoothProblem booth() {
  SmoothProblem p;
  p.name = "booth";
  p.dim = 2;
  p.phi = [](VecView x) {
    const double a = x[0] + 2.0 * x[1] - 7.0;
    const double b = 2.0 * x[0] + x[1] - 5.0;
    return a * a + b * b;
  };
  p.grad = [](VecView x) {
    const double a = x[0] + 2.0 * x[1] - 7.0;
    const double b = 2.0 * x[0] + x[1] - 5.0;
    return Vector{2.0 * a + 4.0 * b, 4.0 * a + 2.0 * b};
  };
  p.x0 = {0.0, 0.0};
  p.x_star = Vector{1.0, 3.0};
  p.mu = 2.0;
  p.L = 18.0;
  return p;
}

SmoothProblem helical_valley() {
  SmoothProblem p;
  p.name = "helical_valley";
  p.dim = 3;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto theta = [](double a, double b) {
    const double t = std::atan(b / a) / two_pi;
    return a < 0.0 ? t + 0.5 : t;
  };
  p.phi = [theta](VecView x) {
    const double r = std::hypot(x[0], x[1]);
    const double u = x[2] - 10.0 * theta(x[0], x[1]);
    const double v = r - 1.0;
    return 100.0 * (u * u + v * v) + x[2] * x[2];
  };
  p.grad = [theta](VecView x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double r = std::sqrt(r2);
    const double u = x[2] - 10.0 * theta(x[0], x[1]);
    const double v = r - 1.0;
    const double dth0 = -x[1] / (two_pi * r2);
    const double dth1 = x[0] / (two_pi * r2);
    return Vector{200.0 * (u * (-10.0 * dth0) + v * x[0] / r),
                  200.0 * (u * (-10.0 * dth1) + v * x[1] / r),
                  200.0 * u + 2.0 * x[2]};
  };
  p.x0 = {-1.0, 0.0, 0.0};
  p.x_star = Vector{1.0, 0.0, 0.0};
  return p;
}

// Blocks of four: (a+10b)^2 + 5(c-d)^2 + (b-2c)^4 + 10(a-d)^4
SmoothProblem ext_powell(std::size_t n) {
  SmoothProblem p;
  p.name = n == 4 ? std::string("powell_singular")
                  : "ext_powell_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 3 < x.size(); i += 4) {
      const double t1 = x[i] + 10.0 * x[i + 1];
      const double t2 = x[i + 2] - x[i + 3];
      const double t3 = x[i + 1] - 2.0 * x[i + 2];
      const double t4 = x[i] - x[i + 3];
      s += t1 * t1 + 5.0 * t2 * t2 + t3 * t3 * t3 * t3 + 10.0 * t4 * t4 * t4 * t4;
    }
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(x.size(), 0.0);
    for (std::size_t i = 0; i + 3 < x.size(); i += 4) {
      const double t1 = x[i] + 10.0 * x[i + 1];
      const double t2 = x[i + 2] - x[i + 3];
      const double t3 = x[i + 1] - 2.0 * x[i + 2];
      const double t4 = x[i] - x[i + 3];
      const double d3 = 4.0 * t3 * t3 * t3;
      const double d4 = 40.0 * t4 * t4 * t4;
      g[i] = 2.0 * t1 + d4;
      g[i + 1] = 20.0 * t1 + d3;
      g[i + 2] = 10.0 * t2 - 2.0 * d3;
      g[i + 3] = -10.0 * t2 - d4;
    }
    return g;
  };
  p.x0.resize(n);
  for (std::size_t i = 0; i < n; i += 4) {
    p.x0[i] = 3.0;
    p.x0[i + 1] = -1.0;
    p.x0[i + 2] = 0.0;
    p.x0[i + 3] = 1.0;
  }
  p.x_star = Vector(n, 0.0);
  return p;
}

SmoothProblem wood() {
  SmoothProblem p;
  p.name = "wood";
  p.dim = 4;
  p.phi = [](VecView x) {
    const double a = x[0] * x[0] - x[1];
    const double b = x[2] * x[2] - x[3];
    return 100.0 * a * a + (x[0] - 1) * (x[0] - 1) + (x[2] - 1) * (x[2] - 1) +
           90.0 * b * b +
           10.1 * ((x[1] - 1) * (x[1] - 1) + (x[3] - 1) * (x[3] - 1)) +
           19.8 * (x[1] - 1) * (x[3] - 1);
  };
  p.grad = [](VecView x) {
    const double a = x[0] * x[0] - x[1];
    const double b = x[2] * x[2] - x[3];
    return Vector{400.0 * a * x[0] + 2.0 * (x[0] - 1),
                  -200.0 * a + 20.2 * (x[1] - 1) + 19.8 * (x[3] - 1),
                  360.0 * b * x[2] + 2.0 * (x[2] - 1),
                  -180.0 * b + 20.2 * (x[3] - 1) + 19.8 * (x[1] - 1)};
  };
  p.x0 = {-3.0, -1.0, -3.0, -1.0};
  p.x_star = Vector(4, 1.0);
  return p;
}

// sum (x_i - 1)^2 - sum x_i x_{i-1}; convex quadratic
SmoothProblem trid(std::size_t n) {
  SmoothProblem p;
  p.name = "trid_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += (x[i] - 1.0) * (x[i] - 1.0);
      if (i > 0) s -= x[i] * x[i - 1];
    }
    return s;
  };
  p.grad = [](VecView x) {
    const std::size_t m = x.size();
    Vector g(m);
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = 2.0 * (x[i] - 1.0);
      if (i > 0) g[i] -= x[i - 1];
      if (i + 1 < m) g[i] -= x[i + 1];
    }
    return g;
  };
  const double nd = static_cast<double>(n);
  p.phi_star = -nd * (nd + 4.0) * (nd - 1.0) / 6.0;
  p.x0 = Vector(n, 0.0);
  Vector xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i + 1);
    xs[i] = k * (nd + 1.0 - k);
  }
  p.x_star = xs;
  return p;
}

SmoothProblem dixon_price(std::size_t n) {
  SmoothProblem p;
  p.name = "dixon_price_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = (x[0] - 1.0) * (x[0] - 1.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double r = 2.0 * x[i] * x[i] - x[i - 1];
      s += static_cast<double>(i + 1) * r * r;
    }
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(x.size(), 0.0);
    g[0] = 2.0 * (x[0] - 1.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double w = static_cast<double>(i + 1);
      const double r = 2.0 * x[i] * x[i] - x[i - 1];
      g[i] += 2.0 * w * r * 4.0 * x[i];
      g[i - 1] -= 2.0 * w * r;
    }
    return g;
  };
  p.x0 = Vector(n, 1.0);
  Vector xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::pow(2.0, static_cast<double>(i + 1));
    xs[i] = std::pow(2.0, -(e - 2.0) / e);
  }
  p.x_star = xs;
  return p;
}

SmoothProblem zakharov(std::size_t n) {
  SmoothProblem p;
  p.name = "zakharov_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s1 += x[i] * x[i];
      s2 += 0.5 * static_cast<double>(i + 1) * x[i];
    }
    return s1 + s2 * s2 + s2 * s2 * s2 * s2;
  };
  p.grad = [](VecView x) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s2 += 0.5 * static_cast<double>(i + 1) * x[i];
    const double outer = 2.0 * s2 + 4.0 * s2 * s2 * s2;
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = 2.0 * x[i] + outer * 0.5 * static_cast<double>(i + 1);
    }
    return g;
  };
  p.x0 = Vector(n, 0.5);
  p.x_star = Vector(n, 0.0);
  return p;
}

// sum i * x_i^2
SmoothProblem sum_squares(std::size_t n) {
  SmoothProblem p;
  p.name = "sum_squares_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(i + 1) * x[i] * x[i];
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * static_cast<double>(i + 1) * x[i];
    return g;
  };
  p.x0 = Vector(n, 1.0);
  p.x_star = Vector(n, 0.0);
  p.mu = 2.0;
  p.L = 2.0 * static_cast<double>(n);
  return p;
}

// sum (x_i - 1)^4 + (x_i - 1)^2; convex, quartic growth
SmoothProblem quartic(std::size_t n) {
  SmoothProblem p;
  p.name = "quartic_" + std::to_string(n);
  p.dim = n;
  p.phi = [](VecView x) {
    double s = 0.0;
    for (double v : x) {
      const double d = (v - 1.0) * (v - 1.0);
      s += d * d + d;
    }
    return s;
  };
  p.grad = [](VecView x) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - 1.0;
      g[i] = 4.0 * d * d * d + 2.0 * d;
    }
    return g;
  };
  p.x0 = Vector(n, 0.0);
  p.x_star = Vector(n, 1.0);
  return p;
}

std::vector<SmoothProblem> build_registry() {
  std::vector<SmoothProblem> r;
  r.push_back(make_quadratic(2, 1.0));
  r.push_back(make_quadratic(2, 10.0));
  r.push_back(make_quadratic(10, 10.0));
  r.push_back(make_quadratic(10, 100.0));
  r.push_back(make_quadratic(50, 1000.0));
  r.push_back(make_ext_rosenbrock(2));
  r.push_back(make_ext_rosenbrock(10));
  r.push_back(make_ext_rosenbrock(50));
  r.push_back(make_ext_rosenbrock(100));
  r.push_back(beale());
  r.push_back(booth());
  r.push_back(helical_valley());
  r.push_back(ext_powell(4));
  r.push_back(wood());
  r.push_back(zakharov(5));
  r.push_back(trid(6));
  r.push_back(dixon_price(10));
  r.push_back(ext_powell(20));
  r.push_back(sum_squares(30));
  r.push_back(quartic(50));
  r.push_back(sum_squares(100));
  return r;
}

bool parse_suffix_size(std::string_view name, std::string_view prefix,
                       std::size_t& out) {
  if (name.substr(0, prefix.size()) != prefix) return false;
  const std::string rest(name.substr(prefix.size()));
  if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) {
    return false;
  }
  out = std::stoul(rest);
  return true;
}

}  // namespace

const std::vector<SmoothProblem>& problem_registry() {
  static const std::vector<SmoothProblem> registry = build_registry();
  return registry;
}

SmoothProblem find_problem(std::string_view name) {
  for (const auto& p : problem_registry()) {
    if (p.name == name) return p;
  }
  std::size_t n = 0;
  if (parse_suffix_size(name, "ext_rosenbrock_", n)) return make_ext_rosenbrock(n);
  if (name.substr(0, 6) == "quad_n") {
    const auto pos = name.find("_cond");
    if (pos != std::string_view::npos) {
      const std::string ns(name.substr(6, pos - 6));
      const std::string cs(name.substr(pos + 5));
      if (!ns.empty() && ns.find_first_not_of("0123456789") == std::string::npos &&
          !cs.empty()) {
        std::size_t used = 0;
        const double cond = std::stod(cs, &used);
        if (used == cs.size()) return make_quadratic(std::stoul(ns), cond);
      }
    }
  }
  throw std::invalid_argument("unknown problem: " + std::string(name));
}

}  // namespace fdlm
