#pragma once

// Dense vector helpers shared by every module. Vectors are plain
// std::vector<double>; read-only arguments are taken as spans.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdlm {

using Vector = std::vector<double>;
using VecView = std::span<const double>;

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

inline double dot(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(VecView a) { return std::sqrt(dot(a, a)); }

inline double norm1(VecView a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double norm_inf(VecView a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, VecView x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// x + alpha * d
inline Vector step(VecView x, double alpha, VecView d) {
  Vector out(x.begin(), x.end());
  axpy(alpha, d, out);
  return out;
}

inline Vector sub(VecView a, VecView b) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vector scaled(VecView a, double c) {
  Vector out(a.begin(), a.end());
  for (double& v : out) v *= c;
  return out;
}

inline void require_dim(VecView x, std::size_t n, const char* what) {
  if (x.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(n) + ", got " +
                                std::to_string(x.size()));
  }
}

}  // namespace fdlm
