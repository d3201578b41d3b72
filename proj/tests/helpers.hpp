#pragma once

#include <functional>
#include <string>
#include <utility>

#include "fdlm/problems.hpp"

namespace fdlm::testing {

inline SmoothProblem custom_problem(std::string name, std::size_t n,
                                    std::function<double(VecView)> phi,
                                    Vector x0 = {}, double phi_star = 0.0) {
  SmoothProblem p;
  p.name = std::move(name);
  p.dim = n;
  p.phi = std::move(phi);
  p.phi_star = phi_star;
  p.x0 = x0.empty() ? Vector(n, 1.0) : std::move(x0);
  return p;
}

// phi(x) = sum x_i^2
inline SmoothProblem square_problem(std::size_t n) {
  return custom_problem("square", n, [](VecView x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  });
}

}  // namespace fdlm::testing
