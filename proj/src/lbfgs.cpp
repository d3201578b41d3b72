#include "fdlm/lbfgs.hpp"

#include <stdexcept>

namespace fdlm {

LbfgsMemory::LbfgsMemory(std::size_t m, double zeta) : m_(m), zeta_(zeta) {
  if (m == 0) throw std::invalid_argument("LbfgsMemory: m must be >= 1");
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("LbfgsMemory: zeta must lie in (0, 1)");
  }
}

bool LbfgsMemory::try_store(VecView s, VecView y) {
  if (s.size() != y.size()) throw std::invalid_argument("try_store: size mismatch");
  if (!pairs_.empty()) require_dim(s, pairs_.front().s.size(), "try_store");
  const double ns = norm2(s);
  if (ns == 0.0) throw std::invalid_argument("try_store: s must be nonzero");
  const double sy = dot(s, y);
  if (!(sy > 0.0) || sy < zeta_ * ns * norm2(y)) return false;

  if (pairs_.size() == m_) pairs_.pop_front();
  pairs_.push_back(Pair{Vector(s.begin(), s.end()), Vector(y.begin(), y.end()), 1.0 / sy});
  return true;
}

Vector LbfgsMemory::apply_inverse_hessian(VecView g) const {
  Vector q(g.begin(), g.end());
  if (!pairs_.empty()) require_dim(g, pairs_.front().s.size(), "apply_inverse_hessian");

  std::vector<double> alpha(pairs_.size());
  for (std::size_t k = pairs_.size(); k-- > 0;) {
    const Pair& p = pairs_[k];
    alpha[k] = p.rho * dot(p.s, q);
    axpy(-alpha[k], p.y, q);
  }
  if (!pairs_.empty()) {
    const Pair& last = pairs_.back();
    const double gamma = (1.0 / last.rho) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const Pair& p = pairs_[k];
    const double beta = p.rho * dot(p.y, q);
    axpy(alpha[k] - beta, p.s, q);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace fdlm
