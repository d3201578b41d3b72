#pragma once

#include <cstddef>
#include <deque>

#include "fdlm/vec.hpp"

namespace fdlm {

/// Bounded store of curvature pairs (s, y) applying the L-BFGS inverse
/// Hessian approximation through the two-loop recursion.
class LbfgsMemory {
 public:
  struct Pair {
    Vector s;
    Vector y;
    double rho;  // 1 / (s^T y)
  };

  explicit LbfgsMemory(std::size_t m = 10, double zeta = 1e-8);

  /// Stores (s, y) iff s^T y >= zeta |s| |y| (and s^T y > 0), evicting the
  /// oldest pair when full. A rejected pair leaves the memory untouched.
  bool try_store(VecView s, VecView y);

  /// d = -H g. Initial matrix (s^T y / y^T y) I from the newest pair, or I
  /// while the memory is empty.
  Vector apply_inverse_hessian(VecView g) const;

  std::size_t size() const { return pairs_.size(); }
  std::size_t capacity() const { return m_; }
  double zeta() const { return zeta_; }
  const std::deque<Pair>& pairs() const { return pairs_; }
  void clear() { pairs_.clear(); }

 private:
  std::size_t m_;
  double zeta_;
  std::deque<Pair> pairs_;  // oldest first
};

}  // namespace fdlm
