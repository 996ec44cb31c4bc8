#pragma once

// Test-side QP oracles: dense KKT factorization and exhaustive active-set
// enumeration, independent of the library's solver path.

#include <optional>

#include "kdwbc/types.hpp"

namespace kdwbc::test {

inline std::optional<vector_t> kktSolve(const matrix_t& H, const vector_t& g, const matrix_t& A,
                                        const vector_t& b) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(A.rows());
  matrix_t K = matrix_t::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  if (m > 0) {
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
  }
  vector_t rhs(n + m);
  rhs.head(n) = -g;
  rhs.tail(m) = b;
  Eigen::FullPivLU<matrix_t> lu(K);
  if (!lu.isInvertible()) return std::nullopt;
  return vector_t(lu.solve(rhs).head(n));
}

// min 1/2 x'Hx + g'x s.t. A x = b, D x <= f by trying every inequality subset
// as active equalities.
inline std::optional<vector_t> enumerateQp(const matrix_t& H, const vector_t& g, const matrix_t& A,
                                           const vector_t& b, const matrix_t& D, const vector_t& f) {
  const int mi = static_cast<int>(D.rows());
  const int me = static_cast<int>(A.rows());
  const int n = static_cast<int>(g.size());
  std::optional<vector_t> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i) {
      if (mask & (1 << i)) act.push_back(i);
    }
    matrix_t Aa(me + static_cast<int>(act.size()), n);
    vector_t ba(Aa.rows());
    if (me > 0) {
      Aa.topRows(me) = A;
      ba.head(me) = b;
    }
    for (size_t w = 0; w < act.size(); ++w) {
      Aa.row(me + static_cast<int>(w)) = D.row(act[w]);
      ba[me + static_cast<int>(w)] = f[act[w]];
    }
    const auto cand = kktSolve(H, g, Aa, ba);
    if (!cand) continue;
    if (me > 0 && (A * *cand - b).cwiseAbs().maxCoeff() > 1e-7) continue;
    if (mi > 0 && (D * *cand - f).maxCoeff() > 1e-7) continue;
    const double obj = 0.5 * cand->dot(H * *cand) + g.dot(*cand);
    if (obj < best_obj - 1e-12) {
      best_obj = obj;
      best = *cand;
    }
  }
  return best;
}

}  // namespace kdwbc::test
