#pragma once

#include <vector>

#include "kdwbc/qp.hpp"
#include "kdwbc/types.hpp"

namespace kdwbc {

// One stage of the block-banded equality-constrained QP
//   min sum_k 1/2 x'Qx + q'x + 1/2 u'Ru + r'u + u'Sx   s.t. x_{k+1} = A x_k + B u_k + c_k
// with fixed x_0. Stage input dimensions may vary across k.
struct OcpQpStage {
  matrix_t A, B;
  vector_t c;
  matrix_t Q, R, S;  // S is n_u x n_x
  vector_t q, r;
};

struct OcpQp {
  std::vector<OcpQpStage> stages;
  matrix_t Q_final;
  vector_t q_final;
  vector_t x0;
};

struct OcpQpSolution {
  std::vector<vector_t> xs;  // N+1 states
  std::vector<vector_t> us;  // N inputs
};

// Riccati sweep over the banded KKT system; equivalent to the dense
// solveEqp on the stacked variables but O(N) in the horizon length.
// Throws QpError if a stage's Quu block is not positive definite.
OcpQpSolution solveOcpQp(const OcpQp& ocp);

}  // namespace kdwbc
