#include "kdwbc/ocp_qp.hpp"

namespace kdwbc {

OcpQpSolution solveOcpQp(const OcpQp& ocp) {
  const int N = static_cast<int>(ocp.stages.size());
  if (N == 0) throw QpError("solveOcpQp: empty horizon");

  matrix_t V = ocp.Q_final;
  vector_t v = ocp.q_final;
  std::vector<matrix_t> K(static_cast<size_t>(N));
  std::vector<vector_t> kff(static_cast<size_t>(N));

  for (int k = N - 1; k >= 0; --k) {
    const OcpQpStage& s = ocp.stages[static_cast<size_t>(k)];
    const matrix_t BtV = s.B.transpose() * V;
    const matrix_t Quu = s.R + BtV * s.B;
    const matrix_t Qux = s.S + BtV * s.A;
    const vector_t qu = s.r + s.B.transpose() * (v + V * s.c);
    const vector_t qx = s.q + s.A.transpose() * (v + V * s.c);
    const matrix_t Qxx = s.Q + s.A.transpose() * V * s.A;

    Eigen::LLT<matrix_t> llt(Quu);
    if (llt.info() != Eigen::Success) {
      throw QpError("solveOcpQp: stage " + std::to_string(k) + " input Hessian not positive definite");
    }
    K[static_cast<size_t>(k)] = -llt.solve(Qux);
    kff[static_cast<size_t>(k)] = -llt.solve(qu);

    V = Qxx + Qux.transpose() * K[static_cast<size_t>(k)];
    V = 0.5 * (V + V.transpose());
    v = qx + Qux.transpose() * kff[static_cast<size_t>(k)];
  }

  OcpQpSolution sol;
  sol.xs.resize(static_cast<size_t>(N) + 1);
  sol.us.resize(static_cast<size_t>(N));
  sol.xs[0] = ocp.x0;
  for (int k = 0; k < N; ++k) {
    const OcpQpStage& s = ocp.stages[static_cast<size_t>(k)];
    sol.us[static_cast<size_t>(k)] = K[static_cast<size_t>(k)] * sol.xs[static_cast<size_t>(k)] + kff[static_cast<size_t>(k)];
    sol.xs[static_cast<size_t>(k) + 1] =
        s.A * sol.xs[static_cast<size_t>(k)] + s.B * sol.us[static_cast<size_t>(k)] + s.c;
  }
  return sol;
}

}  // namespace kdwbc
