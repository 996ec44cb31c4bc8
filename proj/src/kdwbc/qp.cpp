#include "kdwbc/qp.hpp"

#include <algorithm>

namespace kdwbc {

namespace {

constexpr double kRankTolFactor = 1e-10;

struct ReducedConstraints {
  matrix_t A;      // full row rank rows
  vector_t b;
  matrix_t Z;      // orthonormal nullspace basis
  vector_t x_ls;   // min-norm least-squares solution
  int rank = 0;
};

// SVD-based row reduction of A x = b, consistent with the nullspace rank rule.
ReducedConstraints reduceConstraints(const matrix_t& A, const vector_t& b, int n) {
  ReducedConstraints out;
  if (A.rows() == 0) {
    out.A = matrix_t::Zero(0, n);
    out.b = vector_t::Zero(0);
    out.Z = matrix_t::Identity(n, n);
    out.x_ls = vector_t::Zero(n);
    return out;
  }
  Eigen::JacobiSVD<matrix_t> svd(A, Eigen::ComputeFullV | Eigen::ComputeFullU);
  const double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  const double tol = kRankTolFactor * std::max(smax, 1.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > tol) ++rank;
  }
  out.rank = rank;
  if (rank == 0) {
    out.A = matrix_t::Zero(0, n);
    out.b = vector_t::Zero(0);
    out.Z = matrix_t::Identity(n, n);
    out.x_ls = vector_t::Zero(n);
    return out;
  }
  const matrix_t U1 = svd.matrixU().leftCols(rank);
  const matrix_t V1 = svd.matrixV().leftCols(rank);
  const vector_t s1 = svd.singularValues().head(rank);
  out.A = s1.asDiagonal() * V1.transpose();
  out.b = U1.transpose() * b;
  out.Z = svd.matrixV().rightCols(A.cols() - rank);
  out.x_ls = V1 * (out.b.cwiseQuotient(s1));
  return out;
}

double objectiveOf(const matrix_t& H, const vector_t& g, const vector_t& x) {
  return 0.5 * x.dot(H * x) + g.dot(x);
}

}  // namespace

void QpProblem::validate() const {
  const int n = numVariables();
  if (H.rows() != n || H.cols() != n) throw QpError("QpProblem: H dimension mismatch");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw QpError("QpProblem: H must be symmetric");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw QpError("QpProblem: equality dimensions inconsistent");
  }
  if (D_in.rows() != f_in.size() || (D_in.rows() > 0 && D_in.cols() != n)) {
    throw QpError("QpProblem: inequality dimensions inconsistent");
  }
}

matrix_t nullspaceBasis(const matrix_t& A) {
  if (A.rows() == 0 || A.cols() == 0) {
    return matrix_t::Identity(A.cols(), A.cols());
  }
  // rank-revealing QR of A^T: the trailing Q columns span null(A)
  Eigen::ColPivHouseholderQR<matrix_t> qr(A.transpose());
  const matrix_t R = qr.matrixR();
  const double rmax = std::abs(R(0, 0));
  if (rmax <= 0.0) return matrix_t::Identity(A.cols(), A.cols());
  const double tol = kRankTolFactor * rmax;
  int rank = 0;
  const int kmax = static_cast<int>(std::min(A.rows(), A.cols()));
  for (int i = 0; i < kmax; ++i) {
    if (std::abs(R(i, i)) > tol) ++rank;
  }
  const matrix_t Q = qr.householderQ();
  return Q.rightCols(A.cols() - rank);
}

QpSolution solveEqp(const matrix_t& H, const vector_t& g, const matrix_t& A_eq, const vector_t& b_eq) {
  const int n = static_cast<int>(g.size());
  const ReducedConstraints rc = reduceConstraints(A_eq, b_eq, n);

  QpSolution sol;
  if (rc.Z.cols() == 0) {
    sol.x = rc.x_ls;
    sol.objective = objectiveOf(H, g, sol.x);
    return sol;
  }
  const matrix_t Hz = rc.Z.transpose() * H * rc.Z;
  const vector_t gz = rc.Z.transpose() * (g + H * rc.x_ls);
  Eigen::LLT<matrix_t> llt(Hz);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<matrix_t> es(Hz);
    int pos = 0;
    const double etol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()[i] > etol) ++pos;
    }
    throw QpError("singular KKT system: reduced Hessian rank " + std::to_string(pos) + " of " +
                  std::to_string(Hz.rows()) + " (constraint rank " + std::to_string(rc.rank) + ")");
  }
  sol.x = rc.x_ls - rc.Z * llt.solve(gz);
  sol.objective = objectiveOf(H, g, sol.x);
  return sol;
}

QpSolution solveQp(const QpProblem& problem) {
  QpSolver solver;
  return solver.solve(problem);
}

QpSolution QpSolver::activeSetLoop(const QpProblem& problem, vector_t x, std::vector<int> working) {
  const int n = problem.numVariables();
  const int m_eq = static_cast<int>(problem.A_eq.rows());
  const int m_in = static_cast<int>(problem.D_in.rows());

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    matrix_t A(m_eq + static_cast<int>(working.size()), n);
    vector_t b(A.rows());
    A.topRows(m_eq) = problem.A_eq;
    b.head(m_eq) = problem.b_eq;
    for (size_t w = 0; w < working.size(); ++w) {
      A.row(m_eq + static_cast<int>(w)) = problem.D_in.row(working[w]);
      b[m_eq + static_cast<int>(w)] = problem.f_in[working[w]];
    }

    const QpSolution eqp = solveEqp(problem.H, problem.g, A, b);
    const vector_t p = eqp.x - x;

    if (p.norm() <= 1e-11 * (1.0 + x.norm())) {
      // multipliers of the working inequalities (min-norm least squares)
      if (working.empty()) {
        QpSolution sol;
        sol.x = x;
        sol.status = QpStatus::Optimal;
        sol.objective = objectiveOf(problem.H, problem.g, x);
        return sol;
      }
      matrix_t At(n, A.rows());
      At = A.transpose();
      const vector_t r = -(problem.H * x + problem.g);
      const vector_t lam = At.completeOrthogonalDecomposition().solve(r);
      int drop = -1;
      double most_negative = -1e-9;
      for (size_t w = 0; w < working.size(); ++w) {
        const double mu = lam[m_eq + static_cast<int>(w)];
        if (mu < most_negative) {
          most_negative = mu;
          drop = static_cast<int>(w);
        }
      }
      if (drop < 0) {
        QpSolution sol;
        sol.x = x;
        sol.status = QpStatus::Optimal;
        sol.objective = objectiveOf(problem.H, problem.g, x);
        sol.active_set = working;
        std::sort(sol.active_set.begin(), sol.active_set.end());
        return sol;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // ratio test against constraints outside the working set
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < m_in; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double dir = problem.D_in.row(i).dot(p);
      if (dir > 1e-13) {
        const double slack = problem.f_in[i] - problem.D_in.row(i).dot(x);
        const double a = slack / dir;
        if (a < alpha - 1e-14) {
          alpha = std::max(a, 0.0);
          blocking = i;
        }
      }
    }
    x += alpha * p;
    if (blocking >= 0) {
      working.push_back(blocking);
    }
    // alpha == 1 with no blocking constraint: loop re-solves and terminates
    // via the zero-step branch above.
  }

  QpSolution sol;
  sol.x = x;
  sol.status = QpStatus::MaxIterations;
  sol.objective = objectiveOf(problem.H, problem.g, x);
  sol.active_set = working;
  return sol;
}

QpSolution QpSolver::solve(const QpProblem& problem) {
  problem.validate();
  const int n = problem.numVariables();
  const int m_in = static_cast<int>(problem.D_in.rows());

  auto isFeasible = [&](const vector_t& x) {
    if (problem.A_eq.rows() > 0 && (problem.A_eq * x - problem.b_eq).cwiseAbs().maxCoeff() > kFeasTol) return false;
    if (m_in > 0 && (problem.D_in * x - problem.f_in).maxCoeff() > kFeasTol) return false;
    return true;
  };

  // warm start: re-solve the EQP of the previous active set
  if (warm_vars_ == n && !warm_active_.empty()) {
    std::vector<int> working;
    for (int i : warm_active_) {
      if (i < m_in) working.push_back(i);
    }
    matrix_t A(problem.A_eq.rows() + static_cast<int>(working.size()), n);
    vector_t b(A.rows());
    A.topRows(problem.A_eq.rows()) = problem.A_eq;
    b.head(problem.A_eq.rows()) = problem.b_eq;
    for (size_t w = 0; w < working.size(); ++w) {
      A.row(problem.A_eq.rows() + static_cast<int>(w)) = problem.D_in.row(working[w]);
      b[problem.A_eq.rows() + static_cast<int>(w)] = problem.f_in[working[w]];
    }
    try {
      const QpSolution eqp = solveEqp(problem.H, problem.g, A, b);
      if (isFeasible(eqp.x)) {
        QpSolution sol = activeSetLoop(problem, eqp.x, working);
        if (sol.status == QpStatus::Optimal) {
          warm_active_ = sol.active_set;
          return sol;
        }
      }
    } catch (const QpError&) {
      // fall through to a cold start
    }
  }

  // phase 1: equality-consistent least-squares point
  const ReducedConstraints rc = reduceConstraints(problem.A_eq, problem.b_eq, n);
  if (problem.A_eq.rows() > 0 &&
      (problem.A_eq * rc.x_ls - problem.b_eq).cwiseAbs().maxCoeff() > kFeasTol) {
    QpSolution sol;
    sol.x = rc.x_ls;
    sol.status = QpStatus::Infeasible;
    sol.objective = 0.0;
    return sol;
  }
  vector_t x0 = rc.x_ls;

  if (m_in > 0 && (problem.D_in * x0 - problem.f_in).maxCoeff() > kFeasTol) {
    // phase-1 QP over (x, s): min 1's + eps/2 (|s|^2 + |x - x0|^2)
    //   s.t. A_eq x = b_eq, D x - s <= f, -s <= 0
    // The linear slack term makes the s >= 0 bounds exactly active at the
    // optimum of a feasible problem.
    const double eps = 1e-8;
    QpProblem ph;
    ph.H = eps * matrix_t::Identity(n + m_in, n + m_in);
    ph.g = vector_t::Zero(n + m_in);
    ph.g.head(n) = -eps * x0;
    ph.g.tail(m_in).setOnes();
    ph.A_eq = matrix_t::Zero(problem.A_eq.rows(), n + m_in);
    ph.A_eq.leftCols(n) = problem.A_eq;
    ph.b_eq = problem.b_eq;
    ph.D_in = matrix_t::Zero(2 * m_in, n + m_in);
    ph.D_in.topLeftCorner(m_in, n) = problem.D_in;
    ph.D_in.topRightCorner(m_in, m_in) = -matrix_t::Identity(m_in, m_in);
    ph.D_in.bottomRightCorner(m_in, m_in) = -matrix_t::Identity(m_in, m_in);
    ph.f_in = vector_t::Zero(2 * m_in);
    ph.f_in.head(m_in) = problem.f_in;

    vector_t y0(n + m_in);
    y0.head(n) = x0;
    y0.tail(m_in) = (problem.D_in * x0 - problem.f_in).cwiseMax(0.0).array() + 1.0;

    QpSolver phase1;
    QpSolution ph_sol = phase1.activeSetLoop(ph, y0, {});
    x0 = ph_sol.x.head(n);
    if (m_in > 0 && (problem.D_in * x0 - problem.f_in).maxCoeff() > kFeasTol) {
      QpSolution sol;
      sol.x = x0;
      sol.status = QpStatus::Infeasible;
      sol.objective = ph_sol.x.tail(m_in).squaredNorm();
      return sol;
    }
  }

  QpSolution sol = activeSetLoop(problem, x0, {});
  if (sol.status == QpStatus::Optimal) {
    warm_vars_ = n;
    warm_active_ = sol.active_set;
  }
  return sol;
}

}  // namespace kdwbc
