#pragma once

#include <stdexcept>
#include <vector>

#include "kdwbc/types.hpp"

namespace kdwbc {

class QpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// min 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq,  D_in x <= f_in
struct QpProblem {
  matrix_t H;
  vector_t g;
  matrix_t A_eq;
  vector_t b_eq;
  matrix_t D_in;
  vector_t f_in;

  int numVariables() const { return static_cast<int>(g.size()); }
  void validate() const;  // H symmetric to 1e-10, dimensions consistent
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

struct QpSolution {
  vector_t x;
  QpStatus status = QpStatus::Optimal;
  double objective = 0.0;
  std::vector<int> active_set;  // rows of D_in active at the solution
};

// Orthonormal basis of the nullspace of A. Rank decided at 1e-10 * ||A||;
// rank 0 (including empty A) yields the identity.
matrix_t nullspaceBasis(const matrix_t& A);

// Equality-constrained QP by the nullspace method. Rank-deficient A_eq is
// reduced to a consistent least-squares row system. Throws QpError with rank
// diagnostics when the reduced Hessian is singular.
QpSolution solveEqp(const matrix_t& H, const vector_t& g, const matrix_t& A_eq, const vector_t& b_eq);

// Primal active-set solver over the solveEqp core. Stateless convenience
// entry; QpSolver below keeps warm-start state across calls.
QpSolution solveQp(const QpProblem& problem);

class QpSolver {
 public:
  static constexpr int kMaxIterations = 200;
  static constexpr double kFeasTol = 1e-8;

  QpSolution solve(const QpProblem& problem);

 private:
  std::vector<int> warm_active_;
  int warm_vars_ = -1;

  QpSolution activeSetLoop(const QpProblem& problem, vector_t x, std::vector<int> working);
};

}  // namespace kdwbc
