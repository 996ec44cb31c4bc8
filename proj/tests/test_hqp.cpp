#include <gtest/gtest.h>

#include <random>

#include "kdwbc/wbc.hpp"
#include "qp_oracles.hpp"

using namespace kdwbc;

namespace {

// Brute-force lexicographic oracle: solve each level with all previous level
// residuals pinned by explicit equality constraints and previous slacks frozen,
// using the enumeration oracle as the QP core.
std::vector<double> lexicographicOracle(const std::vector<Task>& tasks, int n) {
  std::vector<double> residuals;
  matrix_t A_pin = matrix_t::Zero(0, n);
  vector_t b_pin = vector_t::Zero(0);
  matrix_t D_all = matrix_t::Zero(0, n);
  vector_t f_all = vector_t::Zero(0);
  vector_t xi = vector_t::Zero(n);

  for (int p = 1; p <= 4; ++p) {
    matrix_t A(0, n);
    vector_t b(0);
    matrix_t D(0, n);
    vector_t f(0);
    for (const Task& t : tasks) {
      if (t.priority != p) continue;
      if (t.A.rows() > 0) {
        matrix_t tmp(A.rows() + t.A.rows(), n);
        tmp << A, t.A;
        A = tmp;
        vector_t tb(b.size() + t.b.size());
        tb << b, t.b;
        b = tb;
      }
      if (t.D.rows() > 0) {
        matrix_t tmp(D.rows() + t.D.rows(), n);
        tmp << D, t.D;
        D = tmp;
        vector_t tf(f.size() + t.f.size());
        tf << f, t.f;
        f = tf;
      }
    }
    if (A.rows() == 0 && D.rows() == 0) continue;

    // variables (xi, s): min |A xi - b|^2 + |s|^2 (s only for p > 1)
    const int ms = p == 1 ? 0 : static_cast<int>(D.rows());
    const int nv = n + ms;
    matrix_t H = matrix_t::Zero(nv, nv);
    vector_t g = vector_t::Zero(nv);
    H.topLeftCorner(n, n) = 2.0 * A.transpose() * A + 2e-8 * matrix_t::Identity(n, n);
    g.head(n) = -2.0 * A.transpose() * b;
    if (ms > 0) H.bottomRightCorner(ms, ms) = 2.0 * matrix_t::Identity(ms, ms);

    matrix_t Aeq = matrix_t::Zero(A_pin.rows(), nv);
    Aeq.leftCols(n) = A_pin;
    matrix_t Din = matrix_t::Zero(D_all.rows() + D.rows() + (p == 1 ? 0 : 0), nv);
    vector_t fin(Din.rows());
    Din.topLeftCorner(D_all.rows(), n) = D_all;
    fin.head(D_all.rows()) = f_all;
    if (D.rows() > 0) {
      Din.bottomLeftCorner(D.rows(), n) = D;
      if (ms > 0) Din.bottomRightCorner(D.rows(), ms) = -matrix_t::Identity(ms, ms);
      fin.tail(D.rows()) = f;
    }

    const auto sol = test::enumerateQp(H, g, Aeq, b_pin, Din, fin);
    if (!sol) {
      residuals.push_back(std::numeric_limits<double>::quiet_NaN());
      return residuals;
    }
    xi = sol->head(n);
    residuals.push_back(A.rows() > 0 ? (A * xi - b).norm() : 0.0);

    // pin this level's equality residual and freeze its slacks
    if (A.rows() > 0) {
      matrix_t tmp(A_pin.rows() + A.rows(), n);
      tmp << A_pin, A;
      A_pin = tmp;
      vector_t tb(b_pin.size() + A.rows());
      tb << b_pin, vector_t(A * xi);
      b_pin = tb;
    }
    if (D.rows() > 0) {
      vector_t f_eff = f;
      if (ms > 0) f_eff += sol->tail(ms).cwiseMax(0.0);
      matrix_t tmp(D_all.rows() + D.rows(), n);
      tmp << D_all, D;
      D_all = tmp;
      vector_t tf(f_all.size() + f_eff.size());
      tf << f_all, f_eff;
      f_all = tf;
    }
  }
  return residuals;
}

std::vector<Task> randomTaskSet(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> rows_d(1, 2);
  std::vector<Task> tasks;
  // three levels: 1 (hard, small), 2, 3
  for (int p = 1; p <= 3; ++p) {
    Task t;
    t.priority = p;
    const int rows = rows_d(rng);
    t.A = matrix_t::Zero(rows, n);
    t.b = vector_t::Zero(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < n; ++j) t.A(i, j) = gauss(rng);
      t.b[i] = 0.3 * gauss(rng);
    }
    if (p == 2 && (rng() % 2) == 0) {
      t.D = matrix_t::Zero(1, n);
      for (int j = 0; j < n; ++j) t.D(0, j) = gauss(rng);
      t.f = vector_t::Constant(1, 0.5 + 0.5 * std::abs(gauss(rng)));
    } else {
      t.D = matrix_t::Zero(0, n);
      t.f = vector_t::Zero(0);
    }
    t.label = "level" + std::to_string(p);
    tasks.push_back(t);
  }
  return tasks;
}

}  // namespace

TEST(Hqp, SingleLevelIdentity) {
  const int n = 4;
  Task t;
  t.priority = 1;
  t.A = matrix_t::Identity(n, n);
  t.b = vector_t::LinSpaced(n, 1.0, 4.0);
  t.D = matrix_t::Zero(0, n);
  t.f = vector_t::Zero(0);
  t.label = "identity";
  WbcSolver solver;
  const WbcSolution sol = solver.solveHierarchical({t});
  EXPECT_LE((sol.xi - t.b).norm(), 1e-6);
}

TEST(Hqp, LexicographicSemantics) {
  // level 1 pins xi_0 = 1; level 2 wants (0, 0) -> solution (1, 0)
  Task t1, t2;
  t1.priority = 1;
  t1.A = matrix_t::Zero(1, 2);
  t1.A(0, 0) = 1.0;
  t1.b = vector_t::Constant(1, 1.0);
  t1.D = matrix_t::Zero(0, 2);
  t1.f = vector_t::Zero(0);
  t1.label = "pin";
  t2.priority = 2;
  t2.A = matrix_t::Identity(2, 2);
  t2.b = vector_t::Zero(2);
  t2.D = matrix_t::Zero(0, 2);
  t2.f = vector_t::Zero(0);
  t2.label = "origin";
  WbcSolver solver;
  const WbcSolution sol = solver.solveHierarchical({t1, t2});
  EXPECT_NEAR(sol.xi[0], 1.0, 1e-7);
  EXPECT_NEAR(sol.xi[1], 0.0, 1e-7);
}

TEST(Hqp, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dims(3, 6);
  int compared = 0;
  for (int trial = 0; trial < 60 && compared < 30; ++trial) {
    const int n = dims(rng);
    const std::vector<Task> tasks = randomTaskSet(rng, n);
    const std::vector<double> oracle = lexicographicOracle(tasks, n);
    if (!oracle.empty() && std::isnan(oracle.back())) continue;

    WbcSolver solver;
    const WbcSolution sol = solver.solveHierarchical(tasks);
    if (sol.xi.cwiseAbs().maxCoeff() > 30.0) continue;  // near-singular draw, ill-conditioned comparison
    ASSERT_EQ(oracle.size(), 3u) << "trial " << trial;
    for (int p = 0; p < 3; ++p) {
      EXPECT_NEAR(sol.level_residuals[static_cast<size_t>(p)], oracle[static_cast<size_t>(p)], 1e-6)
          << "trial " << trial << " level " << p + 1;
    }
    ++compared;
  }
  EXPECT_GE(compared, 30);
}

TEST(Hqp, HierarchyInvariance) {
  // removing a lower-priority task leaves higher-priority residuals unchanged
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const std::vector<Task> tasks = randomTaskSet(rng, n);
    WbcSolver a, b;
    const WbcSolution full = a.solveHierarchical(tasks);
    std::vector<Task> reduced;
    for (const Task& t : tasks) {
      if (t.priority < 3) reduced.push_back(t);
    }
    const WbcSolution part = b.solveHierarchical(reduced);
    for (int p = 0; p < 2; ++p) {
      EXPECT_NEAR(full.level_residuals[static_cast<size_t>(p)], part.level_residuals[static_cast<size_t>(p)], 1e-8)
          << "trial " << trial << " level " << p + 1;
    }
  }
}

TEST(Hqp, Level1InfeasibleThrows) {
  Task t;
  t.priority = 1;
  t.A = matrix_t::Zero(2, 2);
  t.A << 1, 0, 1, 0;
  t.b = vector_t::Zero(2);
  t.b << 0.0, 1.0;  // contradictory rows
  t.D = matrix_t::Zero(0, 2);
  t.f = vector_t::Zero(0);
  t.label = "contradiction";
  WbcSolver solver;
  EXPECT_THROW(solver.solveHierarchical({t}), WbcError);
}

TEST(Hqp, RankCollapseFlagged) {
  Task t1, t2;
  t1.priority = 1;
  t1.A = matrix_t::Identity(2, 2);
  t1.b = vector_t::Constant(2, 1.0);
  t1.D = matrix_t::Zero(0, 2);
  t1.f = vector_t::Zero(0);
  t1.label = "full rank";
  t2.priority = 2;
  t2.A = matrix_t::Identity(2, 2);
  t2.b = vector_t::Zero(2);
  t2.D = matrix_t::Zero(0, 2);
  t2.f = vector_t::Zero(0);
  t2.label = "wish";
  WbcSolver solver;
  const WbcSolution sol = solver.solveHierarchical({t1, t2});
  EXPECT_TRUE(sol.rank_collapsed);
  EXPECT_LE((sol.xi - vector_t::Constant(2, 1.0)).norm(), 1e-6);
}

TEST(FlatQp, MatchesHqpWithoutConflict) {
  // orthogonal tasks: both solvers reach the same point
  Task t1, t2, t3;
  t1.priority = 1;
  t1.A = matrix_t::Zero(1, 3);
  t1.A(0, 0) = 1.0;
  t1.b = vector_t::Constant(1, 2.0);
  t1.D = matrix_t::Zero(0, 3);
  t1.f = vector_t::Zero(0);
  t1.label = "hard";
  t2.priority = 2;
  t2.A = matrix_t::Zero(1, 3);
  t2.A(0, 1) = 1.0;
  t2.b = vector_t::Constant(1, -1.0);
  t2.D = matrix_t::Zero(0, 3);
  t2.f = vector_t::Zero(0);
  t2.label = "limb";
  t3.priority = 3;
  t3.A = matrix_t::Zero(1, 3);
  t3.A(0, 2) = 1.0;
  t3.b = vector_t::Constant(1, 0.5);
  t3.D = matrix_t::Zero(0, 3);
  t3.f = vector_t::Zero(0);
  t3.label = "base";
  WbcSolver solver;
  const WbcSolution h = solver.solveHierarchical({t1, t2, t3});
  WbcSolver solver2;
  const WbcSolution f = solver2.solveFlat({t1, t2, t3});
  EXPECT_LE((h.xi - f.xi).norm(), 1e-6);
}

TEST(FlatQp, ConflictHurtsLimbTracking) {
  // limb and base want incompatible values of the same variable: the flat QP
  // trades them off, the cascade protects the limb
  Task t1, t2, t3;
  t1.priority = 1;
  t1.A = matrix_t::Zero(1, 2);
  t1.A(0, 1) = 1.0;
  t1.b = vector_t::Zero(1);
  t1.D = matrix_t::Zero(0, 2);
  t1.f = vector_t::Zero(0);
  t1.label = "hard";
  t2.priority = 2;
  t2.A = matrix_t::Zero(1, 2);
  t2.A(0, 0) = 1.0;
  t2.b = vector_t::Constant(1, 1.0);
  t2.D = matrix_t::Zero(0, 2);
  t2.f = vector_t::Zero(0);
  t2.label = "limb";
  t3.priority = 3;
  t3.A = matrix_t::Zero(1, 2);
  t3.A(0, 0) = 1.0;
  t3.b = vector_t::Constant(1, -1.0);
  t3.D = matrix_t::Zero(0, 2);
  t3.f = vector_t::Zero(0);
  t3.label = "base";
  WbcSolver solver;
  const double limb_h = solver.solveHierarchical({t1, t2, t3}).level_residuals[1];
  WbcSolver solver2;
  const double limb_f = solver2.solveFlat({t1, t2, t3}).level_residuals[1];
  EXPECT_LT(limb_h, 1e-6);
  EXPECT_GT(limb_f, limb_h + 1e-3);

  // very large limb weight approaches the hierarchical result
  WbcSolver solver3;
  FlatWeights heavy;
  heavy.limb = 1e8;
  const double limb_f_heavy = solver3.solveFlat({t1, t2, t3}, heavy).level_residuals[1];
  EXPECT_LT(limb_f_heavy, 1e-4);
}
