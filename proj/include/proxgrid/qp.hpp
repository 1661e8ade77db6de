#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace proxgrid::qp {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Row-sparse matrix: per row, parallel (col, value) lists. Small problems may
/// as well be dense, but device constraint rows carry at most a handful of
/// entries and the monolithic oracle problems are genuinely sparse.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(int rows, int cols) : rows_(rows), cols_(cols), entries_(rows) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void add(int r, int c, double v) { entries_[r].emplace_back(c, v); }
  const std::vector<std::pair<int, double>>& row(int r) const { return entries_[r]; }
  // Value updates only; the sparsity pattern must stay fixed once a solver
  // holds the matrix.
  std::vector<std::pair<int, double>>& mutable_row(int r) { return entries_[r]; }

  std::vector<double> multiply(const std::vector<double>& x) const;
  // y += alpha * row(r)' applied at scalar: y[c] += alpha * v for (c, v) in row r
  void add_scaled_row(int r, double alpha, std::vector<double>& y) const;
  double row_dot(int r, const std::vector<double>& x) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::vector<std::pair<int, double>>> entries_;
};

/// minimize 0.5 x'Qx + q'x  subject to  lo <= Ax <= hi.
/// Q is symmetric PSD (store both triangles). Rows with lo == hi are
/// equalities; bounds may be +-inf to drop a side. Variable bounds are
/// ordinary identity rows of A.
struct QpProblem {
  int n = 0;
  RowMatrix Q;
  std::vector<double> q;
  RowMatrix A;
  std::vector<double> lo, hi;

  static QpProblem make(int n, int m) {
    QpProblem p;
    p.n = n;
    p.Q = RowMatrix(n, n);
    p.q.assign(n, 0.0);
    p.A = RowMatrix(m, n);
    p.lo.assign(m, -kInf);
    p.hi.assign(m, kInf);
    return p;
  }
};

enum class QpStatus { kOptimal, kMaxIter, kInfeasible, kNonPsd };

struct QpResult {
  std::vector<double> x;
  // max over stationarity / primal feasibility / complementarity, inf-norm
  double kkt_residual = kInf;
  int iterations = 0;
  QpStatus status = QpStatus::kMaxIter;
  // Per constraint row: multiplier lambda_i with sign convention
  // 0 = Qx + q + sum_i lambda_i a_i. Equality rows carry their free dual.
  std::vector<double> row_duals;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 100;
  bool validate_psd = true;
  // When unset the solver picks dense vs sparse KKT by problem size.
  std::optional<bool> use_sparse_kkt;
};

/// Persistent solver: factorization pattern, workspaces, and the previous
/// solution (used to warm start) survive across solves. The engine re-solves
/// each device problem every iteration with a slowly varying linear term.
class QpSolver {
 public:
  QpSolver(QpProblem prob, QpOptions opts = {});
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;

  std::vector<double>& mutable_q();
  std::vector<double>& mutable_lo();
  std::vector<double>& mutable_hi();
  // Numeric updates of Q (dense KKT path only; the sparse backend freezes Q
  // values at construction).
  RowMatrix& mutable_Q();

  QpResult solve();
  QpResult solve(const std::vector<double>& warm_x);

  const QpProblem& problem() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot solve per the module contract.
QpResult solve_qp(const QpProblem& prob, double tol = 1e-8);

/// argmin ||x - v||^2 s.t. lo <= x <= hi elementwise and sum x >= threshold.
/// Solved by bisection on the shift nu >= 0 with x(nu) = clip(v + nu, lo, hi);
/// the halfspace is tight exactly when the plain clip violates it.
/// Throws std::invalid_argument when the bounds are infeasible.
std::vector<double> project_box_halfspace(const std::vector<double>& v, const std::vector<double>& lo,
                                          const std::vector<double>& hi, double threshold);

/// Relaxed transmission-line feasible region in per-period (p1, p2) space:
///   |p1 - p2| <= 2 * half_cap,   p1 + p2 >= arc(flow)
/// where flow f = (p1 - p2) / 2 and, for lossy lines,
///   arc(f) = 2 g (1 - sqrt(1 - (f/b)^2)).
/// Lossless lines degenerate to the segment p1 + p2 = 0.
struct LineHull {
  double half_cap = kInf;  // C_max / 2
  bool lossless = true;
  double g = 0.0, b = 0.0;  // arc parameters, b > half_cap required

  double arc(double f) const;
  double arc_deriv(double f) const;
};

struct Point2 {
  double p1, p2;
};

/// Euclidean projection of (v1, v2) onto the hull. Boundary contact solves a
/// one-dimensional multiplier equation by safeguarded Newton to 1e-10.
Point2 project_convex_region_2d(double v1, double v2, const LineHull& hull);

}  // namespace proxgrid::qp
