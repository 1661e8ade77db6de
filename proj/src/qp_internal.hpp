#pragma once

// Shared internals between the dense/banded KKT path (qp.cpp) and the sparse
// Eigen-backed path (qp_sparse.cpp). Not installed.

#include <memory>
#include <vector>

#include "proxgrid/qp.hpp"

namespace proxgrid::qp::internal {

// Canonical split of lo <= Ax <= hi into equality rows (lo == hi) and
// one-sided inequalities sign * a_i'x <= bound.
struct Side {
  int row;
  double sign;  // +1 for the hi side, -1 for the lo side
};

struct Canonical {
  int n = 0;
  std::vector<int> eq_rows;
  std::vector<Side> sides;

  int me() const { return static_cast<int>(eq_rows.size()); }
  int mi() const { return static_cast<int>(sides.size()); }
};

Canonical canonicalize(const QpProblem& prob);

// Refreshes the right-hand sides from the problem's current lo/hi. bound_i for
// side i, rhs_e for equality row e.
void refresh_bounds(const QpProblem& prob, const Canonical& canon, std::vector<double>& side_bound,
                    std::vector<double>& eq_rhs);

// Sparse quasi-definite KKT backend (Eigen SimplicialLDLT, AMD ordering, no
// dynamic pivoting). Pattern analyzed once; numeric refactor per IPM step.
class SparseKkt {
 public:
  SparseKkt(const QpProblem& prob, const Canonical& canon, double delta_x, double delta_c,
            double delta_e);
  ~SparseKkt();

  bool factorize(const std::vector<double>& w);
  // Solves [Q+dI G' E'; G -1/w-dc 0; E 0 -de] [dx; dz; dy] = [r1; r2; r3].
  void solve(const std::vector<double>& r1, const std::vector<double>& r2,
             const std::vector<double>& r3, std::vector<double>& dx, std::vector<double>& dz,
             std::vector<double>& dy) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Minimum eigenvalue-ish PSD probe of Q via sparse LDL with a small shift.
bool sparse_psd_check(const QpProblem& prob);

}  // namespace proxgrid::qp::internal
