// Sparse quasi-definite KKT backend for oracle-scale problems. Eigen's
// SimplicialLDLT does no dynamic pivoting (AMD fill ordering only), so
// factorizations are deterministic for a fixed pattern.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "qp_internal.hpp"

namespace proxgrid::qp::internal {

struct SparseKkt::Impl {
  int n = 0, mi = 0, me = 0;
  double delta_c = 0.0;
  std::vector<Eigen::Triplet<double>> base;  // all fixed entries
  Eigen::SparseMatrix<double> kkt;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
};

SparseKkt::SparseKkt(const QpProblem& prob, const Canonical& canon, double delta_x, double delta_c,
                     double delta_e)
    : impl_(std::make_unique<Impl>()) {
  auto& im = *impl_;
  im.n = prob.n;
  im.mi = canon.mi();
  im.me = canon.me();
  im.delta_c = delta_c;
  const int dim = im.n + im.mi + im.me;
  im.kkt.resize(dim, dim);

  auto& t = im.base;
  for (int r = 0; r < prob.n; ++r)
    for (const auto& [c, v] : prob.Q.row(r)) t.emplace_back(r, c, v);
  for (int i = 0; i < prob.n; ++i) t.emplace_back(i, i, delta_x);
  for (int i = 0; i < im.mi; ++i) {
    const auto& side = canon.sides[i];
    for (const auto& [c, v] : prob.A.row(side.row)) {
      t.emplace_back(im.n + i, c, side.sign * v);
      t.emplace_back(c, im.n + i, side.sign * v);
    }
  }
  for (int e = 0; e < im.me; ++e) {
    for (const auto& [c, v] : prob.A.row(canon.eq_rows[e])) {
      t.emplace_back(im.n + im.mi + e, c, v);
      t.emplace_back(c, im.n + im.mi + e, v);
    }
    t.emplace_back(im.n + im.mi + e, im.n + im.mi + e, -delta_e);
  }
}

SparseKkt::~SparseKkt() = default;

bool SparseKkt::factorize(const std::vector<double>& w) {
  auto& im = *impl_;
  std::vector<Eigen::Triplet<double>> t = im.base;
  t.reserve(t.size() + im.mi);
  for (int i = 0; i < im.mi; ++i) {
    const double wi = std::max(w[i], 1e-14);
    t.emplace_back(im.n + i, im.n + i, -1.0 / wi - im.delta_c);
  }
  im.kkt.setFromTriplets(t.begin(), t.end());
  if (!im.analyzed) {
    im.ldlt.analyzePattern(im.kkt);
    im.analyzed = true;
  }
  im.ldlt.factorize(im.kkt);
  return im.ldlt.info() == Eigen::Success;
}

void SparseKkt::solve(const std::vector<double>& r1, const std::vector<double>& r2,
                      const std::vector<double>& r3, std::vector<double>& dx,
                      std::vector<double>& dz, std::vector<double>& dy) const {
  const auto& im = *impl_;
  Eigen::VectorXd rhs(im.n + im.mi + im.me);
  for (int i = 0; i < im.n; ++i) rhs[i] = r1[i];
  for (int i = 0; i < im.mi; ++i) rhs[im.n + i] = r2[i];
  for (int e = 0; e < im.me; ++e) rhs[im.n + im.mi + e] = r3[e];
  Eigen::VectorXd sol = im.ldlt.solve(rhs);
  // one refinement round against the same matrix
  Eigen::VectorXd resid = rhs - im.kkt * sol;
  sol += im.ldlt.solve(resid);
  dx.resize(im.n);
  dz.resize(im.mi);
  dy.resize(im.me);
  for (int i = 0; i < im.n; ++i) dx[i] = sol[i];
  for (int i = 0; i < im.mi; ++i) dz[i] = sol[im.n + i];
  for (int e = 0; e < im.me; ++e) dy[e] = sol[im.n + im.mi + e];
}

bool sparse_psd_check(const QpProblem& prob) {
  Eigen::SparseMatrix<double> q(prob.n, prob.n);
  std::vector<Eigen::Triplet<double>> t;
  double maxdiag = 1.0;
  for (int r = 0; r < prob.n; ++r)
    for (const auto& [c, v] : prob.Q.row(r)) {
      t.emplace_back(r, c, v);
      if (r == c) maxdiag = std::max(maxdiag, std::abs(v));
    }
  for (int i = 0; i < prob.n; ++i) t.emplace_back(i, i, 1e-10 * maxdiag);
  q.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(q);
  if (ldlt.info() != Eigen::Success) return false;
  return ldlt.vectorD().minCoeff() >= -1e-7 * maxdiag;
}

}  // namespace proxgrid::qp::internal
