#include "proxgrid/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "qp_internal.hpp"

namespace proxgrid::qp {

std::vector<double> RowMatrix::multiply(const std::vector<double>& x) const {
  std::vector<double> y(rows_, 0.0);
  for (int r = 0; r < rows_; ++r) y[r] = row_dot(r, x);
  return y;
}

void RowMatrix::add_scaled_row(int r, double alpha, std::vector<double>& y) const {
  for (const auto& [c, v] : entries_[r]) y[c] += alpha * v;
}

double RowMatrix::row_dot(int r, const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& [c, v] : entries_[r]) s += v * x[c];
  return s;
}

namespace internal {

Canonical canonicalize(const QpProblem& prob) {
  Canonical canon;
  canon.n = prob.n;
  const int m = prob.A.rows();
  for (int r = 0; r < m; ++r) {
    const double lo = prob.lo[r], hi = prob.hi[r];
    if (lo > hi) throw std::invalid_argument("QpProblem: lo > hi in row " + std::to_string(r));
    if (std::isfinite(lo) && lo == hi) {
      canon.eq_rows.push_back(r);
      continue;
    }
    if (std::isfinite(hi)) canon.sides.push_back({r, +1.0});
    if (std::isfinite(lo)) canon.sides.push_back({r, -1.0});
  }
  return canon;
}

void refresh_bounds(const QpProblem& prob, const Canonical& canon, std::vector<double>& side_bound,
                    std::vector<double>& eq_rhs) {
  side_bound.resize(canon.mi());
  eq_rhs.resize(canon.me());
  for (int i = 0; i < canon.mi(); ++i) {
    const auto& s = canon.sides[i];
    side_bound[i] = s.sign > 0 ? prob.hi[s.row] : -prob.lo[s.row];
  }
  for (int e = 0; e < canon.me(); ++e) eq_rhs[e] = prob.lo[canon.eq_rows[e]];
}

}  // namespace internal

using internal::Canonical;

namespace {

constexpr double kDeltaX = 1e-9;    // primal block regularization
constexpr double kDeltaC = 1e-11;   // inequality block (on top of s/z)
constexpr double kDeltaE = 1e-9;    // equality block
constexpr double kWeightCap = 1e14;

// Dense symmetric no-pivot LDL^T with optional band limit. Quasi-definite
// inputs (regularized KKT systems) factor stably without pivoting, which keeps
// results independent of data-driven permutations.
class DenseLdl {
 public:
  void resize(int dim) {
    dim_ = dim;
    mat_.assign(static_cast<size_t>(dim) * dim, 0.0);
    raw_.assign(static_cast<size_t>(dim) * dim, 0.0);
    d_.assign(dim, 0.0);
    tmp_.assign(dim, 0.0);
  }

  int dim() const { return dim_; }
  double* raw_row(int i) { return raw_.data() + static_cast<size_t>(i) * dim_; }

  // Band-aware: only the populated band is touched on narrow problems.
  void clear_raw(int bandwidth) {
    const int bw = std::min(bandwidth, dim_ - 1);
    for (int i = 0; i < dim_; ++i) {
      double* row = raw_row(i);
      const int c0 = std::max(0, i - bw), c1 = std::min(dim_, i + bw + 1);
      std::fill(row + c0, row + c1, 0.0);
    }
  }

  // reg[i] added to the diagonal before factoring; raw_ keeps the
  // unregularized matrix for iterative refinement.
  bool factorize(const std::vector<double>& reg, int bandwidth) {
    bw_ = std::min(bandwidth, dim_ - 1);
    for (int i = 0; i < dim_; ++i) {
      const int c0 = std::max(0, i - bw_), c1 = std::min(dim_, i + bw_ + 1);
      const size_t off = static_cast<size_t>(i) * dim_;
      std::memcpy(mat_.data() + off + c0, raw_.data() + off + c0, (c1 - c0) * sizeof(double));
    }
    for (int i = 0; i < dim_; ++i) mat_[static_cast<size_t>(i) * dim_ + i] += reg[i];
    for (int j = 0; j < dim_; ++j) {
      double* rowj = mat_.data() + static_cast<size_t>(j) * dim_;
      const int k0 = std::max(0, j - bw_);
      double dj = rowj[j];
      for (int k = k0; k < j; ++k) dj -= rowj[k] * rowj[k] * d_[k];
      if (dj == 0.0 || !std::isfinite(dj)) return false;
      d_[j] = dj;
      const int imax = std::min(dim_, j + bw_ + 1);
      for (int i = j + 1; i < imax; ++i) {
        double* rowi = mat_.data() + static_cast<size_t>(i) * dim_;
        double s = rowi[j];
        const int kk0 = std::max(k0, i - bw_);
        for (int k = kk0; k < j; ++k) s -= rowi[k] * rowj[k] * d_[k];
        rowi[j] = s / dj;
      }
    }
    return true;
  }

  const std::vector<double>& pivots() const { return d_; }

  void solve_in_place(std::vector<double>& x) const {
    for (int i = 0; i < dim_; ++i) {
      const double* rowi = mat_.data() + static_cast<size_t>(i) * dim_;
      double s = x[i];
      const int k0 = std::max(0, i - bw_);
      for (int k = k0; k < i; ++k) s -= rowi[k] * x[k];
      x[i] = s;
    }
    for (int i = 0; i < dim_; ++i) x[i] /= d_[i];
    for (int j = dim_ - 1; j >= 0; --j) {
      double s = x[j];
      const int imax = std::min(dim_, j + bw_ + 1);
      for (int i = j + 1; i < imax; ++i) s -= mat_[static_cast<size_t>(i) * dim_ + j] * x[i];
      x[j] = s;
    }
  }

  // One step of refinement against the unregularized matrix.
  void refine(const std::vector<double>& rhs, std::vector<double>& x) {
    // tmp = rhs - raw * x (band-aware, symmetric raw)
    for (int i = 0; i < dim_; ++i) {
      const double* rowi = raw_.data() + static_cast<size_t>(i) * dim_;
      double s = rhs[i];
      const int k0 = std::max(0, i - bw_);
      const int k1 = std::min(dim_, i + bw_ + 1);
      for (int k = k0; k < k1; ++k) s -= rowi[k] * x[k];
      tmp_[i] = s;
    }
    solve_in_place(tmp_);
    for (int i = 0; i < dim_; ++i) x[i] += tmp_[i];
  }

 private:
  int dim_ = 0;
  int bw_ = 0;
  std::vector<double> mat_;  // factored L (strict lower) over the input copy
  std::vector<double> raw_;  // assembled KKT without regularization
  std::vector<double> d_;
  std::vector<double> tmp_;
};

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

struct QpSolver::Impl {
  QpProblem prob;
  QpOptions opts;
  Canonical canon;
  bool sparse_mode = false;

  // dense path
  DenseLdl kkt;
  int bandwidth = 0;
  std::vector<double> reg;

  std::unique_ptr<internal::SparseKkt> sparse;

  // per-solve state
  std::vector<double> side_bound, eq_rhs;
  std::vector<double> x, y, s, z;
  std::vector<double> rd, rp, re, w, rc;
  std::vector<double> dx, dy, dz, ds;
  std::vector<double> gdx;          // G * dx per side
  std::vector<double> rhs, sol;     // dense augmented system, n + me
  std::vector<double> r1, r2, r3;   // sparse block rhs
  std::vector<double> prev_x, prev_z;
  bool have_prev = false;
  bool psd_checked = false;
  bool psd_ok = true;

  explicit Impl(QpProblem p, QpOptions o) : prob(std::move(p)), opts(o) {
    canon = internal::canonicalize(prob);
    const int n = prob.n, me = canon.me(), mi = canon.mi();
    // Sparse KKT pays off once the dense factor gets big; device-scale
    // problems stay on the banded dense path.
    sparse_mode = opts.use_sparse_kkt.value_or(n + me > 500);
    if (sparse_mode) {
      sparse = std::make_unique<internal::SparseKkt>(prob, canon, kDeltaX, kDeltaC, kDeltaE);
    } else {
      bandwidth = compute_bandwidth();
      kkt.resize(n + me);
      reg.assign(n + me, 0.0);
      for (int i = 0; i < n; ++i) reg[i] = kDeltaX;
      for (int e = 0; e < me; ++e) reg[n + e] = -kDeltaE;
    }
    x.assign(n, 0.0);
    y.assign(me, 0.0);
    s.assign(mi, 1.0);
    z.assign(mi, 1.0);
    rd.resize(n);
    rp.resize(mi);
    re.resize(me);
    w.resize(mi);
    rc.resize(mi);
    dx.resize(n);
    dy.resize(me);
    dz.resize(mi);
    ds.resize(mi);
    gdx.resize(mi);
    rhs.resize(n + me);
    sol.resize(n + me);
    r1.resize(n);
    r2.resize(mi);
    r3.resize(me);
  }

  int compute_bandwidth() const {
    if (canon.me() > 0) return prob.n + canon.me();  // equality block is dense anyway
    int bw = 0;
    for (int r = 0; r < prob.n; ++r)
      for (const auto& [c, v] : prob.Q.row(r)) bw = std::max(bw, std::abs(c - r));
    for (const auto& side : canon.sides) {
      const auto& row = prob.A.row(side.row);
      if (row.empty()) continue;
      int cmin = row.front().first, cmax = row.front().first;
      for (const auto& [c, v] : row) {
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
      bw = std::max(bw, cmax - cmin);
    }
    return bw;
  }

  bool check_psd() {
    if (psd_checked) return psd_ok;
    psd_checked = true;
    if (sparse_mode) {
      psd_ok = internal::sparse_psd_check(prob);
      return psd_ok;
    }
    // Cholesky-style probe of Q with a 1e-10 diagonal shift; a negative pivot
    // beyond rounding noise marks an indefinite Q.
    DenseLdl probe;
    const int n = prob.n;
    probe.resize(n);
    probe.clear_raw(n);
    double maxdiag = 1.0;
    for (int r = 0; r < n; ++r) {
      double* row = probe.raw_row(r);
      for (const auto& [c, v] : prob.Q.row(r)) row[c] += v;
      maxdiag = std::max(maxdiag, std::abs(row[r]));
    }
    std::vector<double> shift(n, 1e-10 * maxdiag);
    psd_ok = probe.factorize(shift, n);
    if (psd_ok) {
      for (double d : probe.pivots()) {
        if (d < -1e-7 * maxdiag) {
          psd_ok = false;
          break;
        }
      }
    }
    return psd_ok;
  }

  void assemble_dense() {
    const int n = prob.n, me = canon.me();
    kkt.clear_raw(bandwidth);
    for (int r = 0; r < n; ++r) {
      double* row = kkt.raw_row(r);
      for (const auto& [c, v] : prob.Q.row(r)) row[c] += v;
    }
    for (int i = 0; i < canon.mi(); ++i) {
      const auto& arow = prob.A.row(canon.sides[i].row);
      const double wi = w[i];
      for (const auto& [c1, v1] : arow) {
        double* row = kkt.raw_row(c1);
        for (const auto& [c2, v2] : arow) row[c2] += wi * v1 * v2;
      }
    }
    for (int e = 0; e < me; ++e) {
      const auto& arow = prob.A.row(canon.eq_rows[e]);
      double* row = kkt.raw_row(n + e);
      for (const auto& [c, v] : arow) {
        row[c] = v;
        kkt.raw_row(c)[n + e] = v;
      }
    }
  }

  // Newton direction for the current rc; dense and sparse flavors.
  void newton_solve() {
    const int n = prob.n, me = canon.me(), mi = canon.mi();
    if (!sparse_mode) {
      for (int i = 0; i < n; ++i) rhs[i] = -rd[i];
      for (int e = 0; e < me; ++e) rhs[n + e] = 0.0;
      for (int i = 0; i < mi; ++i) {
        const double t = (z[i] * rp[i] - rc[i]) / s[i];
        prob.A.add_scaled_row(canon.sides[i].row, -canon.sides[i].sign * t, rhs);
      }
      for (int e = 0; e < me; ++e) rhs[n + e] = -re[e];
      sol = rhs;
      kkt.solve_in_place(sol);
      kkt.refine(rhs, sol);
      kkt.refine(rhs, sol);
      std::copy(sol.begin(), sol.begin() + n, dx.begin());
      for (int e = 0; e < me; ++e) dy[e] = sol[n + e];
      for (int i = 0; i < mi; ++i) {
        gdx[i] = canon.sides[i].sign * prob.A.row_dot(canon.sides[i].row, dx);
        dz[i] = w[i] * (gdx[i] + rp[i]) - rc[i] / s[i];
        ds[i] = -(rc[i] + s[i] * dz[i]) / z[i];
      }
      return;
    }
    for (int i = 0; i < n; ++i) r1[i] = -rd[i];
    for (int i = 0; i < mi; ++i) r2[i] = -rp[i] + rc[i] / z[i];
    for (int e = 0; e < me; ++e) r3[e] = -re[e];
    sparse->solve(r1, r2, r3, dx, dz, dy);
    for (int i = 0; i < mi; ++i) ds[i] = -(rc[i] + s[i] * dz[i]) / z[i];
  }

  QpResult run(const std::vector<double>* warm) {
    const int n = prob.n, me = canon.me(), mi = canon.mi();
    QpResult result;
    if (opts.validate_psd && !check_psd()) {
      result.status = QpStatus::kNonPsd;
      result.x.assign(n, 0.0);
      return result;
    }
    internal::refresh_bounds(prob, canon, side_bound, eq_rhs);

    if (warm != nullptr && static_cast<int>(warm->size()) == n) {
      x = *warm;
    } else if (have_prev) {
      x = prev_x;
    } else {
      std::fill(x.begin(), x.end(), 0.0);
    }
    std::fill(y.begin(), y.end(), 0.0);
    const bool warm_duals = have_prev && static_cast<int>(prev_z.size()) == mi;
    for (int i = 0; i < mi; ++i) {
      const double slack =
          side_bound[i] - canon.sides[i].sign * prob.A.row_dot(canon.sides[i].row, x);
      if (warm_duals) {
        s[i] = std::max(slack, 1e-3);
        z[i] = std::clamp(prev_z[i], 1e-3, 1e5);
      } else {
        s[i] = std::max(slack, 1.0);
        z[i] = 1.0;
      }
    }

    double scale = std::max(1.0, inf_norm(prob.q));
    for (double b : side_bound)
      if (std::isfinite(b)) scale = std::max(scale, std::abs(b));
    for (double b : eq_rhs) scale = std::max(scale, std::abs(b));
    const double tol = opts.tol * scale;

    double best_res = kInf;
    std::vector<double> best_x = x;

    for (int it = 1; it <= opts.max_iter; ++it) {
      // residuals
      for (int i = 0; i < n; ++i) rd[i] = prob.q[i] + prob.Q.row_dot(i, x);
      for (int i = 0; i < mi; ++i)
        prob.A.add_scaled_row(canon.sides[i].row, canon.sides[i].sign * z[i], rd);
      for (int e = 0; e < me; ++e) prob.A.add_scaled_row(canon.eq_rows[e], y[e], rd);
      for (int i = 0; i < mi; ++i)
        rp[i] = canon.sides[i].sign * prob.A.row_dot(canon.sides[i].row, x) + s[i] - side_bound[i];
      for (int e = 0; e < me; ++e) re[e] = prob.A.row_dot(canon.eq_rows[e], x) - eq_rhs[e];

      double comp = 0.0;
      for (int i = 0; i < mi; ++i) comp = std::max(comp, s[i] * z[i]);
      const double res = std::max({inf_norm(rd), inf_norm(rp), inf_norm(re), comp});
      if (res < best_res) {
        best_res = res;
        best_x = x;
      }
      result.iterations = it - 1;
      if (res <= tol) {
        result.status = QpStatus::kOptimal;
        break;
      }
      if (std::max(inf_norm(z), inf_norm(y)) > 1e10 || !std::isfinite(res)) {
        result.status = QpStatus::kInfeasible;
        break;
      }
      if (it == opts.max_iter) {
        result.status = QpStatus::kMaxIter;
        break;
      }

      for (int i = 0; i < mi; ++i) w[i] = std::min(z[i] / s[i], kWeightCap);
      if (!sparse_mode) {
        assemble_dense();
        if (!kkt.factorize(reg, bandwidth)) {
          result.status = QpStatus::kMaxIter;
          break;
        }
      } else if (!sparse->factorize(w)) {
        result.status = QpStatus::kMaxIter;
        break;
      }

      double mu = 0.0;
      for (int i = 0; i < mi; ++i) mu += s[i] * z[i];
      if (mi > 0) mu /= mi;

      double sigma_mu = 0.0;
      std::vector<double> dsa, dza;
      if (mi > 0) {
        // affine scaling step
        for (int i = 0; i < mi; ++i) rc[i] = s[i] * z[i];
        newton_solve();
        double ap = 1.0, ad = 1.0;
        for (int i = 0; i < mi; ++i) {
          if (ds[i] < 0) ap = std::min(ap, -s[i] / ds[i]);
          if (dz[i] < 0) ad = std::min(ad, -z[i] / dz[i]);
        }
        double mu_aff = 0.0;
        for (int i = 0; i < mi; ++i) mu_aff += (s[i] + ap * ds[i]) * (z[i] + ad * dz[i]);
        mu_aff /= mi;
        const double ratio = mu > 0 ? mu_aff / mu : 0.0;
        sigma_mu = ratio * ratio * ratio * mu;
        dsa = ds;
        dza = dz;
        for (int i = 0; i < mi; ++i) rc[i] = s[i] * z[i] + dsa[i] * dza[i] - sigma_mu;
      }
      newton_solve();

      double ap = 1.0, ad = 1.0;
      for (int i = 0; i < mi; ++i) {
        if (ds[i] < 0) ap = std::min(ap, -0.99 * s[i] / ds[i]);
        if (dz[i] < 0) ad = std::min(ad, -0.99 * z[i] / dz[i]);
      }
      ap = std::min(ap, 1.0);
      ad = std::min(ad, 1.0);
      if (mi == 0) ap = ad = 1.0;
      for (int i = 0; i < n; ++i) x[i] += ap * dx[i];
      for (int i = 0; i < mi; ++i) {
        s[i] += ap * ds[i];
        z[i] += ad * dz[i];
      }
      for (int e = 0; e < me; ++e) y[e] += ad * dy[e];
    }

    if (result.status != QpStatus::kOptimal) x = best_x;
    result.x = x;
    result.kkt_residual = best_res;
    if (result.status == QpStatus::kOptimal) {
      prev_x = x;
      prev_z = z;
      have_prev = true;
    }
    result.row_duals.assign(prob.A.rows(), 0.0);
    for (int i = 0; i < mi; ++i) result.row_duals[canon.sides[i].row] += canon.sides[i].sign * z[i];
    for (int e = 0; e < me; ++e) result.row_duals[canon.eq_rows[e]] += y[e];
    return result;
  }
};

QpSolver::QpSolver(QpProblem prob, QpOptions opts)
    : impl_(std::make_unique<Impl>(std::move(prob), opts)) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

std::vector<double>& QpSolver::mutable_q() { return impl_->prob.q; }
std::vector<double>& QpSolver::mutable_lo() { return impl_->prob.lo; }
std::vector<double>& QpSolver::mutable_hi() { return impl_->prob.hi; }
RowMatrix& QpSolver::mutable_Q() { return impl_->prob.Q; }
const QpProblem& QpSolver::problem() const { return impl_->prob; }

QpResult QpSolver::solve() { return impl_->run(nullptr); }
QpResult QpSolver::solve(const std::vector<double>& warm_x) { return impl_->run(&warm_x); }

QpResult solve_qp(const QpProblem& prob, double tol) {
  QpOptions opts;
  opts.tol = tol;
  QpSolver solver(prob, opts);
  return solver.solve();
}

std::vector<double> project_box_halfspace(const std::vector<double>& v, const std::vector<double>& lo,
                                          const std::vector<double>& hi, double threshold) {
  const size_t n = v.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("project_box_halfspace: size mismatch");
  double sum_hi = 0.0, scale = 1.0;
  for (size_t i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw std::invalid_argument("project_box_halfspace: lo > hi");
    sum_hi += hi[i];
    scale = std::max({scale, std::abs(lo[i]), std::abs(hi[i])});
  }
  if (sum_hi < threshold - 1e-9 * std::max(scale, std::abs(threshold)))
    throw std::invalid_argument("project_box_halfspace: box cannot reach threshold");

  auto clipped_sum = [&](double nu, std::vector<double>& out) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      out[i] = std::min(std::max(v[i] + nu, lo[i]), hi[i]);
      sum += out[i];
    }
    return sum;
  };

  std::vector<double> x(n);
  if (clipped_sum(0.0, x) >= threshold) return x;
  if (sum_hi <= threshold + 1e-12 * std::max(scale, std::abs(threshold))) return hi;

  // h(nu) = sum clip(v + nu) - threshold is nondecreasing; bracket then bisect.
  double nu_lo = 0.0, nu_hi = 1.0;
  while (clipped_sum(nu_hi, x) < threshold) {
    nu_lo = nu_hi;
    nu_hi *= 2.0;
    if (nu_hi > 1e18) throw std::runtime_error("project_box_halfspace: bracket failure");
  }
  for (int it = 0; it < 200 && (nu_hi - nu_lo) > 1e-15 * (1.0 + nu_hi); ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    if (clipped_sum(mid, x) < threshold)
      nu_lo = mid;
    else
      nu_hi = mid;
  }
  clipped_sum(nu_hi, x);
  return x;
}

double LineHull::arc(double f) const {
  if (lossless || g <= 0.0) return 0.0;
  const double t2 = std::min((f / b) * (f / b), 1.0);
  return 2.0 * g * (1.0 - std::sqrt(1.0 - t2));
}

double LineHull::arc_deriv(double f) const {
  if (lossless || g <= 0.0) return 0.0;
  const double t2 = std::min((f / b) * (f / b), 1.0 - 1e-14);
  return 2.0 * g * f / (b * b * std::sqrt(1.0 - t2));
}

Point2 project_convex_region_2d(double v1, double v2, const LineHull& hull) {
  const double fv = 0.5 * (v1 - v2);
  const double sv = v1 + v2;
  if (hull.lossless) {
    const double f = std::min(std::max(fv, -hull.half_cap), hull.half_cap);
    return {f, -f};
  }
  const double hc = std::min(hull.half_cap, hull.b * (1.0 - 1e-9));
  const double f0 = std::min(std::max(fv, -hc), hc);
  if (sv >= hull.arc(f0)) return {0.5 * sv + f0, 0.5 * sv - f0};

  // Arc active. In the transformed metric ||dp||^2 = 2 df^2 + ds^2/2 the
  // contact point solves G(f) = 4 (f - fv) + (arc(f) - sv) arc'(f) = 0 with
  // multiplier arc(f) - sv >= 0. The arc is even, so mirror fv onto the
  // nonnegative axis; there G is increasing on [f_lo, hc] and the root is
  // unique (f_lo is where the arc first clears sv).
  const double sgn = fv >= 0.0 ? 1.0 : -1.0;
  const double afv = std::abs(fv);
  double f_lo = 0.0;
  if (sv > 0.0) {
    const double u = 1.0 - sv / (2.0 * hull.g);
    f_lo = std::min(hull.b * std::sqrt(std::max(0.0, 1.0 - u * u)), hc);
  }
  auto eval_g = [&](double f) { return 4.0 * (f - afv) + (hull.arc(f) - sv) * hull.arc_deriv(f); };

  double f;
  if (eval_g(hc) <= 0.0) {
    f = hc;  // capacity corner
  } else if (eval_g(f_lo) >= 0.0) {
    f = f_lo;
  } else {
    double lo = f_lo, hi = hc;
    f = std::clamp(afv, lo, hi);
    for (int it = 0; it < 100; ++it) {
      const double arc = hull.arc(f), darc = hull.arc_deriv(f);
      const double g_val = 4.0 * (f - afv) + (arc - sv) * darc;
      if (std::abs(g_val) <= 1e-10 * (4.0 + darc * darc)) break;
      if (g_val > 0.0)
        hi = f;
      else
        lo = f;
      const double t2 = std::min((f / hull.b) * (f / hull.b), 1.0 - 1e-14);
      const double d2arc = 2.0 * hull.g / (hull.b * hull.b) / std::pow(1.0 - t2, 1.5);
      double next = f - g_val / (4.0 + darc * darc + (arc - sv) * d2arc);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-15 * (1.0 + hi)) {
        f = next;
        break;
      }
      f = next;
    }
  }
  f *= sgn;
  const double s = hull.arc(f);
  return {0.5 * s + f, 0.5 * s - f};
}

}  // namespace proxgrid::qp
