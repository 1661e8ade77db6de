// AVX2/FMA variants of the inner-loop kernels. Compiled with -mavx2 -mfma;
// only reached when dispatch confirmed CPU support.

#include <immintrin.h>

#include <cmath>

#include "proxgrid/kernels.hpp"

namespace proxgrid::kernels::avx2 {

namespace {

inline __m256d abs_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign_mask, x);
}

void add(double* dst, const double* a, const double* b, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub3(double* dst, const double* a, const double* b, const double* c, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(t, _mm256_loadu_pd(c + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i] - c[i];
}

void acc(double* acc, const double* x, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void scaled_copy(double* dst, const double* x, double s, int n) {
  const __m256d vs = _mm256_set1_pd(s);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) dst[i] = s * x[i];
}

void scale(double* x, double s, int n) {
  const __m256d vs = _mm256_set1_pd(s);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= s;
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

double sumsq(const double* x, int n) {
  __m256d s = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    s = _mm256_fmadd_pd(v, v, s);
  }
  double r = hsum(s);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

double diff_update_sumsq(double* prev, const double* p, const double* pbar, int n) {
  __m256d s = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(pbar + i));
    __m256d e = _mm256_sub_pd(d, _mm256_loadu_pd(prev + i));
    s = _mm256_fmadd_pd(e, e, s);
    _mm256_storeu_pd(prev + i, d);
  }
  double r = hsum(s);
  for (; i < n; ++i) {
    double d = p[i] - pbar[i];
    double e = d - prev[i];
    r += e * e;
    prev[i] = d;
  }
  return r;
}

void clamp(double* dst, const double* x, double lo, double hi, int n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(dst + i, _mm256_min_pd(_mm256_max_pd(v, vlo), vhi));
  }
  for (; i < n; ++i) dst[i] = std::min(std::max(x[i], lo), hi);
}

void curtail_prox(double* dst, const double* v, const double* l, double shift, int n) {
  const __m256d vshift = _mm256_set1_pd(shift);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vv = _mm256_loadu_pd(v + i);
    __m256d vl = _mm256_loadu_pd(l + i);
    __m256d t = _mm256_min_pd(_mm256_add_pd(vv, vshift), vl);
    _mm256_storeu_pd(dst + i, _mm256_max_pd(vv, t));
  }
  for (; i < n; ++i) dst[i] = std::max(v[i], std::min(v[i] + shift, l[i]));
}

void tie_prox(double* dst, const double* v, const double* c, const double* gamma,
              const double* emax, double inv_rho, int n) {
  const __m256d vinv = _mm256_set1_pd(inv_rho);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d z = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), vinv, _mm256_loadu_pd(v + i));
    __m256d thr = _mm256_mul_pd(_mm256_loadu_pd(gamma + i), vinv);
    __m256d mag = _mm256_max_pd(_mm256_sub_pd(abs_pd(z), thr), zero);
    __m256d y = _mm256_or_pd(mag, _mm256_and_pd(z, sign_mask));
    __m256d ve = _mm256_loadu_pd(emax + i);
    __m256d nve = _mm256_sub_pd(zero, ve);
    _mm256_storeu_pd(dst + i, _mm256_min_pd(_mm256_max_pd(y, nve), ve));
  }
  for (; i < n; ++i) {
    double z = v[i] + c[i] * inv_rho;
    double mag = std::max(std::abs(z) - gamma[i] * inv_rho, 0.0);
    double y = std::copysign(mag, z);
    dst[i] = std::min(std::max(y, -emax[i]), emax[i]);
  }
}

void line_flow_prox(double* p1, double* p2, const double* v1, const double* v2,
                    double gain, double half_cap, int n) {
  const __m256d vg = _mm256_set1_pd(gain);
  const __m256d vc = _mm256_set1_pd(half_cap);
  const __m256d vnc = _mm256_set1_pd(-half_cap);
  const __m256d zero = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d f = _mm256_mul_pd(vg, _mm256_sub_pd(_mm256_loadu_pd(v1 + i), _mm256_loadu_pd(v2 + i)));
    f = _mm256_min_pd(_mm256_max_pd(f, vnc), vc);
    _mm256_storeu_pd(p1 + i, f);
    _mm256_storeu_pd(p2 + i, _mm256_sub_pd(zero, f));
  }
  for (; i < n; ++i) {
    double f = gain * (v1[i] - v2[i]);
    f = std::min(std::max(f, -half_cap), half_cap);
    p1[i] = f;
    p2[i] = 0.0 - f;
  }
}

}  // namespace

extern const KernelTable kTable = {
    add,   sub3,  acc,   scaled_copy, scale, sumsq, diff_update_sumsq,
    clamp, curtail_prox, tie_prox, line_flow_prox,
};

}  // namespace proxgrid::kernels::avx2
