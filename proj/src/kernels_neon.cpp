// AArch64 NEON variants of the inner-loop kernels (2-lane double vectors).

#include <arm_neon.h>

#include <cmath>

#include "proxgrid/kernels.hpp"

namespace proxgrid::kernels::neon {

namespace {

void add(double* dst, const double* a, const double* b, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(dst + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub3(double* dst, const double* a, const double* b, const double* c, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(dst + i, vsubq_f64(t, vld1q_f64(c + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i] - c[i];
}

void acc(double* acc, const double* x, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void scaled_copy(double* dst, const double* x, double s, int n) {
  const float64x2_t vs = vdupq_n_f64(s);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(dst + i, vmulq_f64(vs, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) dst[i] = s * x[i];
}

void scale(double* x, double s, int n) {
  const float64x2_t vs = vdupq_n_f64(s);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(vs, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= s;
}

double sumsq(const double* x, int n) {
  float64x2_t s = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    s = vfmaq_f64(s, v, v);
  }
  double r = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

double diff_update_sumsq(double* prev, const double* p, const double* pbar, int n) {
  float64x2_t s = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(p + i), vld1q_f64(pbar + i));
    float64x2_t e = vsubq_f64(d, vld1q_f64(prev + i));
    s = vfmaq_f64(s, e, e);
    vst1q_f64(prev + i, d);
  }
  double r = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
  for (; i < n; ++i) {
    double d = p[i] - pbar[i];
    double e = d - prev[i];
    r += e * e;
    prev[i] = d;
  }
  return r;
}

void clamp(double* dst, const double* x, double lo, double hi, int n) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(dst + i, vminq_f64(vmaxq_f64(vld1q_f64(x + i), vlo), vhi));
  }
  for (; i < n; ++i) dst[i] = std::min(std::max(x[i], lo), hi);
}

void curtail_prox(double* dst, const double* v, const double* l, double shift, int n) {
  const float64x2_t vshift = vdupq_n_f64(shift);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vv = vld1q_f64(v + i);
    float64x2_t t = vminq_f64(vaddq_f64(vv, vshift), vld1q_f64(l + i));
    vst1q_f64(dst + i, vmaxq_f64(vv, t));
  }
  for (; i < n; ++i) dst[i] = std::max(v[i], std::min(v[i] + shift, l[i]));
}

void tie_prox(double* dst, const double* v, const double* c, const double* gamma,
              const double* emax, double inv_rho, int n) {
  for (int i = 0; i < n; ++i) {
    double z = v[i] + c[i] * inv_rho;
    double mag = std::max(std::abs(z) - gamma[i] * inv_rho, 0.0);
    double y = std::copysign(mag, z);
    dst[i] = std::min(std::max(y, -emax[i]), emax[i]);
  }
}

void line_flow_prox(double* p1, double* p2, const double* v1, const double* v2,
                    double gain, double half_cap, int n) {
  const float64x2_t vg = vdupq_n_f64(gain);
  const float64x2_t vc = vdupq_n_f64(half_cap);
  const float64x2_t vnc = vdupq_n_f64(-half_cap);
  const float64x2_t zero = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t f = vmulq_f64(vg, vsubq_f64(vld1q_f64(v1 + i), vld1q_f64(v2 + i)));
    f = vminq_f64(vmaxq_f64(f, vnc), vc);
    vst1q_f64(p1 + i, f);
    vst1q_f64(p2 + i, vsubq_f64(zero, f));
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

}  // namespace proxgrid::kernels::neon
