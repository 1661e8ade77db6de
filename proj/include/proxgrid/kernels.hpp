#pragma once

#include <string>

namespace proxgrid::kernels {

// Data-parallel inner loops of the solver: net averaging, dual updates,
// residual norms, and the separable per-period prox maps. Every operation has
// a scalar reference implementation plus SIMD variants selected at runtime;
// the variants are equivalence-tested against the reference.
//
// All kernels are pure element/reduction loops over contiguous double arrays
// and are safe to call concurrently on disjoint outputs.

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  // dst[i] = a[i] + b[i]
  void (*add)(double* dst, const double* a, const double* b, int n);
  // dst[i] = a[i] - b[i] - c[i]
  void (*sub3)(double* dst, const double* a, const double* b, const double* c, int n);
  // acc[i] += x[i]
  void (*acc)(double* acc, const double* x, int n);
  // dst[i] = s * x[i]
  void (*scaled_copy)(double* dst, const double* x, double s, int n);
  // x[i] *= s
  void (*scale)(double* x, double s, int n);
  // sum x[i]^2
  double (*sumsq)(const double* x, int n);
  // d = p[i] - pbar[i]; result += (d - prev[i])^2; prev[i] = d
  double (*diff_update_sumsq)(double* prev, const double* p, const double* pbar, int n);
  // dst[i] = clamp(x[i], lo, hi)
  void (*clamp)(double* dst, const double* x, double lo, double hi, int n);
  // Curtailable-load prox, per period: dst[i] = max(v[i], min(v[i] + shift, l[i]))
  void (*curtail_prox)(double* dst, const double* v, const double* l, double shift, int n);
  // External-tie prox, per period:
  //   z = v[i] + c[i] * inv_rho
  //   dst[i] = clamp(sign(z) * max(|z| - gamma[i] * inv_rho, 0), -emax[i], emax[i])
  void (*tie_prox)(double* dst, const double* v, const double* c, const double* gamma,
                   const double* emax, double inv_rho, int n);
  // Lossless line prox, per period: f = clamp(gain * (v1[i] - v2[i]), -half_cap, half_cap);
  // p1[i] = f, p2[i] = -f. gain = rho / (4 eps + 2 rho); half_cap may be +inf.
  void (*line_flow_prox)(double* p1, double* p2, const double* v1, const double* v2,
                         double gain, double half_cap, int n);
};

// Table for the best ISA the CPU supports (cached after first probe).
const KernelTable& table();

// Specific variant, for equivalence tests. Returns nullptr when the binary
// was built without that variant or the CPU cannot run it.
const KernelTable* table_for(Isa isa);

Isa active_isa();
std::string isa_name(Isa isa);

// Test hook: override the active table. Pass kScalar to force the reference
// path; throws if the requested ISA is unavailable.
void force_isa(Isa isa);
void reset_isa();

}  // namespace proxgrid::kernels
