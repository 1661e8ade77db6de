#include "proxgrid/kernels.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace proxgrid::kernels {

namespace scalar {

void add(double* dst, const double* a, const double* b, int n) {
  for (int i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub3(double* dst, const double* a, const double* b, const double* c, int n) {
  for (int i = 0; i < n; ++i) dst[i] = a[i] - b[i] - c[i];
}

void acc(double* acc, const double* x, int n) {
  for (int i = 0; i < n; ++i) acc[i] += x[i];
}

void scaled_copy(double* dst, const double* x, double s, int n) {
  for (int i = 0; i < n; ++i) dst[i] = s * x[i];
}

void scale(double* x, double s, int n) {
  for (int i = 0; i < n; ++i) x[i] *= s;
}

double sumsq(const double* x, int n) {
  double r = 0.0;
  for (int i = 0; i < n; ++i) r += x[i] * x[i];
  return r;
}

double diff_update_sumsq(double* prev, const double* p, const double* pbar, int n) {
  double r = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = p[i] - pbar[i];
    double e = d - prev[i];
    r += e * e;
    prev[i] = d;
  }
  return r;
}

void clamp(double* dst, const double* x, double lo, double hi, int n) {
  for (int i = 0; i < n; ++i) dst[i] = std::min(std::max(x[i], lo), hi);
}

void curtail_prox(double* dst, const double* v, const double* l, double shift, int n) {
  for (int i = 0; i < n; ++i) dst[i] = std::max(v[i], std::min(v[i] + shift, l[i]));
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
  for (int i = 0; i < n; ++i) {
    double f = gain * (v1[i] - v2[i]);
    f = std::min(std::max(f, -half_cap), half_cap);
    p1[i] = f;
    p2[i] = 0.0 - f;
  }
}

}  // namespace scalar

namespace {

constexpr KernelTable kScalarTable = {
    scalar::add,          scalar::sub3,      scalar::acc,           scalar::scaled_copy,
    scalar::scale,        scalar::sumsq,     scalar::diff_update_sumsq,
    scalar::clamp,        scalar::curtail_prox, scalar::tie_prox,   scalar::line_flow_prox,
};

}  // namespace

#if defined(PROXGRID_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
static bool cpu_has_avx2() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(PROXGRID_HAVE_NEON)
namespace neon {
extern const KernelTable kTable;
}
#endif

namespace {

Isa detect_best() {
#if defined(PROXGRID_HAVE_AVX2)
  if (cpu_has_avx2()) return Isa::kAvx2;
#endif
#if defined(PROXGRID_HAVE_NEON)
  return Isa::kNeon;
#endif
  return Isa::kScalar;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Isa> g_active_isa{Isa::kScalar};

void select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) throw std::runtime_error("kernel ISA unavailable: " + isa_name(isa));
  g_active.store(t, std::memory_order_relaxed);
  g_active_isa.store(isa, std::memory_order_relaxed);
}

void ensure_selected() {
  if (g_active.load(std::memory_order_relaxed) == nullptr) select(detect_best());
}

}  // namespace

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &kScalarTable;
    case Isa::kAvx2:
#if defined(PROXGRID_HAVE_AVX2)
      return cpu_has_avx2() ? &avx2::kTable : nullptr;
#else
      return nullptr;
#endif
    case Isa::kNeon:
#if defined(PROXGRID_HAVE_NEON)
      return &neon::kTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& table() {
  ensure_selected();
  return *g_active.load(std::memory_order_relaxed);
}

Isa active_isa() {
  ensure_selected();
  return g_active_isa.load(std::memory_order_relaxed);
}

std::string isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "?";
}

void force_isa(Isa isa) { select(isa); }

void reset_isa() { select(detect_best()); }

}  // namespace proxgrid::kernels
