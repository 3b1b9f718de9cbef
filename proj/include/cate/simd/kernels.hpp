#pragma once

// Data-parallel inner loops used by tree fitting, boosting and the
// residual-on-residual estimators. Each kernel has a scalar reference
// implementation; vector variants are selected once at runtime from the
// host CPU features. Elementwise kernels are bitwise identical across
// variants; reductions agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace cate::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  // out[k] = sl[k]^2 / wl[k] + (s_tot - sl[k])^2 / (w_tot - wl[k])
  void (*regression_split_scores)(const double* wl, const double* sl, double w_tot,
                                  double s_tot, double* out, std::size_t n);
  // out[k] = cl[k] * cr * (vl[k]/ul[k] - vr/ur)^2, with right-hand sums
  // obtained from the totals.
  void (*causal_split_scores)(const double* cl, const double* ul, const double* vl,
                              double c_tot, double u_tot, double v_tot, double* out,
                              std::size_t n);
  // y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_k (a[k] - b[k])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Table chosen for this process. CATE_SIMD=scalar forces the reference path.
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline void regression_split_scores(std::span<const double> wl, std::span<const double> sl,
                                    double w_tot, double s_tot, std::span<double> out) {
  active().regression_split_scores(wl.data(), sl.data(), w_tot, s_tot, out.data(), out.size());
}
inline void causal_split_scores(std::span<const double> cl, std::span<const double> ul,
                                std::span<const double> vl, double c_tot, double u_tot,
                                double v_tot, std::span<double> out) {
  active().causal_split_scores(cl.data(), ul.data(), vl.data(), c_tot, u_tot, v_tot, out.data(),
                               out.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace cate::simd
