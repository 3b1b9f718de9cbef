#include <arm_neon.h>

#include "cate/simd/kernels.hpp"

namespace cate::simd {
namespace {

void regression_split_scores(const double* wl, const double* sl, double w_tot, double s_tot,
                             double* out, std::size_t n) {
  const float64x2_t wt = vdupq_n_f64(w_tot);
  const float64x2_t st = vdupq_n_f64(s_tot);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t w = vld1q_f64(wl + k);
    float64x2_t s = vld1q_f64(sl + k);
    float64x2_t sr = vsubq_f64(st, s);
    float64x2_t wr = vsubq_f64(wt, w);
    float64x2_t left = vdivq_f64(vmulq_f64(s, s), w);
    float64x2_t right = vdivq_f64(vmulq_f64(sr, sr), wr);
    vst1q_f64(out + k, vaddq_f64(left, right));
  }
  for (; k < n; ++k) {
    double sr = s_tot - sl[k];
    double wr = w_tot - wl[k];
    out[k] = (sl[k] * sl[k]) / wl[k] + (sr * sr) / wr;
  }
}

void causal_split_scores(const double* cl, const double* ul, const double* vl, double c_tot,
                         double u_tot, double v_tot, double* out, std::size_t n) {
  const float64x2_t ct = vdupq_n_f64(c_tot);
  const float64x2_t ut = vdupq_n_f64(u_tot);
  const float64x2_t vt = vdupq_n_f64(v_tot);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t c = vld1q_f64(cl + k);
    float64x2_t u = vld1q_f64(ul + k);
    float64x2_t v = vld1q_f64(vl + k);
    float64x2_t diff = vsubq_f64(vdivq_f64(v, u), vdivq_f64(vsubq_f64(vt, v), vsubq_f64(ut, u)));
    float64x2_t res = vmulq_f64(vmulq_f64(c, vsubq_f64(ct, c)), vmulq_f64(diff, diff));
    vst1q_f64(out + k, res);
  }
  for (; k < n; ++k) {
    double cr = c_tot - cl[k];
    double ur = u_tot - ul[k];
    double vr = v_tot - vl[k];
    double diff = vl[k] / ul[k] - vr / ur;
    out[k] = (cl[k] * cr) * (diff * diff);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    vst1q_f64(y + k, vaddq_f64(vld1q_f64(y + k), vmulq_f64(a, vld1q_f64(x + k))));
  }
  for (; k < n; ++k) y[k] = y[k] + alpha * x[k];
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
  }
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; k < n; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{Isa::Neon, regression_split_scores, causal_split_scores,
                                 axpy,      dot,                     squared_distance};
  return &table;
}

}  // namespace cate::simd
