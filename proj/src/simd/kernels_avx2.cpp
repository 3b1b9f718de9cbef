#include <immintrin.h>

#include "cate/simd/kernels.hpp"

namespace cate::simd {
namespace {

// Compiled with -mavx2 only (no FMA) so every lane performs the same
// multiply/add/divide sequence as the scalar reference.

void regression_split_scores(const double* wl, const double* sl, double w_tot, double s_tot,
                             double* out, std::size_t n) {
  const __m256d wt = _mm256_set1_pd(w_tot);
  const __m256d st = _mm256_set1_pd(s_tot);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d w = _mm256_loadu_pd(wl + k);
    __m256d s = _mm256_loadu_pd(sl + k);
    __m256d sr = _mm256_sub_pd(st, s);
    __m256d wr = _mm256_sub_pd(wt, w);
    __m256d left = _mm256_div_pd(_mm256_mul_pd(s, s), w);
    __m256d right = _mm256_div_pd(_mm256_mul_pd(sr, sr), wr);
    _mm256_storeu_pd(out + k, _mm256_add_pd(left, right));
  }
  for (; k < n; ++k) {
    double sr = s_tot - sl[k];
    double wr = w_tot - wl[k];
    out[k] = (sl[k] * sl[k]) / wl[k] + (sr * sr) / wr;
  }
}

void causal_split_scores(const double* cl, const double* ul, const double* vl, double c_tot,
                         double u_tot, double v_tot, double* out, std::size_t n) {
  const __m256d ct = _mm256_set1_pd(c_tot);
  const __m256d ut = _mm256_set1_pd(u_tot);
  const __m256d vt = _mm256_set1_pd(v_tot);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d c = _mm256_loadu_pd(cl + k);
    __m256d u = _mm256_loadu_pd(ul + k);
    __m256d v = _mm256_loadu_pd(vl + k);
    __m256d cr = _mm256_sub_pd(ct, c);
    __m256d ur = _mm256_sub_pd(ut, u);
    __m256d vr = _mm256_sub_pd(vt, v);
    __m256d diff = _mm256_sub_pd(_mm256_div_pd(v, u), _mm256_div_pd(vr, ur));
    __m256d res = _mm256_mul_pd(_mm256_mul_pd(c, cr), _mm256_mul_pd(diff, diff));
    _mm256_storeu_pd(out + k, res);
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
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d yy = _mm256_loadu_pd(y + k);
    __m256d xx = _mm256_loadu_pd(x + k);
    _mm256_storeu_pd(y + k, _mm256_add_pd(yy, _mm256_mul_pd(a, xx)));
  }
  for (; k < n; ++k) y[k] = y[k] + alpha * x[k];
}

double horizontal_sum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  }
  double s = horizontal_sum(acc);
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = horizontal_sum(acc);
  for (; k < n; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::Avx2, regression_split_scores, causal_split_scores,
                                 axpy,      dot,                     squared_distance};
  return &table;
}

}  // namespace cate::simd
