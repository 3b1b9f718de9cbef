#include "cate/simd/kernels.hpp"

namespace cate::simd {
namespace {

void regression_split_scores(const double* wl, const double* sl, double w_tot, double s_tot,
                             double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    double sr = s_tot - sl[k];
    double wr = w_tot - wl[k];
    out[k] = (sl[k] * sl[k]) / wl[k] + (sr * sr) / wr;
  }
}

void causal_split_scores(const double* cl, const double* ul, const double* vl, double c_tot,
                         double u_tot, double v_tot, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    double cr = c_tot - cl[k];
    double ur = u_tot - ul[k];
    double vr = v_tot - vl[k];
    double diff = vl[k] / ul[k] - vr / ur;
    out[k] = (cl[k] * cr) * (diff * diff);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] = y[k] + alpha * x[k];
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,        regression_split_scores, causal_split_scores,
                                 axpy,               dot,                     squared_distance};
  return table;
}

}  // namespace cate::simd
