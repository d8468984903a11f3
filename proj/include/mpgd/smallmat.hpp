#pragma once
#include <cstddef>
#include <vector>

// Dense row-major helpers for the small (d <= a few dozen) matrices used by
// the expansion machinery.  No aliasing between output and inputs.

namespace mpgd::smallmat {

inline std::vector<double> identity(std::size_t d) {
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
  return m;
}

inline void mul(std::size_t d, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < d; ++l) s += a[i * d + l] * b[l * d + j];
      out[i * d + j] = s;
    }
  }
}

inline std::vector<double> mul(std::size_t d, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(d * d);
  mul(d, a.data(), b.data(), out.data());
  return out;
}

inline std::vector<double> mat_vec(std::size_t d, const std::vector<double>& a, const std::vector<double>& x) {
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[i * d + j] * x[j];
    out[i] = s;
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// tr(A B) for row-major square A, B.
inline double trace_prod(std::size_t d, const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s += a[i * d + j] * b[j * d + i];
  return s;
}

inline void axpy_outer(std::size_t d, double w, const std::vector<double>& u, const std::vector<double>& v,
                       std::vector<double>& acc) {
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) acc[i * d + j] += w * u[i] * v[j];
}

// acc += w * A * B^T
inline void axpy_abt(std::size_t d, double w, const std::vector<double>& a, const std::vector<double>& b,
                     std::vector<double>& acc) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < d; ++l) s += a[i * d + l] * b[j * d + l];
      acc[i * d + j] += w * s;
    }
  }
}

}  // namespace mpgd::smallmat
