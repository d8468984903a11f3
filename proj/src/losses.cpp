#include "mpgd/losses.hpp"

#include <cmath>

namespace mpgd {

double LossModel::hessian_trace(std::span<const double> x) const {
  std::vector<double> h(dim() * dim());
  hessian(x, h);
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += h[i * dim() + i];
  return t;
}

QuadraticLoss::QuadraticLoss(std::vector<double> a_row_major, std::size_t d)
    : d_(d), a_(std::move(a_row_major)) {
  if (d_ == 0 || a_.size() != d_ * d_)
    throw std::invalid_argument("quadratic loss: matrix size must be d*d");
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i + 1; j < d_; ++j)
      if (std::abs(a_[i * d_ + j] - a_[j * d_ + i]) > 1e-12 * (1.0 + std::abs(a_[i * d_ + j])))
        throw std::invalid_argument("quadratic loss: matrix must be symmetric");
}

QuadraticLoss QuadraticLoss::diagonal(const std::vector<double>& eigs) {
  const std::size_t d = eigs.size();
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = eigs[i];
  return QuadraticLoss(std::move(a), d);
}

double QuadraticLoss::value(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < d_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d_; ++j) row += a_[i * d_ + j] * x[j];
    s += x[i] * row;
  }
  return 0.5 * s;
}

void QuadraticLoss::gradient(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < d_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d_; ++j) row += a_[i * d_ + j] * x[j];
    out[i] = row;
  }
}

void QuadraticLoss::hessian(std::span<const double>, std::span<double> out) const {
  std::copy(a_.begin(), a_.end(), out.begin());
}

double QuadraticLoss::hessian_trace(std::span<const double>) const {
  double t = 0.0;
  for (std::size_t i = 0; i < d_; ++i) t += a_[i * d_ + i];
  return t;
}

void QuadraticLoss::grad_component_hessian(std::span<const double>, std::size_t j,
                                           std::span<double> out) const {
  if (j >= d_) throw std::invalid_argument("quadratic loss: component out of range");
  std::fill(out.begin(), out.end(), 0.0);
}

WideningValleyLoss::WideningValleyLoss(std::size_t d_u) : d_u_(d_u) {
  if (d_u == 0) throw std::invalid_argument("widening valley: u block must be nonempty");
}

double WideningValleyLoss::value(std::span<const double> x) const {
  double u2 = 0.0;
  for (std::size_t i = 0; i < d_u_; ++i) u2 += x[i] * x[i];
  const double v = x[d_u_];
  return 0.5 * v * v * u2;
}

void WideningValleyLoss::gradient(std::span<const double> x, std::span<double> out) const {
  const double v = x[d_u_];
  double u2 = 0.0;
  for (std::size_t i = 0; i < d_u_; ++i) u2 += x[i] * x[i];
  for (std::size_t i = 0; i < d_u_; ++i) out[i] = v * v * x[i];
  out[d_u_] = u2 * v;
}

void WideningValleyLoss::hessian(std::span<const double> x, std::span<double> out) const {
  const std::size_t d = dim();
  const double v = x[d_u_];
  double u2 = 0.0;
  for (std::size_t i = 0; i < d_u_; ++i) u2 += x[i] * x[i];
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < d_u_; ++i) {
    out[i * d + i] = v * v;
    out[i * d + d_u_] = 2.0 * v * x[i];
    out[d_u_ * d + i] = 2.0 * v * x[i];
  }
  out[d_u_ * d + d_u_] = u2;
}

double WideningValleyLoss::hessian_trace(std::span<const double> x) const {
  const double v = x[d_u_];
  double u2 = 0.0;
  for (std::size_t i = 0; i < d_u_; ++i) u2 += x[i] * x[i];
  return static_cast<double>(d_u_) * v * v + u2;
}

void WideningValleyLoss::grad_component_hessian(std::span<const double> x, std::size_t j,
                                                std::span<double> out) const {
  const std::size_t d = dim();
  if (j >= d) throw std::invalid_argument("widening valley: component out of range");
  const double v = x[d_u_];
  std::fill(out.begin(), out.end(), 0.0);
  if (j < d_u_) {
    // gradient component v^2 u_j
    out[j * d + d_u_] = 2.0 * v;
    out[d_u_ * d + j] = 2.0 * v;
    out[d_u_ * d + d_u_] = 2.0 * x[j];
  } else {
    // gradient component |u|^2 v
    for (std::size_t i = 0; i < d_u_; ++i) {
      out[i * d + i] = 2.0 * v;
      out[i * d + d_u_] = 2.0 * x[i];
      out[d_u_ * d + i] = 2.0 * x[i];
    }
  }
}

}  // namespace mpgd
