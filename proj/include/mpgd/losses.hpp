#pragma once
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mpgd {

// Training objective seen by the optimizers and the expansion machinery.
// Every model exposes value and gradient; models with analytic curvature
// additionally expose the dense Hessian, its trace, and the Hessian of each
// gradient component (the third-derivative slices the correction term needs).
class LossModel {
 public:
  virtual ~LossModel() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;

  virtual bool has_curvature() const { return false; }
  // row-major dim x dim
  virtual void hessian(std::span<const double>, std::span<double>) const {
    throw std::logic_error("loss model does not expose curvature");
  }
  virtual double hessian_trace(std::span<const double> x) const;
  virtual void grad_component_hessian(std::span<const double>, std::size_t,
                                      std::span<double>) const {
    throw std::logic_error("loss model does not expose third derivatives");
  }

  std::vector<double> gradient_vec(std::span<const double> x) const {
    std::vector<double> g(dim());
    gradient(x, g);
    return g;
  }
};

// R(x) = x' A x / 2 for symmetric A; gradient Ax, constant Hessian, zero
// third derivatives.
class QuadraticLoss final : public LossModel {
 public:
  explicit QuadraticLoss(std::vector<double> a_row_major, std::size_t d);
  static QuadraticLoss diagonal(const std::vector<double>& eigs);

  std::size_t dim() const override { return d_; }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;
  bool has_curvature() const override { return true; }
  void hessian(std::span<const double> x, std::span<double> out) const override;
  double hessian_trace(std::span<const double> x) const override;
  void grad_component_hessian(std::span<const double> x, std::size_t j,
                              std::span<double> out) const override;

 private:
  std::size_t d_;
  std::vector<double> a_;
};

// R(u, v) = v^2 |u|^2 / 2 on x = (u_1..u_du, v).  The valley floor v = 0 is
// a continuum of minimizers whose Hessian trace |u|^2 measures valley width;
// (u, 0) is an exact stationary point for plain gradient descent.
class WideningValleyLoss final : public LossModel {
 public:
  explicit WideningValleyLoss(std::size_t d_u);

  std::size_t dim() const override { return d_u_ + 1; }
  std::size_t u_dim() const { return d_u_; }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;
  bool has_curvature() const override { return true; }
  void hessian(std::span<const double> x, std::span<double> out) const override;
  // d_u v^2 + |u|^2, without forming the matrix
  double hessian_trace(std::span<const double> x) const override;
  void grad_component_hessian(std::span<const double> x, std::size_t j,
                              std::span<double> out) const override;

 private:
  std::size_t d_u_;
};

}  // namespace mpgd
