#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "mpgd/dataset.hpp"
#include "mpgd/losses.hpp"

namespace mpgd {

// One-hidden-layer ReLU regressor.  Parameter layout, in draw order:
// W1 row-major (width x in_dim), b1 (width), w2 (width), b2 (scalar).
class ShallowMlp {
 public:
  ShallowMlp(std::size_t in_dim, std::size_t width);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t width() const { return width_; }
  std::size_t param_count() const { return width_ * in_dim_ + 2 * width_ + 1; }

  // uniform on +-1/sqrt(fan_in) per layer
  std::vector<double> init_params(std::uint64_t seed) const;

  double forward(std::span<const double> x, std::span<const double> params) const;

 private:
  std::size_t in_dim_, width_;
};

// Mean squared error of a ShallowMlp over a fixed dataset, with reverse-mode
// gradients.  No curvature: the ReLU kinks leave no continuous Hessian.
class MlpLoss final : public LossModel {
 public:
  MlpLoss(Dataset data, std::size_t width);

  const ShallowMlp& net() const { return net_; }
  const Dataset& data() const { return data_; }

  std::size_t dim() const override { return net_.param_count(); }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;

  // root mean squared error over an arbitrary dataset with the same features
  double rmse(const Dataset& eval, std::span<const double> params) const;

 private:
  Dataset data_;
  ShallowMlp net_;
};

}  // namespace mpgd
