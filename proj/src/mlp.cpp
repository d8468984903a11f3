#include "mpgd/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "mpgd/rng.hpp"

namespace mpgd {

ShallowMlp::ShallowMlp(std::size_t in_dim, std::size_t width) : in_dim_(in_dim), width_(width) {
  if (in_dim == 0 || width == 0) throw std::invalid_argument("mlp: zero-sized layer");
}

std::vector<double> ShallowMlp::init_params(std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<double> p(param_count());
  const double b1 = 1.0 / std::sqrt(static_cast<double>(in_dim_));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(width_));
  std::size_t i = 0;
  for (; i < width_ * in_dim_ + width_; ++i) p[i] = rng.uniform(-b1, b1);
  for (; i < p.size(); ++i) p[i] = rng.uniform(-b2, b2);
  return p;
}

double ShallowMlp::forward(std::span<const double> x, std::span<const double> params) const {
  const double* w1 = params.data();
  const double* b1 = w1 + width_ * in_dim_;
  const double* w2 = b1 + width_;
  const double b2 = w2[width_];
  double out = b2;
  for (std::size_t k = 0; k < width_; ++k) {
    double z = b1[k];
    const double* row = w1 + k * in_dim_;
    for (std::size_t j = 0; j < in_dim_; ++j) z += row[j] * x[j];
    if (z > 0.0) out += w2[k] * z;
  }
  return out;
}

MlpLoss::MlpLoss(Dataset data, std::size_t width)
    : data_(std::move(data)), net_(data_.n_features, width) {
  if (data_.size() == 0) throw std::invalid_argument("mlp loss: empty dataset");
}

double MlpLoss::value(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t r = 0; r < data_.size(); ++r) {
    const double e = net_.forward(data_.rows[r], x) - data_.targets[r];
    s += e * e;
  }
  return s / static_cast<double>(data_.size());
}

void MlpLoss::gradient(std::span<const double> x, std::span<double> out) const {
  const std::size_t in = net_.in_dim(), w = net_.width();
  const double* w1 = x.data();
  const double* b1 = w1 + w * in;
  const double* w2 = b1 + w;
  const double b2 = w2[w];
  std::fill(out.begin(), out.end(), 0.0);
  double* g_w1 = out.data();
  double* g_b1 = g_w1 + w * in;
  double* g_w2 = g_b1 + w;
  double* g_b2 = g_w2 + w;
  std::vector<double> h(w);
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  for (std::size_t r = 0; r < data_.size(); ++r) {
    const auto& row = data_.rows[r];
    double f = b2;
    for (std::size_t k = 0; k < w; ++k) {
      double z = b1[k];
      const double* wrow = w1 + k * in;
      for (std::size_t j = 0; j < in; ++j) z += wrow[j] * row[j];
      h[k] = z > 0.0 ? z : 0.0;  // subgradient 0 at the kink
      f += w2[k] * h[k];
    }
    const double df = 2.0 * (f - data_.targets[r]) * inv_n;
    *g_b2 += df;
    for (std::size_t k = 0; k < w; ++k) {
      g_w2[k] += df * h[k];
      if (h[k] > 0.0) {
        const double dz = df * w2[k];
        g_b1[k] += dz;
        double* grow = g_w1 + k * in;
        for (std::size_t j = 0; j < in; ++j) grow[j] += dz * row[j];
      }
    }
  }
}

double MlpLoss::rmse(const Dataset& eval, std::span<const double> params) const {
  if (eval.n_features != net_.in_dim())
    throw std::invalid_argument("mlp loss: feature width mismatch");
  if (eval.size() == 0) throw std::invalid_argument("mlp loss: empty evaluation set");
  double s = 0.0;
  for (std::size_t r = 0; r < eval.size(); ++r) {
    const double e = net_.forward(eval.rows[r], params) - eval.targets[r];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(eval.size()));
}

}  // namespace mpgd
