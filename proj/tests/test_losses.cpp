#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "mpgd/dataset.hpp"
#include "mpgd/losses.hpp"
#include "mpgd/mlp.hpp"
#include "mpgd/rng.hpp"
#include "support/fd.hpp"

using namespace mpgd;
using mpgd::testing::fd_grad_component_hessian;
using mpgd::testing::fd_gradient;
using mpgd::testing::fd_hessian;
using mpgd::testing::max_rel_err;
using Catch::Approx;

TEST_CASE("widening valley closed forms", "[losses]") {
  WideningValleyLoss loss(3);
  const std::vector<double> x{1.0, -2.0, 0.5, 0.7};
  const double u2 = 1.0 + 4.0 + 0.25;
  CHECK(loss.value(x) == Approx(0.5 * 0.49 * u2).epsilon(1e-15));
  CHECK(loss.hessian_trace(x) == Approx(3.0 * 0.49 + u2).epsilon(1e-15));
  auto g = loss.gradient_vec(x);
  CHECK(g[0] == Approx(0.49 * 1.0));
  CHECK(g[1] == Approx(0.49 * -2.0));
  CHECK(g[3] == Approx(u2 * 0.7));
  std::vector<double> h(16);
  loss.hessian(x, h);
  CHECK(h[0 * 4 + 3] == Approx(2.0 * 0.7 * 1.0));
  CHECK(h[3 * 4 + 3] == Approx(u2));
  // trace shortcut agrees with the matrix
  double tr = 0.0;
  for (int i = 0; i < 4; ++i) tr += h[i * 4 + i];
  CHECK(tr == Approx(loss.hessian_trace(x)).epsilon(1e-14));
}

TEST_CASE("widening valley derivatives agree with finite differences", "[losses]") {
  WideningValleyLoss loss(4);
  const std::vector<double> x{0.8, -1.1, 2.0, 0.3, -0.6};
  CHECK(max_rel_err(fd_gradient(loss, x, 1e-6), loss.gradient_vec(x)) < 1e-9);
  std::vector<double> h(25);
  loss.hessian(x, h);
  CHECK(max_rel_err(fd_hessian(loss, x, 1e-6), h) < 1e-8);
  for (std::size_t j : {0ul, 2ul, 4ul}) {
    std::vector<double> t(25);
    loss.grad_component_hessian(x, j, t);
    CHECK(max_rel_err(fd_grad_component_hessian(loss, x, j, 1e-6), t) < 1e-7);
  }
}

TEST_CASE("valley floor is an exact stationary point", "[losses]") {
  WideningValleyLoss loss(5);
  std::vector<double> x{3.0, 1.0, -2.0, 0.5, 4.0, 0.0};
  auto g = loss.gradient_vec(x);
  for (double gi : g) CHECK(gi == 0.0);
}

TEST_CASE("quadratic loss basics", "[losses]") {
  auto loss = QuadraticLoss::diagonal({1.0, 2.0, 3.0});
  const std::vector<double> x{1.0, -1.0, 2.0};
  CHECK(loss.value(x) == Approx(0.5 * (1.0 + 2.0 + 12.0)).epsilon(1e-15));
  auto g = loss.gradient_vec(x);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == -2.0);
  CHECK(g[2] == 6.0);
  CHECK(loss.hessian_trace(x) == 6.0);
  std::vector<double> t(9, 1.0);
  loss.grad_component_hessian(x, 1, t);
  for (double v : t) CHECK(v == 0.0);

  QuadraticLoss full({2.0, 0.5, 0.5, 1.0}, 2);
  const std::vector<double> y{1.0, 2.0};
  CHECK(full.value(y) == Approx(0.5 * (2.0 + 0.5 * 2.0 + 0.5 * 2.0 + 4.0)).epsilon(1e-14));
  CHECK(max_rel_err(fd_gradient(full, y, 1e-6), full.gradient_vec(y)) < 1e-9);
  CHECK_THROWS_AS(QuadraticLoss({1.0, 0.2, 0.3, 1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticLoss({1.0, 0.2, 0.3}, 2), std::invalid_argument);
}

TEST_CASE("curvature capability gates", "[losses]") {
  Dataset d;
  d.n_features = 2;
  d.rows = {{0.1, 0.2}, {0.3, -0.1}};
  d.targets = {1.0, -1.0};
  MlpLoss loss(d, 4);
  CHECK_FALSE(loss.has_curvature());
  std::vector<double> h(loss.dim() * loss.dim());
  CHECK_THROWS_AS(loss.hessian({}, h), std::logic_error);
  CHECK(WideningValleyLoss(2).has_curvature());
}

TEST_CASE("mlp forward matches a hand computation", "[losses]") {
  ShallowMlp net(1, 1);
  // f(x) = w2 relu(w1 x + b1) + b2
  const std::vector<double> p{2.0, -1.0, 3.0, 0.25};
  CHECK(net.forward(std::vector<double>{1.0}, p) == Approx(3.0 * 1.0 + 0.25));
  CHECK(net.forward(std::vector<double>{0.0}, p) == Approx(0.25));  // relu clamps
  Dataset d;
  d.n_features = 1;
  d.rows = {{1.0}, {0.0}};
  d.targets = {3.0, 0.0};
  MlpLoss loss(d, 1);
  CHECK(loss.value(p) == Approx(0.5 * ((3.25 - 3.0) * (3.25 - 3.0) + 0.0625)).epsilon(1e-14));
  CHECK(loss.rmse(d, p) == Approx(std::sqrt(loss.value(p))).epsilon(1e-14));
}

TEST_CASE("mlp output is degree-1 homogeneous in the output layer", "[losses]") {
  ShallowMlp net(3, 8);
  auto p = net.init_params(5);
  const std::vector<double> x{0.4, -1.2, 0.9};
  const double base = net.forward(x, p);
  auto scaled = p;
  for (std::size_t i = net.width() * net.in_dim() + net.width(); i < scaled.size(); ++i)
    scaled[i] *= 3.0;
  CHECK(net.forward(x, scaled) == Approx(3.0 * base).epsilon(1e-12));
}

TEST_CASE("mlp gradient agrees with finite differences", "[losses]") {
  Dataset d;
  d.n_features = 3;
  Rng rng(17);
  for (int r = 0; r < 20; ++r) {
    d.rows.push_back({rng.normal(), rng.normal(), rng.normal()});
    d.targets.push_back(rng.normal());
  }
  MlpLoss loss(d, 6);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto p = loss.net().init_params(seed);
    CHECK(max_rel_err(fd_gradient(loss, p, 1e-6), loss.gradient_vec(p)) < 1e-5);
  }
}

TEST_CASE("mlp init respects fan-in bounds", "[losses]") {
  ShallowMlp net(4, 16);
  auto p = net.init_params(9);
  const double lim1 = 0.5, lim2 = 0.25;
  for (std::size_t i = 0; i < 16 * 4 + 16; ++i) CHECK(std::abs(p[i]) <= lim1);
  for (std::size_t i = 16 * 4 + 16; i < p.size(); ++i) CHECK(std::abs(p[i]) <= lim2);
  // seeded and deterministic
  CHECK(net.init_params(9) == p);
  CHECK(net.init_params(10) != p);
}

TEST_CASE("csv ingestion handles both delimiters", "[losses]") {
  const std::string comma = "1.0,2.0,3.0\n4.0,5.0,6.0\n";
  const std::string ws = "800\t0  0.3048\t71.3 0.00266337\t126.201\n1000 0 0.3048 71.3 0.00266337 125.201\n";
  auto a = ingest_csv_text(comma, 2);
  CHECK(a.n_features == 2);
  CHECK(a.rows[1][0] == 4.0);
  CHECK(a.targets[1] == 6.0);
  auto b = ingest_csv_text(ws, 5);
  CHECK(b.n_features == 5);
  CHECK(b.size() == 2);
  CHECK(b.targets[0] == Approx(126.201));
  CHECK(b.rows[1][0] == 1000.0);
}

TEST_CASE("csv ingestion rejects malformed input with a location", "[losses]") {
  using Catch::Matchers::ContainsSubstring;
  CHECK_THROWS_WITH(ingest_csv_text("1.0,2.0\n3.0,oops\n", 1),
                    ContainsSubstring("2:2") && ContainsSubstring("oops"));
  CHECK_THROWS_WITH(ingest_csv_text("1 2 3\n4 5\n", 2), ContainsSubstring("expected 3 columns"));
  CHECK_THROWS_WITH(ingest_csv_text("1,2\n", 5), ContainsSubstring("target column out of range"));
  CHECK_THROWS_WITH(ingest_csv_text("\n  \n", 0), ContainsSubstring("no data rows"));
  CHECK_THROWS_WITH(ingest_csv_text("1,2,\n", 1), ContainsSubstring("empty field"));
  CHECK_THROWS_AS(ingest_csv("/nonexistent/file.dat", 0), std::runtime_error);
  // blank lines are fine
  CHECK(ingest_csv_text("1 2\n\n3 4\n", 1).size() == 2);
}

TEST_CASE("split standardization uses training statistics only", "[losses]") {
  Dataset d;
  d.n_features = 2;
  Rng rng(33);
  for (int r = 0; r < 200; ++r) {
    d.rows.push_back({3.0 + 2.0 * rng.normal(), -1.0 + 0.5 * rng.normal()});
    d.targets.push_back(10.0 + 4.0 * rng.normal());
  }
  auto s = split_standardize(d, 150, 50, 777);
  CHECK(s.train.size() == 150);
  CHECK(s.test.size() == 50);
  for (std::size_t j = 0; j < 2; ++j) {
    double m = 0.0, v = 0.0;
    for (const auto& row : s.train.rows) m += row[j];
    m /= 150.0;
    for (const auto& row : s.train.rows) v += (row[j] - m) * (row[j] - m);
    v /= 149.0;
    CHECK(std::abs(m) < 1e-12);
    CHECK(v == Approx(1.0).epsilon(1e-12));
  }
  double my = 0.0;
  for (double t : s.train.targets) my += t;
  CHECK(std::abs(my / 150.0) < 1e-12);
  // the held-out split is standardized with the same constants, so its mean
  // is close to but not exactly zero
  double mt = 0.0;
  for (const auto& row : s.test.rows) mt += row[0];
  mt /= 50.0;
  CHECK(std::abs(mt) > 1e-10);
  CHECK(std::abs(mt) < 0.6);
  // deterministic in the seed, sensitive to it
  auto s2 = split_standardize(d, 150, 50, 777);
  CHECK(s2.train.rows == s.train.rows);
  auto s3 = split_standardize(d, 150, 50, 778);
  CHECK(s3.train.rows != s.train.rows);

  CHECK_THROWS_AS(split_standardize(d, 180, 50, 1), std::invalid_argument);
  Dataset flat = d;
  for (auto& row : flat.rows) row[1] = 2.5;
  CHECK_THROWS_AS(split_standardize(flat, 150, 50, 1), std::runtime_error);
}
