#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "teta/kernels.hpp"
#include "teta/neuralnet.hpp"

using namespace teta;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                     double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution zero(zero_fraction);
  Matrix m(r, c);
  for (auto& v : m.flat()) v = zero(rng) ? 0.0 : u(rng);
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a.flat()[i] - b.flat()[i]));
  }
  return d;
}

struct Shape {
  std::size_t n, in, out;
  double zeros;
};

class KernelAgreement : public ::testing::TestWithParam<Shape> {};

}  // namespace

TEST_P(KernelAgreement, OpenMpMatchesReference) {
  const auto s = GetParam();
  std::mt19937_64 rng(s.n * 1000 + s.in * 10 + s.out);
  auto x = random_matrix(s.n, s.in, rng, s.zeros);
  auto w = random_matrix(s.out, s.in, rng);
  auto b = random_vector(s.out, rng);
  auto dz = random_matrix(s.n, s.out, rng, s.zeros);

  Matrix z1(s.n, s.out), z2(s.n, s.out);
  kernels::dense_forward(x, w, b, z1);
  kernels::reference::dense_forward(x, w, b, z2);
  ASSERT_EQ(z1.rows(), s.n);
  EXPECT_LE(max_abs_diff(z1, z2), 1e-12);

  Matrix dx1(s.n, s.in), dx2(s.n, s.in);
  kernels::dense_backward_input(dz, w, dx1);
  kernels::reference::dense_backward_input(dz, w, dx2);
  EXPECT_LE(max_abs_diff(dx1, dx2), 1e-12);

  Matrix dw1(s.out, s.in), dw2(s.out, s.in);
  std::vector<double> db1(s.out), db2(s.out);
  kernels::dense_backward_params(dz, x, dw1, db1);
  kernels::reference::dense_backward_params(dz, x, dw2, db2);
  EXPECT_LE(max_abs_diff(dw1, dw2), 1e-10);
  for (std::size_t j = 0; j < s.out; ++j) EXPECT_NEAR(db1[j], db2[j], 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelAgreement,
                         ::testing::Values(Shape{1, 1, 1, 0.0}, Shape{3, 7, 5, 0.0},
                                           Shape{17, 237, 320, 0.0},
                                           Shape{64, 237, 320, 0.97},
                                           Shape{256, 40, 5, 0.5},
                                           Shape{300, 5, 1, 0.0},
                                           Shape{33, 100, 40, 1.0}));

TEST(Kernels, ForwardRowDoesNotDependOnBatch) {
  std::mt19937_64 rng(4);
  auto x = random_matrix(50, 237, rng, 0.9);
  auto w = random_matrix(320, 237, rng);
  auto b = random_vector(320, rng);
  Matrix full(50, 320);
  kernels::dense_forward(x, w, b, full);
  for (std::size_t i : {0u, 17u, 49u}) {
    Matrix one(1, 237);
    std::copy(x.row(i).begin(), x.row(i).end(), one.row(0).begin());
    Matrix z(1, 320);
    kernels::dense_forward(one, w, b, z);
    for (std::size_t j = 0; j < 320; ++j) EXPECT_EQ(z(0, j), full(i, j));
  }
}

TEST(Kernels, NetworkPredictionIsBatchIndependent) {
  nn::NetworkSpec spec{{20, 16, 8, 1}};
  auto net = nn::init_network(spec);
  std::mt19937_64 rng(8);
  auto x = random_matrix(40, 20, rng);
  auto batch = nn::predict(net, x);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(batch[i], nn::predict_one(net, x.row(i)));
  }
}

TEST(Kernels, RbfRowMatchesReference) {
  std::mt19937_64 rng(12);
  auto x = random_matrix(80, 237, rng, 0.95);
  std::vector<double> norms(80);
  kernels::row_sq_norms(x, norms);
  std::vector<double> a(80), b(80);
  for (std::size_t i : {0u, 40u, 79u}) {
    kernels::rbf_row(x, norms, i, 0.3, a);
    kernels::reference::rbf_row(x, i, 0.3, b);
    for (std::size_t j = 0; j < 80; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
    EXPECT_NEAR(a[i], 1.0, 1e-12);
  }
}
