#include <cmath>

#include "teta/kernels.hpp"

namespace teta::kernels::reference {

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                   Matrix& z) {
  z.resize(x.rows(), w.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < x.cols(); ++i) acc += x(n, i) * w(o, i);
      z(n, o) = acc;
    }
  }
}

void dense_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx) {
  dx.resize(dz.rows(), w.cols());
  for (std::size_t n = 0; n < dz.rows(); ++n) {
    for (std::size_t i = 0; i < w.cols(); ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.rows(); ++o) acc += dz(n, o) * w(o, i);
      dx(n, i) = acc;
    }
  }
}

void dense_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw,
                           std::span<double> db) {
  dw.resize(dz.cols(), x.cols());
  for (std::size_t o = 0; o < dz.cols(); ++o) {
    double bias = 0.0;
    for (std::size_t n = 0; n < dz.rows(); ++n) bias += dz(n, o);
    db[o] = bias;
    for (std::size_t i = 0; i < x.cols(); ++i) {
      double acc = 0.0;
      for (std::size_t n = 0; n < dz.rows(); ++n) acc += dz(n, o) * x(n, i);
      dw(o, i) = acc;
    }
  }
}

void rbf_row(const Matrix& x, std::size_t i, double gamma,
             std::span<double> out) {
  for (std::size_t j = 0; j < x.rows(); ++j) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      double d = x(i, k) - x(j, k);
      d2 += d * d;
    }
    out[j] = std::exp(-gamma * d2);
  }
}

}  // namespace teta::kernels::reference
