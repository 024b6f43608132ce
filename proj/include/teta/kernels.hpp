#pragma once

#include <span>

#include "teta/matrix.hpp"

// Data-parallel inner loops of the network and the SVR solver.
//
// Two implementations share one signature set:
//   teta::kernels::reference  plain serial loops, kept as the test oracle
//   teta::kernels             OpenMP-parallel, cache-blocked, zero-skipping
//
// Parallel kernels split work over output elements only, never over a
// reduction, so results do not depend on the thread count.
namespace teta::kernels {

// Z = X * W^T + b      X: n x in, W: out x in, Z: n x out
void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                   Matrix& z);

// dX = dZ * W          dZ: n x out, W: out x in, dX: n x in
void dense_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx);

// dW = dZ^T * X, db = column sums of dZ
void dense_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw,
                           std::span<double> db);

// out[j] = exp(-gamma * |x_i - x_j|^2) for every row j of x. `sq_norms`
// holds |x_j|^2 per row.
void rbf_row(const Matrix& x, std::span<const double> sq_norms,
             std::size_t i, double gamma, std::span<double> out);

void row_sq_norms(const Matrix& x, std::span<double> out);

namespace reference {

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                   Matrix& z);
void dense_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx);
void dense_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw,
                           std::span<double> db);
void rbf_row(const Matrix& x, std::size_t i, double gamma,
             std::span<double> out);

}  // namespace reference
}  // namespace teta::kernels
