#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "teta/kernels.hpp"

namespace teta::kernels {
namespace {

constexpr std::size_t kBlock = 4;

// Below this fraction of non-zeros the sparse paths win. One-hot inputs sit
// around 2-3%.
constexpr double kSparseDensity = 0.25;

double density(const Matrix& m) {
  if (m.empty()) return 1.0;
  std::size_t nnz = 0;
  for (double v : m.flat()) nnz += (v != 0.0);
  return static_cast<double>(nnz) / static_cast<double>(m.size());
}

struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> index;
  std::vector<double> value;
};

Csr to_csr(const Matrix& m) {
  Csr c;
  c.offsets.reserve(m.rows() + 1);
  c.offsets.push_back(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != 0.0) {
        c.index.push_back(i);
        c.value.push_back(row[i]);
      }
    }
    c.offsets.push_back(c.index.size());
  }
  return c;
}

constexpr std::size_t kLanes = 8;

// Dot products of R rows against one weight row. Each row keeps its own
// fixed set of lane accumulators, so a row's result does not depend on which
// other rows share the block.
template <std::size_t R>
void dot_rows(const double* const* xr, const double* w, std::size_t in,
              double* out) {
  double acc[R][kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= in; i += kLanes) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t l = 0; l < kLanes; ++l) {
        acc[r][l] += xr[r][i + l] * w[i + l];
      }
    }
  }
  double tail[R] = {};
  for (; i < in; ++i) {
    for (std::size_t r = 0; r < R; ++r) tail[r] += xr[r][i] * w[i];
  }
  for (std::size_t r = 0; r < R; ++r) {
    const double* a = acc[r];
    out[r] = (((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]))) +
             tail[r];
  }
}

template <std::size_t R>
void forward_rows(const Matrix& x, const Matrix& w, std::span<const double> b,
                  Matrix& z, const std::size_t* rows) {
  const double* xr[R];
  for (std::size_t r = 0; r < R; ++r) xr[r] = x.row(rows[r]).data();
  double acc[R];
  for (std::size_t o = 0; o < w.rows(); ++o) {
    dot_rows<R>(xr, w.row(o).data(), x.cols(), acc);
    for (std::size_t r = 0; r < R; ++r) z(rows[r], o) = b[o] + acc[r];
  }
}

void forward_sparse_row(const Matrix& x, const Matrix& w,
                        std::span<const double> b, Matrix& z, std::size_t s,
                        std::vector<std::size_t>& idx) {
  auto row = x.row(s);
  idx.clear();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] != 0.0) idx.push_back(i);
  }
  for (std::size_t o = 0; o < w.rows(); ++o) {
    const double* wo = w.row(o).data();
    double acc = 0.0;
    for (auto i : idx) acc += row[i] * wo[i];
    z(s, o) = b[o] + acc;
  }
}

template <std::size_t R>
void backward_input_rows(const Matrix& dz, const Matrix& w, Matrix& dx,
                         std::size_t n0) {
  const std::size_t in = w.cols();
  double* dr[R];
  for (std::size_t r = 0; r < R; ++r) {
    dr[r] = dx.row(n0 + r).data();
    std::fill(dr[r], dr[r] + in, 0.0);
  }
  for (std::size_t o = 0; o < w.rows(); ++o) {
    double d[R];
    bool any = false;
    for (std::size_t r = 0; r < R; ++r) {
      d[r] = dz(n0 + r, o);
      any |= d[r] != 0.0;
    }
    if (!any) continue;
    const double* wo = w.row(o).data();
    for (std::size_t r = 0; r < R; ++r) {
      double* out = dr[r];
      const double dv = d[r];
#pragma omp simd
      for (std::size_t i = 0; i < in; ++i) out[i] += dv * wo[i];
    }
  }
}

template <std::size_t R>
void backward_params_rows(const Matrix& dz, const Matrix& x, const Csr* csr,
                          Matrix& dw, std::span<double> db, std::size_t o0) {
  const std::size_t in = x.cols();
  double* wr[R];
  double bias[R] = {};
  for (std::size_t r = 0; r < R; ++r) {
    wr[r] = dw.row(o0 + r).data();
    std::fill(wr[r], wr[r] + in, 0.0);
  }
  for (std::size_t n = 0; n < dz.rows(); ++n) {
    double d[R];
    bool any = false;
    for (std::size_t r = 0; r < R; ++r) {
      d[r] = dz(n, o0 + r);
      bias[r] += d[r];
      any |= d[r] != 0.0;
    }
    if (!any) continue;
    if (csr) {
      for (std::size_t k = csr->offsets[n]; k < csr->offsets[n + 1]; ++k) {
        const std::size_t i = csr->index[k];
        const double v = csr->value[k];
        for (std::size_t r = 0; r < R; ++r) wr[r][i] += d[r] * v;
      }
    } else {
      const double* xn = x.row(n).data();
      for (std::size_t r = 0; r < R; ++r) {
        double* out = wr[r];
        const double dv = d[r];
#pragma omp simd
        for (std::size_t i = 0; i < in; ++i) out[i] += dv * xn[i];
      }
    }
  }
  for (std::size_t r = 0; r < R; ++r) db[o0 + r] = bias[r];
}

}  // namespace

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b,
                   Matrix& z) {
  const std::size_t n = x.rows();
  const std::size_t in = x.cols();
  z.resize(n, w.rows());

  // Rows dominated by zeros (one-hot inputs) take the sparse path; the rest
  // are processed in blocks that share each weight row.
  std::vector<std::size_t> dense_rows;
  std::vector<std::size_t> sparse_rows;
  for (std::size_t s = 0; s < n; ++s) {
    auto row = x.row(s);
    std::size_t nnz = 0;
    for (double v : row) nnz += (v != 0.0);
    (static_cast<double>(nnz) < kSparseDensity * static_cast<double>(in)
         ? sparse_rows
         : dense_rows)
        .push_back(s);
  }

  const std::size_t n_sparse = sparse_rows.size();
#pragma omp parallel
  {
    std::vector<std::size_t> idx;
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < n_sparse; ++k) {
      forward_sparse_row(x, w, b, z, sparse_rows[k], idx);
    }
  }

  const std::size_t blocks = dense_rows.size() / kBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    forward_rows<kBlock>(x, w, b, z, dense_rows.data() + blk * kBlock);
  }
  for (std::size_t k = blocks * kBlock; k < dense_rows.size(); ++k) {
    forward_rows<1>(x, w, b, z, dense_rows.data() + k);
  }
}

void dense_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx) {
  const std::size_t n = dz.rows();
  dx.resize(n, w.cols());
  const std::size_t blocks = n / kBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    backward_input_rows<kBlock>(dz, w, dx, blk * kBlock);
  }
  for (std::size_t s = blocks * kBlock; s < n; ++s) {
    backward_input_rows<1>(dz, w, dx, s);
  }
}

void dense_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw,
                           std::span<double> db) {
  const std::size_t out = dz.cols();
  dw.resize(out, x.cols());
  Csr csr;
  const bool sparse = density(x) < kSparseDensity;
  if (sparse) csr = to_csr(x);
  const Csr* csr_ptr = sparse ? &csr : nullptr;
  const std::size_t blocks = out / kBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    backward_params_rows<kBlock>(dz, x, csr_ptr, dw, db, blk * kBlock);
  }
  for (std::size_t o = blocks * kBlock; o < out; ++o) {
    backward_params_rows<1>(dz, x, csr_ptr, dw, db, o);
  }
}

void row_sq_norms(const Matrix& x, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < x.rows(); ++j) {
    const double* xj = x.row(j).data();
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t k = 0; k < x.cols(); ++k) acc += xj[k] * xj[k];
    out[j] = acc;
  }
}

void rbf_row(const Matrix& x, std::span<const double> sq_norms, std::size_t i,
             double gamma, std::span<double> out) {
  const double* xi = x.row(i).data();
  const std::size_t d = x.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < x.rows(); ++j) {
    const double* xj = x.row(j).data();
    double dot = 0.0;
#pragma omp simd reduction(+ : dot)
    for (std::size_t k = 0; k < d; ++k) dot += xi[k] * xj[k];
    double d2 = std::max(0.0, sq_norms[i] + sq_norms[j] - 2.0 * dot);
    out[j] = i == j ? 1.0 : std::exp(-gamma * d2);
  }
}

}  // namespace teta::kernels
