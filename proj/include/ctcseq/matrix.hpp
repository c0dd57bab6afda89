// ctcseq/matrix.hpp — minimal row-major double matrix.
#pragma once

#include <cstddef>
#include <vector>

#include "ctcseq/common.hpp"

namespace ctcseq {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { data.assign(data.size(), v); }
};

inline Matrix zeros_like(const Matrix& m) { return Matrix(m.rows, m.cols); }

// y[j] += sum_i x[i] * w(i, j)   (w is in_dim x out_dim)
inline void add_vecmat(const double* x, const Matrix& w, double* y) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.row(i);
    for (std::size_t j = 0; j < w.cols; ++j) y[j] += xi * wr[j];
  }
}

// y[i] += sum_j g[j] * w(i, j)   (gradient flowing back through add_vecmat)
inline void add_matvec_t(const Matrix& w, const double* g, double* y) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += g[j] * wr[j];
    y[i] += acc;
  }
}

// dw(i, j) += x[i] * g[j]
inline void add_outer(const double* x, const double* g, Matrix& dw) {
  for (std::size_t i = 0; i < dw.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* dr = dw.row(i);
    for (std::size_t j = 0; j < dw.cols; ++j) dr[j] += xi * g[j];
  }
}

}  // namespace ctcseq
