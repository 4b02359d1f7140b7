#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace becaptcha {

// Dense row-major matrix of doubles. The networks here are desk scale, so a
// plain vector with index arithmetic beats pulling in a linear algebra
// dependency.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return v[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return v[r * cols + c];
  }

  std::size_t size() const { return v.size(); }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

using Vec = std::vector<double>;

// y += A x
inline void matvec_acc(const Mat& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = &a.v[r * a.cols];
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// y += A^T x  (x has a.rows entries, y has a.cols entries)
inline void matvec_t_acc(const Mat& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = &a.v[r * a.cols];
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
  }
}

// A += x y^T  (outer product accumulate; x has a.rows entries, y has a.cols)
inline void outer_acc(Mat& a, const double* x, const double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double* row = &a.v[r * a.cols];
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < a.cols; ++c) row[c] += xr * y[c];
  }
}

}  // namespace becaptcha
