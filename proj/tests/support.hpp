#pragma once

// Shared fixtures for the unit and acceptance binaries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ficoco/matrix.hpp"
#include "ficoco/rng.hpp"
#include "reference_oracle.hpp"

namespace ficoco::testing {

inline oracle::Mat to_mat(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

inline Matrix from_mat(const oracle::Mat& m) { return Matrix::from_rows(m); }

inline double max_abs_diff(const Matrix& a, const oracle::Mat& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b[r][c]));
  }
  return worst;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline Matrix gaussian(RandomStream& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = scale * rng.normal();
  return m;
}

/// Random row-stochastic matrix; causal zeroes entries above the diagonal.
inline Matrix stochastic(RandomStream& rng, std::size_t n, bool causal = false) {
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (causal && c > r) continue;
      m(r, c) = rng.uniform() + 1e-3;
      total += m(r, c);
    }
    for (std::size_t c = 0; c < n; ++c) m(r, c) /= total;
  }
  return m;
}

/// Non-negative entries without row normalisation (text->visual slices).
inline Matrix uniform_block(RandomStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform();
  return m;
}

inline std::vector<double> uniform_vector(RandomStream& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace ficoco::testing
