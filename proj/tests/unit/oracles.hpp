#pragma once

// Brute-force reference implementations written with plain loops and no
// library calls beyond std, for cross-checking the library on small inputs.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline double gaussian(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * 3.14159265358979323846); }

// Product Gaussian kernel NW weights.
inline Matrix nw(const Matrix& p, double h) {
  const int n = static_cast<int>(p.rows());
  Matrix w(n, n);
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      double k = 1.0;
      for (int c = 0; c < p.cols(); ++c) k *= gaussian((p(i, c) - p(j, c)) / h);
      w(i, j) = k;
      total += k;
    }
    for (int j = 0; j < n; ++j) w(i, j) /= total;
  }
  return w;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j)
      for (int k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// S1 Z + Z S2' - S1 Z S2', entry by entry.
inline Matrix two_way(const Matrix& z, const Matrix& s1, const Matrix& s2) {
  const Matrix s1z = matmul(s1, z);
  const Matrix zs2 = matmul(z, transpose(s2));
  const Matrix both = matmul(s1z, transpose(s2));
  Matrix out(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i)
    for (int t = 0; t < z.cols(); ++t) out(i, t) = s1z(i, t) + zs2(i, t) - both(i, t);
  return out;
}

// rows(i,j) = max_{k != i,j} |sum_t m(k,t) (m(i,t) - m(j,t))| / T, and the column analogue.
inline Matrix pseudo_rows(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  const int t = static_cast<int>(m.cols());
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double best = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        double s = 0.0;
        for (int c = 0; c < t; ++c) s += m(k, c) * (m(i, c) - m(j, c));
        best = std::max(best, std::abs(s) / t);
      }
      d(i, j) = best;
    }
  return d;
}

inline Matrix pseudo_cols(const Matrix& m) { return pseudo_rows(transpose(m)); }

// Per-unit Bartlett long-run covariance of K score slices, averaged over units.
inline Matrix hac(const std::vector<Matrix>& s, int lags) {
  const int k = static_cast<int>(s.size());
  const int n = static_cast<int>(s[0].rows());
  const int t = static_cast<int>(s[0].cols());
  Matrix sigma = Matrix::Zero(k, k);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        double acc = 0.0;
        for (int l = -lags; l <= lags; ++l) {
          const double w = 1.0 - std::abs(l) / (lags + 1.0);
          for (int u = 0; u < t; ++u) {
            const int v = u - l;
            if (v < 0 || v >= t) continue;
            acc += w * s[a](i, u) * s[b](i, v);
          }
        }
        sigma(a, b) += acc / t;
      }
  return sigma / n;
}

// Gauss-Jordan solve of a small dense system.
inline Vector solve(Matrix a, Vector b) {
  const int n = static_cast<int>(a.rows());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    a.row(c).swap(a.row(piv));
    std::swap(b(c), b(piv));
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c) / a(c, c);
      for (int j = 0; j < n; ++j) a(r, j) -= f * a(c, j);
      b(r) -= f * b(c);
    }
  }
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = b(i) / a(i, i);
  return x;
}

// beta = (sum uX uX')^-1 sum uX uY with u = data - fit.
inline Vector beta_no(const Matrix& y, const std::vector<Matrix>& x, const Matrix& gy, const std::vector<Matrix>& gx) {
  const int k = static_cast<int>(x.size());
  Matrix gram = Matrix::Zero(k, k);
  Vector cross = Vector::Zero(k);
  for (int i = 0; i < y.rows(); ++i)
    for (int t = 0; t < y.cols(); ++t) {
      const double uy = y(i, t) - gy(i, t);
      for (int a = 0; a < k; ++a) {
        const double ua = x[a](i, t) - gx[a](i, t);
        cross(a) += ua * uy;
        for (int b = 0; b < k; ++b) gram(a, b) += ua * (x[b](i, t) - gx[b](i, t));
      }
    }
  return solve(gram, cross);
}

}  // namespace oracle
