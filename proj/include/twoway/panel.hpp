#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "twoway/error.hpp"

namespace twoway {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Balanced panel: outcome Y (N x T) and K covariate slices, each N x T.
/// Build through validate_panel(); all entries are finite afterwards.
struct PanelData {
  Matrix y;
  std::vector<Matrix> x;

  Index n() const { return y.rows(); }
  Index t() const { return y.cols(); }
  Index k() const { return static_cast<Index>(x.size()); }
};

/// Checks shapes and finiteness. Throws Error{DimensionMismatch|NonFinite|Empty}.
PanelData validate_panel(Matrix y, std::vector<Matrix> x);

/// Drops the last unit and/or period when N or T is odd, with a warning,
/// so that the quadrant split has equal rectangular halves.
PanelData truncate_to_even(const PanelData& data);

/// Contiguous rectangle of cells [row0, row0+rows) x [col0, col0+cols), 0-based.
struct Block {
  Index row0 = 0;
  Index rows = 0;
  Index col0 = 0;
  Index cols = 0;

  bool contains(Index i, Index t) const {
    return i >= row0 && i < row0 + rows && t >= col0 && t < col0 + cols;
  }
  Index size() const { return rows * cols; }
};

/// Quadrant sample split. Quadrant id q = 2*a + b, where a indexes the row
/// half and b the column half (a, b in {0, 1}); id 0 is I_{1,1}, 3 is I_{2,2}.
struct SplitPartition {
  Index n = 0;
  Index t = 0;
  std::array<Block, 4> quadrants;

  static constexpr int id(int row_half, int col_half) { return 2 * row_half + col_half; }
  static constexpr int row_half(int q) { return q / 2; }
  static constexpr int col_half(int q) { return q % 2; }
  /// Same rows, other column half.
  static constexpr int row_partner(int q) { return id(row_half(q), 1 - col_half(q)); }
  /// Same columns, other row half.
  static constexpr int col_partner(int q) { return id(1 - row_half(q), col_half(q)); }
  static constexpr int diagonal(int q) { return 3 - q; }

  int quadrant_of(Index i, Index t) const;
};

/// Requires N, T >= 4 and both even (see truncate_to_even). Throws TooSmall.
SplitPartition make_split_partitions(Index n, Index t);

/// Sub-panel restricted to one block.
PanelData sub_panel(const PanelData& data, const Block& block);

/// Weighted-within residuals of a panel together with the smoother traces
/// used for degrees-of-freedom corrections.
struct ResidualizedPanel {
  Matrix y;
  std::vector<Matrix> x;
  double trace_w1 = 0.0;
  double trace_w2 = 0.0;
};

template <typename Derived>
typename Derived::PlainObject demean(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = z.mean();
  return (z.array() - mean).matrix();
}

/// sum_it X_it X_it' over K covariate slices.
Matrix pooled_gram(const std::vector<Matrix>& x);

/// sum_it X_it z_it.
Vector pooled_cross(const std::vector<Matrix>& x, const Matrix& z);

/// sum_k X_k * beta_k.
Matrix apply_beta(const std::vector<Matrix>& x, const Vector& beta);

/// Pooled OLS of z on the slices of x (no intercept). Throws SingularDesign when
/// the Gram matrix has condition number above 1e10.
Vector pooled_ols(const Matrix& z, const std::vector<Matrix>& x);

/// Ratio of extreme eigenvalues of a symmetric PSD matrix (inf if singular).
double condition_number(const Matrix& symmetric);

}  // namespace twoway
