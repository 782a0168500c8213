#include "twoway/smoothers.hpp"

#include <sstream>

namespace twoway {

std::string_view to_string(Kernel kernel) {
  return kernel == Kernel::Gaussian ? "gaussian" : "epanechnikov";
}

Kernel parse_kernel(std::string_view name) {
  if (name == "gaussian") return Kernel::Gaussian;
  if (name == "epanechnikov") return Kernel::Epanechnikov;
  throw Error(ErrorCode::BadValue, "unknown kernel '" + std::string(name) + "'");
}

SmootherMatrix nw_weights(const Eigen::Ref<const Matrix>& points, double h, Kernel kernel) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::BadValue, "bandwidth must be positive and finite");
  const Index n = points.rows();
  const Index d = points.cols();
  SmootherMatrix s;
  s.bandwidth = h;
  s.kernel = kernel;
  s.weights.resize(n, n);

  if (kernel == Kernel::Gaussian) {
    // Product Gaussian kernel = exp(-|p_i - p_j|^2 / (2 h^2)); the
    // normalising constant cancels in the row ratio.
    const double scale = -0.5 / (h * h);
    for (Index j = 0; j < n; ++j) {
      for (Index i = j; i < n; ++i) {
        const double dist2 = (points.row(i) - points.row(j)).squaredNorm();
        const double k = std::exp(scale * dist2);
        s.weights(i, j) = k;
        s.weights(j, i) = k;
      }
    }
  } else {
    for (Index j = 0; j < n; ++j) {
      for (Index i = j; i < n; ++i) {
        double k = 1.0;
        for (Index c = 0; c < d && k > 0.0; ++c) k *= kernel_eval((points(i, c) - points(j, c)) / h, kernel);
        s.weights(i, j) = k;
        s.weights(j, i) = k;
      }
    }
  }

  for (Index i = 0; i < n; ++i) {
    const double denom = s.weights.row(i).sum();
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      std::ostringstream os;
      os << "smoother row " << i + 1 << " is degenerate at bandwidth " << h << "; using self-weight";
      warn(os.str());
      s.weights.row(i).setZero();
      s.weights(i, i) = 1.0;
      continue;
    }
    s.weights.row(i) /= denom;
  }
  return s;
}

Matrix two_way_smooth(const Matrix& z, const SmootherMatrix& s1, const SmootherMatrix& s2) {
  if (s1.size() != z.rows() || s2.size() != z.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "smoother dimensions do not match the panel");
  }
  const Matrix rows = s1.weights * z;
  const Matrix cols = z * s2.weights.transpose();
  return rows + cols - rows * s2.weights.transpose();
}

Matrix two_way_kernel_regression(const Matrix& z, const Matrix& lam, const Matrix& f, double h1, double h2,
                                 Kernel kernel) {
  if (lam.rows() != z.rows() || f.rows() != z.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "proxy rows must match panel dimensions");
  }
  return two_way_smooth(z, nw_weights(lam, h1, kernel), nw_weights(f, h2, kernel));
}

Matrix selection_index(Index d, Index r2) { return Matrix::Identity(r2, r2).topRows(d); }

std::pair<SmootherMatrix, SmootherMatrix> multi_index_weights(const Matrix& lam_hat, const Matrix& f_hat,
                                                              const Matrix& a, const Matrix& b, double h1,
                                                              double h2, Kernel kernel) {
  if (a.cols() != lam_hat.cols() || b.cols() != f_hat.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "index matrices must have R2 columns");
  }
  const Matrix row_points = lam_hat * a.transpose();
  const Matrix col_points = f_hat * b.transpose();
  return {nw_weights(row_points, h1, kernel), nw_weights(col_points, h2, kernel)};
}

double default_bandwidth(Index n, Index t, BandwidthRole role) {
  const double m = static_cast<double>(std::min(n, t));
  switch (role) {
    case BandwidthRole::Estimation: return std::sqrt(25.0 / m);
    case BandwidthRole::Oracle: return std::sqrt(1.0 / m);
    case BandwidthRole::Pseudo: return std::pow(25.0 / m, 0.25);
    case BandwidthRole::Moment: return std::sqrt(10.0 / m);
  }
  return std::sqrt(25.0 / m);
}

}  // namespace twoway
