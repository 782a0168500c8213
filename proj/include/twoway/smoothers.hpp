#pragma once

#include <cmath>
#include <numbers>
#include <string_view>
#include <utility>

#include "twoway/panel.hpp"

namespace twoway {

enum class Kernel { Gaussian, Epanechnikov };

std::string_view to_string(Kernel kernel);
Kernel parse_kernel(std::string_view name);

/// Second-order kernels: Gaussian density, and Epanechnikov 0.75(1-u^2) on |u| <= 1.
template <typename Scalar>
Scalar kernel_eval(Scalar u, Kernel kernel) {
  switch (kernel) {
    case Kernel::Gaussian:
      return std::exp(-u * u / Scalar(2)) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
    case Kernel::Epanechnikov:
      return std::abs(u) <= Scalar(1) ? Scalar(0.75) * (Scalar(1) - u * u) : Scalar(0);
  }
  return Scalar(0);
}

/// Row-stochastic Nadaraya-Watson weights over a set of points.
struct SmootherMatrix {
  Matrix weights;
  double bandwidth = 1.0;
  Kernel kernel = Kernel::Gaussian;

  Index size() const { return weights.rows(); }
};

/// W_ij = K_h(p_i - p_j) / sum_j K_h(p_i - p_j), with a product kernel over the
/// columns of `points` (n x d) and one shared bandwidth. A row whose
/// denominator underflows falls back to self-weight 1 with a warning.
SmootherMatrix nw_weights(const Eigen::Ref<const Matrix>& points, double h, Kernel kernel = Kernel::Gaussian);

/// Two-way kernel regression S1 Z + Z S2' - S1 Z S2', with S1 built on the unit
/// points `lam` (N x d) and S2 on the period points `f` (T x d).
Matrix two_way_kernel_regression(const Matrix& z, const Matrix& lam, const Matrix& f, double h1, double h2,
                                 Kernel kernel = Kernel::Gaussian);

/// Same combination for precomputed smoothers.
Matrix two_way_smooth(const Matrix& z, const SmootherMatrix& s1, const SmootherMatrix& s2);

/// Smoothers on the projected indices A * lambda_i and B * f_t.
/// A and B are d x R2; lam_hat is N x R2 and f_hat is T x R2.
std::pair<SmootherMatrix, SmootherMatrix> multi_index_weights(const Matrix& lam_hat, const Matrix& f_hat,
                                                              const Matrix& a, const Matrix& b, double h1,
                                                              double h2, Kernel kernel = Kernel::Gaussian);

/// First d rows of the R2 x R2 identity.
Matrix selection_index(Index d, Index r2);

/// trace(W).
inline double effective_dof(const SmootherMatrix& w) { return w.weights.trace(); }

enum class BandwidthRole { Estimation, Oracle, Pseudo, Moment };

/// Rate defaults on m = min(N, T): estimation (25/m)^{1/2}, oracle (1/m)^{1/2},
/// pseudo-distance (25/m)^{1/4}, moment proxies (10/m)^{1/2}.
double default_bandwidth(Index n, Index t, BandwidthRole role);

}  // namespace twoway
