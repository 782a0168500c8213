#pragma once

#include <vector>

#include "twoway/panel.hpp"

namespace twoway {

/// Loadings and factors of a rank-R principal-components fit, normalised so
/// that f'f/T = I_R and lambda'lambda/N is diagonal.
struct PrincipalComponents {
  Matrix lambda;  // N x R
  Matrix f;       // T x R
};

/// Best rank-R Frobenius approximation lambda * f' of m.
/// f = sqrt(T) * (top-R right singular vectors), lambda = m f / T.
/// Columns are sign-normalised so the largest-magnitude entry of each f column
/// is positive. Throws RankTooLarge when rank > min(N, T).
PrincipalComponents principal_components_step(const Eigen::Ref<const Matrix>& m, Index rank);

struct AlsOptions {
  int max_iter = 500;
  double tol = 1e-8;
};

struct FactorEstimate {
  Vector beta;
  Matrix lambda;     // N x R
  Matrix f;          // T x R
  Matrix gamma_hat;  // lambda * f'
  Index rank = 0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Interactive fixed effects by alternating least squares:
///   min_{beta, lambda, f} sum_it (Y_it - X_it'beta - lambda_i'f_t)^2.
/// Starts from pooled OLS; rank 0 returns pooled OLS. Stops when the relative
/// objective change falls below opts.tol or after opts.max_iter iterations
/// (converged = false, not an error).
FactorEstimate estimate_interactive_fe(const PanelData& data, Index rank, const AlsOptions& opts = {});

struct SpectrumReport {
  Vector singular_values;  // descending
  Vector ratios;           // ratios(r-1) = sv_r / sv_{r+1}, r = 1..R_max
  Index suggested_rank = 0;
  double noise_floor = 0.0;
};

/// Eigenvalue-ratio rank choice: argmax_{1 <= r <= r_max} sv_r / sv_{r+1},
/// ties resolved at the smallest r. Values below the numerical-rank floor
/// (eps * sv_1 * max(N, T)) are treated as equal to the floor.
/// Throws Empty with fewer than two singular values.
Index select_rank(const SpectrumReport& report, Index r_max);

SpectrumReport spectrum_report(const Eigen::Ref<const Matrix>& m, Index r_max);

enum class RankRole { FirstStep, SecondStep };

/// Simulation defaults: first step ceil(min(N,T)^{1/3}), second step 4.
Index default_rank(Index n, Index t, RankRole role);

/// Higher-dimensional effect defaults: first step ceil(2 min(N,T)^{1/3}),
/// second step ceil(2 min(N,T)^{1/5}).
Index default_rank_multidim(Index n, Index t, RankRole role);

}  // namespace twoway
