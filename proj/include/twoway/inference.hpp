#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "twoway/panel.hpp"

namespace twoway {

enum class DfcMode { Factor, Nonparam, Conservative, None };

std::string_view to_string(DfcMode mode);
DfcMode parse_dfc_mode(std::string_view name);

struct HacConfig {
  Index bartlett_lags = 0;
  DfcMode dfc_mode = DfcMode::Conservative;
};

/// Newey-West automatic lag floor(4 (T/100)^{2/9}).
Index default_bartlett_lags(Index t);

/// Moment contributions s_itk = u_X,itk * (u_Y,it - u_X,it' beta) for
/// first-step residuals u_Y = Y - Gamma_Y and u_X = X - Gamma_X. One N x T slice per k.
std::vector<Matrix> score_matrix(const Matrix& u_y, const std::vector<Matrix>& u_x, const Vector& beta);

/// Long-run score covariance: per-unit Bartlett-weighted autocovariances over
/// time, averaged over units (units treated as independent):
///   Sigma = N^-1 sum_i T^-1 sum_{|l| <= L} w(l) sum_t s_it s_{i,t-l}',  w(l) = 1 - |l|/(L+1).
/// Throws LagTooLarge when L >= T.
Matrix sigma_hat(std::span<const Matrix> scores, Index lags);

/// dfc * Omega^-1 Sigma Omega^-1 / (NT). Throws SingularOmega.
Matrix sandwich(const Matrix& omega, const Matrix& sigma, Index n, Index t, double dfc);

/// NT / ((N - R1)(T - R1)).
double dfc_factor(Index n, Index t, double r1);
/// NT / ((N - tr1)(T - tr2)).
double dfc_nonparam(Index n, Index t, double tr1, double tr2);
/// NT / ((N - min(1.5 tr1, N/2))(T - min(1.5 tr2, T/2))).
double dfc_conservative(Index n, Index t, double tr1, double tr2);

/// Inverse standard normal CDF.
double normal_quantile(double p);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double value) const { return lower <= value && value <= upper; }
};

/// beta_k +/- z_{(1+level)/2} se_k.
std::vector<Interval> confidence_interval(const Vector& beta, const Vector& se, double level);

}  // namespace twoway
