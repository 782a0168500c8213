#include "twoway/inference.hpp"

#include <cmath>
#include <sstream>

namespace twoway {

std::string_view to_string(DfcMode mode) {
  switch (mode) {
    case DfcMode::Factor: return "factor";
    case DfcMode::Nonparam: return "nonparam";
    case DfcMode::Conservative: return "conservative";
    case DfcMode::None: return "none";
  }
  return "none";
}

DfcMode parse_dfc_mode(std::string_view name) {
  if (name == "factor") return DfcMode::Factor;
  if (name == "nonparam") return DfcMode::Nonparam;
  if (name == "conservative") return DfcMode::Conservative;
  if (name == "none") return DfcMode::None;
  throw Error(ErrorCode::BadValue, "unknown dfc mode '" + std::string(name) + "'");
}

Index default_bartlett_lags(Index t) {
  return static_cast<Index>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0)));
}

std::vector<Matrix> score_matrix(const Matrix& u_y, const std::vector<Matrix>& u_x, const Vector& beta) {
  const Matrix eps = u_y - apply_beta(u_x, beta);
  std::vector<Matrix> scores;
  scores.reserve(u_x.size());
  for (const auto& ux : u_x) scores.emplace_back(ux.cwiseProduct(eps));
  return scores;
}

Matrix sigma_hat(std::span<const Matrix> scores, Index lags) {
  if (scores.empty()) throw Error(ErrorCode::Empty, "no score slices");
  const auto k = static_cast<Index>(scores.size());
  const Index n = scores.front().rows();
  const Index t = scores.front().cols();
  if (lags < 0 || lags >= t) {
    std::ostringstream os;
    os << "Bartlett lag " << lags << " must lie in [0, T) with T = " << t;
    throw Error(ErrorCode::LagTooLarge, os.str());
  }
  Matrix sigma = Matrix::Zero(k, k);
  Matrix s(k, t);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < k; ++c) s.row(c) = scores[static_cast<std::size_t>(c)].row(i);
    Matrix unit = s * s.transpose();
    for (Index l = 1; l <= lags; ++l) {
      const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
      const Matrix gamma_l = s.rightCols(t - l) * s.leftCols(t - l).transpose();
      unit += w * (gamma_l + gamma_l.transpose());
    }
    sigma += unit;
  }
  return sigma / (static_cast<double>(n) * static_cast<double>(t));
}

Matrix sandwich(const Matrix& omega, const Matrix& sigma, Index n, Index t, double dfc) {
  if (!(condition_number(omega) < 1e10)) throw Error(ErrorCode::SingularOmega, "Omega_X is not invertible");
  const Matrix inv = omega.ldlt().solve(Matrix::Identity(omega.rows(), omega.cols()));
  Matrix cov = dfc * inv * sigma * inv / (static_cast<double>(n) * static_cast<double>(t));
  return 0.5 * (cov + cov.transpose());
}

namespace {

double checked_dfc(double nt, double denom_n, double denom_t) {
  if (!(denom_n > 0.0) || !(denom_t > 0.0)) {
    throw Error(ErrorCode::Degenerate, "degrees-of-freedom correction has a non-positive denominator");
  }
  return nt / (denom_n * denom_t);
}

}  // namespace

double dfc_factor(Index n, Index t, double r1) {
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  return checked_dfc(nd * td, nd - r1, td - r1);
}

double dfc_nonparam(Index n, Index t, double tr1, double tr2) {
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  return checked_dfc(nd * td, nd - tr1, td - tr2);
}

double dfc_conservative(Index n, Index t, double tr1, double tr2) {
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  return checked_dfc(nd * td, nd - std::min(1.5 * tr1, nd / 2.0), td - std::min(1.5 * tr2, td / 2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw Error(ErrorCode::BadValue, "quantile level must lie in (0, 1)");
  }
  // Acklam's rational approximation, then Newton steps on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    x -= (cdf - p) / pdf;
  }
  return x;
}

std::vector<Interval> confidence_interval(const Vector& beta, const Vector& se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::BadValue, "confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(beta.size()));
  for (Index k = 0; k < beta.size(); ++k) out.push_back({beta(k) - z * se(k), beta(k) + z * se(k)});
  return out;
}

}  // namespace twoway
