#pragma once

#include <span>
#include <vector>

#include "twoway/factor_model.hpp"
#include "twoway/smoothers.hpp"

namespace twoway {

/// Unit-side and period-side smoother for one additive term.
struct SmootherPair {
  SmootherMatrix rows;  // N x N, S^(1)_r
  SmootherMatrix cols;  // T x T, S^(2)_r
};

/// Result of one sequential sweep over the additive terms:
///   z = mean + sum_r fitted[r] + residual   (exactly, up to rounding).
struct BackfitState {
  double mean = 0.0;
  std::vector<Matrix> fitted;  // the per-term fits Z~_r
  Matrix residual;             // Z^_{R2}
};

/// One backfitting sweep. Starting from Z - mean(Z), for r = 1..R2:
///   Z~_r = S1_r Z^ + Z^ S2_r' - S1_r Z^ S2_r',   Z^ <- Z^ - Z~_r.
BackfitState backfit_pass(const Matrix& z, std::span<const SmootherPair> smoothers);

/// One univariate smoother pair per proxy column.
std::vector<SmootherPair> additive_smoothers(const Matrix& lambda, const Matrix& f, double h_lambda, double h_f,
                                             Kernel kernel);

/// Applies backfit_pass to Y and every covariate slice; traces are sum_r tr(S_r).
ResidualizedPanel residualize(const PanelData& data, std::span<const SmootherPair> smoothers);

enum class ProxyInit { FactorModel, MultiIndex, Supplied };

/// Scale of the estimated unit proxies fed to the kernel. Loadings keeps
/// lambda = M f / T (column r carries sigma_r); Unit rescales each column to
/// unit root-mean-square, the same scale as the factors.
enum class ProxyScale { Loadings, Unit };

struct WwOptions {
  Index rank_first_step = 0;   // R1 for the factor-model initialisation
  Index rank_second_step = 4;  // R2 additive terms
  double h_lambda = 0.5;
  double h_f = 0.5;
  Kernel kernel = Kernel::Gaussian;
  int max_outer = 25;
  double tol = 1e-6;
  ProxyInit init = ProxyInit::FactorModel;
  ProxyScale scale = ProxyScale::Unit;
  Matrix supplied_lambda;  // N x R2, used with ProxyInit::Supplied
  Matrix supplied_f;       // T x R2
  AlsOptions als;
};

struct WwResult {
  ResidualizedPanel panel;
  Matrix lambda;  // proxies used for the returned residuals
  Matrix f;
  Vector beta;    // interim pooled OLS on the residuals
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> residual_norms;  // ||Z^_Y||_F per outer pass
};

/// Additive eigenfunction backfitting with outer proxy updates. Each pass
/// builds per-term smoothers from the current proxies, residualises Y and X,
/// takes pooled OLS of the residuals, then replaces the proxies by the leading
/// R2 principal components of Y - X beta. Stops when |beta change|_inf < tol.
WwResult ww_residualize(const PanelData& data, const WwOptions& opts);

/// Single backfit on smoothers built from known effects (alpha: N x d, gamma: T x d).
ResidualizedPanel oracle_ww(const PanelData& data, const Matrix& alpha, const Matrix& gamma, double h,
                            Kernel kernel = Kernel::Gaussian);

}  // namespace twoway
