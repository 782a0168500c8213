#include "twoway/backfitting.hpp"

#include <algorithm>
#include <sstream>

namespace twoway {

BackfitState backfit_pass(const Matrix& z, std::span<const SmootherPair> smoothers) {
  BackfitState state;
  state.mean = z.mean();
  state.residual = z.array() - state.mean;
  state.fitted.reserve(smoothers.size());
  for (const auto& pair : smoothers) {
    if (pair.rows.size() != z.rows() || pair.cols.size() != z.cols()) {
      std::ostringstream os;
      os << "smoother pair " << pair.rows.size() << "/" << pair.cols.size() << " does not fit a " << z.rows()
         << "x" << z.cols() << " panel";
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
    Matrix term = two_way_smooth(state.residual, pair.rows, pair.cols);
    state.residual -= term;
    state.fitted.push_back(std::move(term));
  }
  return state;
}

std::vector<SmootherPair> additive_smoothers(const Matrix& lambda, const Matrix& f, double h_lambda, double h_f,
                                             Kernel kernel) {
  if (lambda.cols() != f.cols()) throw Error(ErrorCode::DimensionMismatch, "proxy column counts differ");
  std::vector<SmootherPair> out;
  out.reserve(static_cast<std::size_t>(lambda.cols()));
  for (Index r = 0; r < lambda.cols(); ++r) {
    out.push_back({nw_weights(lambda.col(r), h_lambda, kernel), nw_weights(f.col(r), h_f, kernel)});
  }
  return out;
}

ResidualizedPanel residualize(const PanelData& data, std::span<const SmootherPair> smoothers) {
  ResidualizedPanel out;
  out.y = backfit_pass(data.y, smoothers).residual;
  out.x.reserve(data.x.size());
  for (const auto& xk : data.x) out.x.push_back(backfit_pass(xk, smoothers).residual);
  for (const auto& pair : smoothers) {
    out.trace_w1 += effective_dof(pair.rows);
    out.trace_w2 += effective_dof(pair.cols);
  }
  return out;
}

namespace {

PrincipalComponents proxies_from_beta(const PanelData& data, const Vector& beta, Index r2, ProxyScale scale) {
  PrincipalComponents pc = principal_components_step(data.y - apply_beta(data.x, beta), r2);
  if (scale == ProxyScale::Unit) {
    const double sqrt_n = std::sqrt(static_cast<double>(pc.lambda.rows()));
    for (Index r = 0; r < pc.lambda.cols(); ++r) {
      const double norm = pc.lambda.col(r).norm();
      if (norm > 0.0) pc.lambda.col(r) *= sqrt_n / norm;
    }
  }
  return pc;
}

}  // namespace

WwResult ww_residualize(const PanelData& data, const WwOptions& opts) {
  const Index r2 = opts.rank_second_step;
  if (r2 < 1) throw Error(ErrorCode::BadValue, "R2 must be at least 1");
  if (r2 > std::min(data.n(), data.t())) throw Error(ErrorCode::RankTooLarge, "R2 exceeds min(N, T)");

  Matrix lambda;
  Matrix f;
  if (opts.init == ProxyInit::Supplied) {
    if (opts.supplied_lambda.rows() != data.n() || opts.supplied_f.rows() != data.t() ||
        opts.supplied_lambda.cols() != opts.supplied_f.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "supplied proxies do not match the panel");
    }
    lambda = opts.supplied_lambda;
    f = opts.supplied_f;
  } else {
    const Index r1 = opts.rank_first_step > 0 ? opts.rank_first_step : default_rank(data.n(), data.t(), RankRole::FirstStep);
    const FactorEstimate fe = estimate_interactive_fe(data, std::min(r1, std::min(data.n(), data.t())), opts.als);
    PrincipalComponents pc = proxies_from_beta(data, fe.beta, r2, opts.scale);
    if (opts.init == ProxyInit::MultiIndex) {
      const Matrix a = selection_index(r2, r2);
      const auto [s1, s2] = multi_index_weights(pc.lambda, pc.f, a, a, opts.h_lambda, opts.h_f, opts.kernel);
      const SmootherPair joint{s1, s2};
      const ResidualizedPanel mi = residualize(data, std::span<const SmootherPair>(&joint, 1));
      pc = proxies_from_beta(data, pooled_ols(mi.y, mi.x), r2, opts.scale);
    }
    lambda = std::move(pc.lambda);
    f = std::move(pc.f);
  }

  WwResult result;
  Vector previous;
  for (int pass = 1; pass <= std::max(1, opts.max_outer); ++pass) {
    const auto smoothers = additive_smoothers(lambda, f, opts.h_lambda, opts.h_f, opts.kernel);
    result.panel = residualize(data, smoothers);
    result.beta = pooled_ols(result.panel.y, result.panel.x);
    result.residual_norms.push_back(result.panel.y.norm());
    result.outer_iterations = pass;
    result.lambda = lambda;
    result.f = f;
    if (pass > 1 && (result.beta - previous).cwiseAbs().maxCoeff() < opts.tol) {
      result.converged = true;
      break;
    }
    if (pass == opts.max_outer) break;
    previous = result.beta;
    PrincipalComponents pc = proxies_from_beta(data, result.beta, r2, opts.scale);
    lambda = std::move(pc.lambda);
    f = std::move(pc.f);
  }
  return result;
}

ResidualizedPanel oracle_ww(const PanelData& data, const Matrix& alpha, const Matrix& gamma, double h, Kernel kernel) {
  if (alpha.rows() != data.n() || gamma.rows() != data.t() || alpha.cols() != gamma.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "true effects do not match the panel");
  }
  const auto smoothers = additive_smoothers(alpha, gamma, h, h, kernel);
  return residualize(data, smoothers);
}

}  // namespace twoway
