#include "twoway/neyman.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twoway {

namespace {

FirstStepFit fit_from_residuals(const PanelData& data, const ResidualizedPanel& resid) {
  FirstStepFit fit;
  fit.gamma_y = data.y - resid.y;
  fit.gamma_x.reserve(data.x.size());
  for (std::size_t k = 0; k < data.x.size(); ++k) fit.gamma_x.push_back(data.x[k] - resid.x[k]);
  fit.trace_w1 = resid.trace_w1;
  fit.trace_w2 = resid.trace_w2;
  return fit;
}

QuadrantFit quadrant_from_residuals(const PanelData& target, const ResidualizedPanel& resid) {
  QuadrantFit fit;
  fit.gamma_y = target.y - resid.y;
  fit.gamma_x.reserve(target.x.size());
  for (std::size_t k = 0; k < target.x.size(); ++k) fit.gamma_x.push_back(target.x[k] - resid.x[k]);
  fit.trace_w1 = resid.trace_w1;
  fit.trace_w2 = resid.trace_w2;
  return fit;
}

// Orthonormal basis for the column space of m.
Matrix range_basis(const Matrix& m) {
  if (m.cols() == 0) return Matrix::Zero(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m.rows(), m.cols())) *
                     (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

// (I - P_lambda) z (I - P_f).
Matrix project_out(const Matrix& z, const Matrix& q_rows, const Matrix& q_cols) {
  Matrix r = z - q_rows * (q_rows.transpose() * z);
  return r - (r * q_cols) * q_cols.transpose();
}

ResidualizedPanel two_sided_projection(const PanelData& data, const Matrix& lambda, const Matrix& f) {
  const Matrix q_rows = range_basis(lambda);
  const Matrix q_cols = range_basis(f);
  ResidualizedPanel out;
  out.y = project_out(data.y, q_rows, q_cols);
  for (const auto& xk : data.x) out.x.push_back(project_out(xk, q_rows, q_cols));
  return out;
}

Index clamp_rank(Index rank, const PanelData& block) { return std::min(rank, std::min(block.n(), block.t())); }

}  // namespace

EstimateResult estimate_beta_no(const PanelData& data, const FirstStepFit& fit, const InferenceOptions& opts) {
  if (fit.gamma_y.rows() != data.n() || fit.gamma_y.cols() != data.t() || fit.gamma_x.size() != data.x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "first-step fit does not match the panel");
  }
  const double nt = static_cast<double>(data.n()) * static_cast<double>(data.t());
  const Matrix u_y = data.y - fit.gamma_y;
  std::vector<Matrix> u_x;
  u_x.reserve(data.x.size());
  for (std::size_t k = 0; k < data.x.size(); ++k) u_x.push_back(data.x[k] - fit.gamma_x[k]);

  EstimateResult res;
  res.n = data.n();
  res.t = data.t();
  res.estimator = fit.method;
  res.converged = fit.converged;
  res.omega = pooled_gram(u_x) / nt;
  res.omega_condition = condition_number(res.omega);
  if (!(res.omega_condition < 1e10)) {
    std::ostringstream os;
    os << "Omega_X has condition number " << res.omega_condition;
    throw Error(ErrorCode::SingularOmega, os.str());
  }
  res.beta = res.omega.ldlt().solve(pooled_cross(u_x, u_y) / nt);

  const std::vector<Matrix> scores = score_matrix(u_y, u_x, res.beta);
  for (const auto& s : scores) res.moment_norm = std::max(res.moment_norm, std::abs(s.mean()));

  res.bartlett_lags = std::min(opts.bartlett_lags.value_or(default_bartlett_lags(data.t())), data.t() - 1);
  const Matrix sigma = sigma_hat(scores, res.bartlett_lags);

  res.dfc_mode = opts.dfc_mode.value_or(fit.default_dfc);
  switch (res.dfc_mode) {
    case DfcMode::Factor: res.dfc = dfc_factor(data.n(), data.t(), fit.factor_rank); break;
    case DfcMode::Nonparam: res.dfc = dfc_nonparam(data.n(), data.t(), fit.trace_w1, fit.trace_w2); break;
    case DfcMode::Conservative: res.dfc = dfc_conservative(data.n(), data.t(), fit.trace_w1, fit.trace_w2); break;
    case DfcMode::None: res.dfc = 1.0; break;
  }
  res.cov = sandwich(res.omega, sigma, data.n(), data.t(), res.dfc);
  res.se = res.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return res;
}

// ---- Cross-fitting ------------------------------------------------------------

QuadrantInputs::QuadrantInputs(const PanelData& data, const SplitPartition& split, int quadrant, Cache& cache)
    : data_(data), split_(split), quadrant_(quadrant), cache_(cache) {
  target_data_ = sub_panel(data, target());
}

const PanelData& QuadrantInputs::block(int id) const {
  if (id < 0 || id > 3) throw Error(ErrorCode::BadValue, "quadrant id must lie in [0, 3]");
  if (id == quadrant_) {
    throw Error(ErrorCode::BadValue, "a quadrant's first step may not train on the quadrant itself");
  }
  accessed_.insert(id);
  auto& slot = blocks_[static_cast<std::size_t>(id)];
  if (!slot) slot = sub_panel(data_, split_.quadrants[static_cast<std::size_t>(id)]);
  return *slot;
}

const PanelData& QuadrantInputs::column_half() const {
  if (!column_half_) {
    const Block& other = split_.quadrants[static_cast<std::size_t>(SplitPartition::row_partner(quadrant_))];
    accessed_.insert(SplitPartition::row_partner(quadrant_));
    accessed_.insert(SplitPartition::diagonal(quadrant_));
    column_half_ = sub_panel(data_, Block{0, data_.n(), other.col0, other.cols});
  }
  return *column_half_;
}

const PanelData& QuadrantInputs::row_half() const {
  if (!row_half_) {
    const Block& other = split_.quadrants[static_cast<std::size_t>(SplitPartition::col_partner(quadrant_))];
    accessed_.insert(SplitPartition::col_partner(quadrant_));
    accessed_.insert(SplitPartition::diagonal(quadrant_));
    row_half_ = sub_panel(data_, Block{other.row0, other.rows, 0, data_.t()});
  }
  return *row_half_;
}

FirstStepFit cross_fit(const PanelData& data, const SplitPartition& split, const FirstStep& strategy) {
  if (split.n != data.n() || split.t != data.t()) {
    throw Error(ErrorCode::DimensionMismatch, "split partition does not match the panel");
  }
  FirstStepFit fit;
  fit.method = strategy.name();
  fit.default_dfc = strategy.default_dfc();
  fit.gamma_y = Matrix::Zero(data.n(), data.t());
  fit.gamma_x.assign(data.x.size(), Matrix::Zero(data.n(), data.t()));
  fit.provenance = Eigen::MatrixXi::Constant(data.n(), data.t(), -1);

  QuadrantInputs::Cache cache;
  for (int q = 0; q < 4; ++q) {
    const Block& b = split.quadrants[static_cast<std::size_t>(q)];
    QuadrantInputs inputs(data, split, q, cache);
    QuadrantFit qf = strategy.fit_quadrant(inputs);
    if (qf.gamma_y.rows() != b.rows || qf.gamma_y.cols() != b.cols || qf.gamma_x.size() != data.x.size()) {
      throw Error(ErrorCode::DimensionMismatch, "quadrant prediction has the wrong shape");
    }
    fit.gamma_y.block(b.row0, b.col0, b.rows, b.cols) = qf.gamma_y;
    for (std::size_t k = 0; k < data.x.size(); ++k) fit.gamma_x[k].block(b.row0, b.col0, b.rows, b.cols) = qf.gamma_x[k];
    fit.provenance.block(b.row0, b.col0, b.rows, b.cols).setConstant(q);
    fit.training_blocks[static_cast<std::size_t>(q)] = inputs.accessed();
    fit.trace_w1 += 0.5 * qf.trace_w1;
    fit.trace_w2 += 0.5 * qf.trace_w2;
    fit.converged = fit.converged && qf.converged;
  }
  return fit;
}

EstimateResult estimate_beta_no_ss(const PanelData& data, const FirstStep& strategy, const SplitPartition& split,
                                   const InferenceOptions& opts) {
  return estimate_beta_no(data, cross_fit(data, split, strategy), opts);
}

// ---- Strategies ---------------------------------------------------------------

FirstStepFit ZeroFirstStep::fit(const PanelData& data) const {
  FirstStepFit fit;
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.gamma_y = Matrix::Zero(data.n(), data.t());
  fit.gamma_x.assign(data.x.size(), Matrix::Zero(data.n(), data.t()));
  return fit;
}

QuadrantFit ZeroFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  const auto& target = in.target_data();
  QuadrantFit fit;
  fit.gamma_y = Matrix::Zero(target.n(), target.t());
  fit.gamma_x.assign(target.x.size(), Matrix::Zero(target.n(), target.t()));
  return fit;
}

FixedFirstStep::FixedFirstStep(Matrix gamma_y, std::vector<Matrix> gamma_x)
    : gamma_y_(std::move(gamma_y)), gamma_x_(std::move(gamma_x)) {}

FirstStepFit FixedFirstStep::fit(const PanelData& data) const {
  if (gamma_y_.rows() != data.n() || gamma_y_.cols() != data.t()) {
    throw Error(ErrorCode::DimensionMismatch, "fixed predictions do not match the panel");
  }
  FirstStepFit fit;
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.gamma_y = gamma_y_;
  fit.gamma_x = gamma_x_;
  return fit;
}

QuadrantFit FixedFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  const Block& b = in.target();
  QuadrantFit fit;
  fit.gamma_y = gamma_y_.block(b.row0, b.col0, b.rows, b.cols);
  for (const auto& g : gamma_x_) fit.gamma_x.emplace_back(g.block(b.row0, b.col0, b.rows, b.cols));
  return fit;
}

FirstStepFit FactorFirstStep::fit(const PanelData& data) const {
  const FactorEstimate fe = estimate_interactive_fe(data, clamp_rank(rank_, data), als_);
  FirstStepFit fit = fit_from_residuals(data, two_sided_projection(data, fe.lambda, fe.f));
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.factor_rank = static_cast<double>(fe.rank);
  fit.converged = fe.converged;
  return fit;
}

QuadrantFit FactorFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  const std::function<FactorEstimate(const PanelData&)> make = [this](const PanelData& block) {
    return estimate_interactive_fe(block, clamp_rank(rank_, block), als_);
  };
  const Block& b = in.target();
  const FactorEstimate& rows = in.cached_column_half<FactorEstimate>(make);
  const FactorEstimate& cols = in.cached_row_half<FactorEstimate>(make);
  QuadrantFit fit = quadrant_from_residuals(
      in.target_data(),
      two_sided_projection(in.target_data(), rows.lambda.middleRows(b.row0, b.rows), cols.f.middleRows(b.col0, b.cols)));
  fit.converged = rows.converged && cols.converged;
  return fit;
}

FirstStepFit DoubleFactorFirstStep::fit(const PanelData& data) const {
  const Index rank = clamp_rank(rank_, data);
  FirstStepFit fit;
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.factor_rank = static_cast<double>(rank);
  const auto low_rank = [rank](const Matrix& m) {
    const PrincipalComponents pc = principal_components_step(m, rank);
    return Matrix(pc.lambda * pc.f.transpose());
  };
  fit.gamma_y = low_rank(data.y);
  for (const auto& xk : data.x) fit.gamma_x.push_back(low_rank(xk));
  return fit;
}

QuadrantFit DoubleFactorFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  // Loadings from the row block and factors from the column block of each
  // variable; the target block is projected on both.
  const PanelData& row_block = in.row_block();
  const PanelData& col_block = in.col_block();
  const PanelData& target = in.target_data();
  const Index rank = std::min(clamp_rank(rank_, row_block), clamp_rank(rank_, col_block));
  const auto predict = [rank](const Matrix& rows_src, const Matrix& cols_src, const Matrix& z) {
    const Matrix q_rows = range_basis(principal_components_step(rows_src, rank).lambda);
    const Matrix q_cols = range_basis(principal_components_step(cols_src, rank).f);
    return Matrix(z - project_out(z, q_rows, q_cols));
  };
  QuadrantFit fit;
  fit.gamma_y = predict(row_block.y, col_block.y, target.y);
  for (std::size_t k = 0; k < target.x.size(); ++k) fit.gamma_x.push_back(predict(row_block.x[k], col_block.x[k], target.x[k]));
  return fit;
}

OracleFirstStep::OracleFirstStep(Matrix alpha, Matrix gamma, double h, Kernel kernel)
    : alpha_(std::move(alpha)), gamma_(std::move(gamma)), h_(h), kernel_(kernel) {}

FirstStepFit OracleFirstStep::fit(const PanelData& data) const {
  FirstStepFit fit = fit_from_residuals(data, oracle_ww(data, alpha_, gamma_, h_, kernel_));
  fit.method = name();
  fit.default_dfc = default_dfc();
  return fit;
}

QuadrantFit OracleFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  const Block& b = in.target();
  const Matrix alpha = alpha_.middleRows(b.row0, b.rows);
  const Matrix gamma = gamma_.middleRows(b.col0, b.cols);
  return quadrant_from_residuals(in.target_data(), oracle_ww(in.target_data(), alpha, gamma, h_, kernel_));
}

FirstStepFit SmootherFirstStep::fit(const PanelData& data) const {
  const ProxySet proxies = block_proxies(data);
  FirstStepFit fit = fit_from_residuals(data, residualize(data, smoothers(proxies)));
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.converged = proxies.converged;
  return fit;
}

QuadrantFit SmootherFirstStep::fit_quadrant(const QuadrantInputs& in) const {
  const std::function<ProxySet(const PanelData&)> make = [this](const PanelData& block) {
    return block_proxies(block);
  };
  const Block& b = in.target();
  const ProxySet& row_source = in.cached_column_half<ProxySet>(make);
  const ProxySet& col_source = in.cached_row_half<ProxySet>(make);
  ProxySet proxies;
  proxies.source = row_source.source;
  proxies.row_proxies = row_source.row_proxies.middleRows(b.row0, b.rows);
  proxies.col_proxies = col_source.col_proxies.middleRows(b.col0, b.cols);
  QuadrantFit fit = quadrant_from_residuals(in.target_data(), residualize(in.target_data(), smoothers(proxies)));
  fit.converged = row_source.converged && col_source.converged;
  return fit;
}

FirstStepFit WwFirstStep::fit(const PanelData& data) const {
  WwOptions opts = opts_;
  opts.rank_second_step = clamp_rank(opts.rank_second_step, data);
  opts.rank_first_step = clamp_rank(opts.rank_first_step, data);
  const WwResult ww = ww_residualize(data, opts);
  FirstStepFit fit = fit_from_residuals(data, ww.panel);
  fit.method = name();
  fit.default_dfc = default_dfc();
  fit.converged = ww.converged;
  return fit;
}

ProxySet WwFirstStep::block_proxies(const PanelData& block) const {
  WwOptions opts = opts_;
  opts.rank_second_step = clamp_rank(opts.rank_second_step, block);
  opts.rank_first_step = clamp_rank(opts.rank_first_step, block);
  WwResult ww = ww_residualize(block, opts);
  ProxySet set;
  set.source = ProxySource::Eigen;
  set.row_proxies = std::move(ww.lambda);
  set.col_proxies = std::move(ww.f);
  set.converged = ww.converged;
  return set;
}

std::vector<SmootherPair> WwFirstStep::smoothers(const ProxySet& proxies) const {
  return additive_smoothers(proxies.row_proxies, proxies.col_proxies, opts_.h_lambda, opts_.h_f, opts_.kernel);
}

ProxyKernelFirstStep::ProxyKernelFirstStep(ProxySource source, double h, Kernel kernel, Index anchors,
                                           bool standardize)
    : source_(source), h_(h), kernel_(kernel), anchors_(anchors), standardize_(standardize) {
  if (source != ProxySource::Pseudo && source != ProxySource::Moment) {
    throw Error(ErrorCode::BadValue, "proxy kernel first step takes pseudo or moment proxies");
  }
}

ProxySet ProxyKernelFirstStep::block_proxies(const PanelData& block) const {
  return source_ == ProxySource::Pseudo ? pseudo_proxy_set(block, anchors_) : moment_proxy_set(block);
}

std::vector<SmootherPair> ProxyKernelFirstStep::smoothers(const ProxySet& proxies) const {
  if (!standardize_) {
    return {SmootherPair{nw_weights(proxies.row_proxies, h_, kernel_), nw_weights(proxies.col_proxies, h_, kernel_)}};
  }
  return {SmootherPair{nw_weights(standardize_columns(proxies.row_proxies), h_, kernel_),
                       nw_weights(standardize_columns(proxies.col_proxies), h_, kernel_)}};
}

// ---- Dispatch -------------------------------------------------------------------

std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::Oracle: return "oracle";
    case EstimatorId::Factor: return "factor";
    case EstimatorId::DoubleFactor: return "double_factor";
    case EstimatorId::Ww: return "ww";
    case EstimatorId::Pseudo: return "pseudo";
    case EstimatorId::Moment: return "moment";
  }
  return "unknown";
}

EstimatorId parse_estimator(std::string_view name) {
  for (EstimatorId id : {EstimatorId::Oracle, EstimatorId::Factor, EstimatorId::DoubleFactor, EstimatorId::Ww,
                         EstimatorId::Pseudo, EstimatorId::Moment}) {
    if (name == to_string(id)) return id;
  }
  throw Error(ErrorCode::BadValue, "unknown estimator '" + std::string(name) + "'");
}

ResolvedHyperparameters resolve_hyperparameters(const EstimatorConfig& cfg, Index n, Index t) {
  ResolvedHyperparameters hp;
  const bool multidim = cfg.rates == RatePreset::Multidim;
  hp.r1 = cfg.r1.value_or(multidim ? default_rank_multidim(n, t, RankRole::FirstStep)
                                   : default_rank(n, t, RankRole::FirstStep));
  hp.r2 = cfg.r2.value_or(multidim ? default_rank_multidim(n, t, RankRole::SecondStep)
                                   : default_rank(n, t, RankRole::SecondStep));
  hp.h_lambda = cfg.h_lambda.value_or(default_bandwidth(n, t, BandwidthRole::Estimation));
  hp.h_f = cfg.h_f.value_or(default_bandwidth(n, t, BandwidthRole::Estimation));
  hp.h_oracle = cfg.h_oracle.value_or(default_bandwidth(n, t, BandwidthRole::Oracle));
  hp.h_pseudo = cfg.h_pseudo.value_or(default_bandwidth(n, t, BandwidthRole::Pseudo));
  hp.h_moment = cfg.h_moment.value_or(default_bandwidth(n, t, BandwidthRole::Moment));
  hp.bartlett_lags = cfg.bartlett_lags.value_or(default_bartlett_lags(t));
  return hp;
}

EstimateResult run_estimator(EstimatorId id, const PanelData& data, const EffectTruth* truth,
                             const EstimatorConfig& cfg) {
  const ResolvedHyperparameters hp = resolve_hyperparameters(cfg, data.n(), data.t());
  InferenceOptions inf;
  inf.bartlett_lags = hp.bartlett_lags;
  inf.dfc_mode = cfg.dfc_mode;

  const auto split_estimate = [&](const FirstStep& strategy) {
    if (!cfg.sample_split) return estimate_beta_no(data, strategy.fit(data), inf);
    const PanelData even = truncate_to_even(data);
    return estimate_beta_no_ss(even, strategy, make_split_partitions(even.n(), even.t()), inf);
  };

  EstimateResult res;
  switch (id) {
    case EstimatorId::Oracle: {
      if (truth == nullptr) throw Error(ErrorCode::BadValue, "the oracle estimator needs the true effects");
      const OracleFirstStep oracle(truth->alpha, truth->gamma, hp.h_oracle, cfg.kernel);
      res = estimate_beta_no(data, oracle.fit(data), inf);
      break;
    }
    case EstimatorId::Factor:
      res = estimate_beta_no(data, FactorFirstStep(hp.r1, cfg.als).fit(data), inf);
      break;
    case EstimatorId::DoubleFactor:
      res = estimate_beta_no(data, DoubleFactorFirstStep(hp.r1).fit(data), inf);
      break;
    case EstimatorId::Ww: {
      WwOptions opts;
      opts.rank_first_step = hp.r1;
      opts.rank_second_step = hp.r2;
      opts.h_lambda = hp.h_lambda;
      opts.h_f = hp.h_f;
      opts.kernel = cfg.kernel;
      opts.max_outer = cfg.max_outer;
      opts.tol = cfg.outer_tol;
      opts.init = cfg.ww_init;
      opts.scale = cfg.ww_scale;
      opts.als = cfg.als;
      res = split_estimate(WwFirstStep(std::move(opts)));
      break;
    }
    case EstimatorId::Pseudo:
      res = split_estimate(ProxyKernelFirstStep(ProxySource::Pseudo, hp.h_pseudo, cfg.kernel, cfg.pseudo_anchors,
                                                cfg.standardize_proxies));
      break;
    case EstimatorId::Moment:
      res = split_estimate(ProxyKernelFirstStep(ProxySource::Moment, hp.h_moment, cfg.kernel, 2, cfg.standardize_proxies));
      break;
  }
  res.estimator = std::string(to_string(id));
  return res;
}

}  // namespace twoway
