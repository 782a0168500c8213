#pragma once

#include <any>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twoway/backfitting.hpp"
#include "twoway/inference.hpp"
#include "twoway/proxies.hpp"

namespace twoway {

/// First-step predictions Gamma_Y (N x T) and Gamma_X (K slices N x T).
struct FirstStepFit {
  Matrix gamma_y;
  std::vector<Matrix> gamma_x;
  std::string method;
  double trace_w1 = 0.0;
  double trace_w2 = 0.0;
  double factor_rank = 0.0;
  DfcMode default_dfc = DfcMode::None;
  bool converged = true;
  /// Quadrant id that predicted each cell; empty when not cross-fitted.
  Eigen::MatrixXi provenance;
  /// For each predicted quadrant, the quadrant blocks its first step read.
  std::array<std::set<int>, 4> training_blocks;
};

struct EstimateResult {
  Vector beta;
  Matrix cov;
  Vector se;
  Matrix omega;
  double dfc = 1.0;
  DfcMode dfc_mode = DfcMode::None;
  Index bartlett_lags = 0;
  std::string estimator;
  double omega_condition = 0.0;
  double moment_norm = 0.0;  // max_k |mean_it m_k(beta)|
  bool converged = true;
  Index n = 0;
  Index t = 0;
};

struct InferenceOptions {
  std::optional<Index> bartlett_lags;  // default: default_bartlett_lags(T)
  std::optional<DfcMode> dfc_mode;     // default: the first step's own
};

/// beta = Omega^-1 (NT)^-1 sum (X - Gamma_X)(Y - Gamma_Y), with
/// Omega = (NT)^-1 sum (X - Gamma_X)(X - Gamma_X)', plus HAC sandwich covariance.
/// Throws SingularOmega when cond(Omega) >= 1e10.
EstimateResult estimate_beta_no(const PanelData& data, const FirstStepFit& fit, const InferenceOptions& opts = {});

/// What a first step may see when predicting one quadrant: the target block's
/// own data (for linear smoothers only) and the three complementary blocks.
/// Every access to a complementary block is recorded; asking for the target
/// quadrant as a training block throws.
class QuadrantInputs {
 public:
  using Cache = std::map<int, std::any>;

  QuadrantInputs(const PanelData& data, const SplitPartition& split, int quadrant, Cache& cache);

  int quadrant() const { return quadrant_; }
  const Block& target() const { return split_.quadrants[static_cast<std::size_t>(quadrant_)]; }
  const PanelData& target_data() const { return target_data_; }
  const SplitPartition& split() const { return split_; }

  /// Training block by quadrant id.
  const PanelData& block(int id) const;
  /// Same rows as the target, other column half.
  const PanelData& row_block() const { return block(SplitPartition::row_partner(quadrant_)); }
  /// Same columns as the target, other row half.
  const PanelData& col_block() const { return block(SplitPartition::col_partner(quadrant_)); }
  /// All N rows over the other column half (row block + diagonal block).
  /// Row indices are global; column j is the j-th period of that half.
  const PanelData& column_half() const;
  /// The other row half over all T columns (column block + diagonal block).
  /// Column indices are global.
  const PanelData& row_half() const;

  /// Memos shared across the quadrants of one cross-fit, keyed by the
  /// training source so that each source is fitted once.
  template <typename T>
  const T& cached(int id, const std::function<T(const PanelData&)>& make) const {
    return memo<T>(id, block(id), make);
  }
  template <typename T>
  const T& cached_column_half(const std::function<T(const PanelData&)>& make) const {
    return memo<T>(4 + (1 - SplitPartition::col_half(quadrant_)), column_half(), make);
  }
  template <typename T>
  const T& cached_row_half(const std::function<T(const PanelData&)>& make) const {
    return memo<T>(6 + (1 - SplitPartition::row_half(quadrant_)), row_half(), make);
  }

  const std::set<int>& accessed() const { return accessed_; }

 private:
  template <typename T>
  const T& memo(int key, const PanelData& source, const std::function<T(const PanelData&)>& make) const {
    auto& slot = cache_[key];
    if (!slot.has_value()) slot = make(source);
    return std::any_cast<const T&>(slot);
  }

  const PanelData& data_;
  const SplitPartition& split_;
  int quadrant_;
  PanelData target_data_;
  mutable std::array<std::optional<PanelData>, 4> blocks_;
  mutable std::optional<PanelData> column_half_;
  mutable std::optional<PanelData> row_half_;
  mutable std::set<int> accessed_;
  Cache& cache_;
};

struct QuadrantFit {
  Matrix gamma_y;
  std::vector<Matrix> gamma_x;
  double trace_w1 = 0.0;
  double trace_w2 = 0.0;
  bool converged = true;
};

/// A first-step estimator of (Gamma_Y, Gamma_X), usable on the full sample or
/// quadrant by quadrant.
class FirstStep {
 public:
  virtual ~FirstStep() = default;
  virtual std::string name() const = 0;
  virtual DfcMode default_dfc() const { return DfcMode::Conservative; }
  virtual FirstStepFit fit(const PanelData& data) const = 0;
  virtual QuadrantFit fit_quadrant(const QuadrantInputs& in) const = 0;
};

/// Predicts every quadrant from its complement and assembles the fit.
/// Quadrants run in id order. Traces are summed over quadrants and halved so
/// they stay on the full-panel scale.
FirstStepFit cross_fit(const PanelData& data, const SplitPartition& split, const FirstStep& strategy);

/// Neyman-orthogonal estimate on cross-fitted first-step predictions.
EstimateResult estimate_beta_no_ss(const PanelData& data, const FirstStep& strategy, const SplitPartition& split,
                                   const InferenceOptions& opts = {});

// ---- First-step strategies --------------------------------------------------

/// Gamma = 0.
class ZeroFirstStep final : public FirstStep {
 public:
  std::string name() const override { return "zero"; }
  DfcMode default_dfc() const override { return DfcMode::None; }
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;
};

/// Fixed, data-independent predictions (e.g. the true conditional means).
class FixedFirstStep final : public FirstStep {
 public:
  FixedFirstStep(Matrix gamma_y, std::vector<Matrix> gamma_x);
  std::string name() const override { return "fixed"; }
  DfcMode default_dfc() const override { return DfcMode::None; }
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;

 private:
  Matrix gamma_y_;
  std::vector<Matrix> gamma_x_;
};

/// Interactive fixed effects, then two-sided projection:
/// Z - Gamma_Z = (I - P_lambda) Z (I - P_f).
class FactorFirstStep final : public FirstStep {
 public:
  FactorFirstStep(Index rank, AlsOptions als = {}) : rank_(rank), als_(als) {}
  std::string name() const override { return "factor"; }
  DfcMode default_dfc() const override { return DfcMode::Factor; }
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;

 private:
  Index rank_;
  AlsOptions als_;
};

/// Separate rank-R principal components of Y and of each covariate.
class DoubleFactorFirstStep final : public FirstStep {
 public:
  explicit DoubleFactorFirstStep(Index rank) : rank_(rank) {}
  std::string name() const override { return "double_factor"; }
  DfcMode default_dfc() const override { return DfcMode::Factor; }
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;

 private:
  Index rank_;
};

/// Backfitting on known effects (simulation only).
class OracleFirstStep final : public FirstStep {
 public:
  OracleFirstStep(Matrix alpha, Matrix gamma, double h, Kernel kernel = Kernel::Gaussian);
  std::string name() const override { return "oracle"; }
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;

 private:
  Matrix alpha_;
  Matrix gamma_;
  double h_;
  Kernel kernel_;
};

/// Linear-smoother first step driven by estimated proxies. In a cross-fit the
/// target quadrant's unit proxies come from the other column half (all rows)
/// and its period proxies from the other row half (all columns); the smoother
/// is then applied to the target block's own data.
class SmootherFirstStep : public FirstStep {
 public:
  FirstStepFit fit(const PanelData& data) const override;
  QuadrantFit fit_quadrant(const QuadrantInputs& in) const override;

 protected:
  /// Unit proxies for the rows and period proxies for the columns of a panel.
  virtual ProxySet block_proxies(const PanelData& block) const = 0;
  virtual std::vector<SmootherPair> smoothers(const ProxySet& proxies) const = 0;
};

/// Additive eigenfunction backfitting (weighted-within).
class WwFirstStep final : public SmootherFirstStep {
 public:
  explicit WwFirstStep(WwOptions opts) : opts_(std::move(opts)) {}
  std::string name() const override { return "ww"; }
  FirstStepFit fit(const PanelData& data) const override;

 protected:
  ProxySet block_proxies(const PanelData& block) const override;
  std::vector<SmootherPair> smoothers(const ProxySet& proxies) const override;

 private:
  WwOptions opts_;
};

/// Two-way kernel regression on pseudo-distance or moment proxies, with one
/// product-kernel smoother per side. With `standardize`, each proxy column is
/// scaled to unit standard deviation before the kernel sees it.
class ProxyKernelFirstStep final : public SmootherFirstStep {
 public:
  ProxyKernelFirstStep(ProxySource source, double h, Kernel kernel = Kernel::Gaussian, Index anchors = 2,
                       bool standardize = true);
  std::string name() const override { return source_ == ProxySource::Pseudo ? "pseudo" : "moment"; }

 protected:
  ProxySet block_proxies(const PanelData& block) const override;
  std::vector<SmootherPair> smoothers(const ProxySet& proxies) const override;

 private:
  ProxySource source_;
  double h_;
  Kernel kernel_;
  Index anchors_;
  bool standardize_;
};

// ---- Estimator dispatch -----------------------------------------------------

enum class EstimatorId { Oracle, Factor, DoubleFactor, Ww, Pseudo, Moment };

std::string_view to_string(EstimatorId id);
EstimatorId parse_estimator(std::string_view name);

/// Known effects for the oracle (rows of alpha follow the panel's unit order).
struct EffectTruth {
  Matrix alpha;  // N x d
  Matrix gamma;  // T x d
};

enum class RatePreset { Main, Multidim };

/// Hyperparameters; unset values resolve to the rate defaults for (N, T).
struct EstimatorConfig {
  RatePreset rates = RatePreset::Main;
  std::optional<Index> r1;
  std::optional<Index> r2;
  std::optional<double> h_lambda;
  std::optional<double> h_f;
  std::optional<double> h_oracle;
  std::optional<double> h_pseudo;
  std::optional<double> h_moment;
  Kernel kernel = Kernel::Gaussian;
  std::optional<DfcMode> dfc_mode;
  std::optional<Index> bartlett_lags;
  bool sample_split = true;
  ProxyInit ww_init = ProxyInit::FactorModel;
  ProxyScale ww_scale = ProxyScale::Unit;
  int max_outer = 25;
  double outer_tol = 1e-6;
  AlsOptions als;
  Index pseudo_anchors = 2;
  bool standardize_proxies = true;
};

struct ResolvedHyperparameters {
  Index r1 = 0;
  Index r2 = 0;
  double h_lambda = 0.0;
  double h_f = 0.0;
  double h_oracle = 0.0;
  double h_pseudo = 0.0;
  double h_moment = 0.0;
  Index bartlett_lags = 0;
};

ResolvedHyperparameters resolve_hyperparameters(const EstimatorConfig& cfg, Index n, Index t);

/// Runs one estimator with its default pipeline: factor, double_factor and
/// oracle on the full sample; ww, pseudo and moment cross-fitted over the
/// quadrant split (unless cfg.sample_split is false). Odd N or T is truncated
/// for cross-fitting. truth is required iff id == Oracle.
EstimateResult run_estimator(EstimatorId id, const PanelData& data, const EffectTruth* truth,
                             const EstimatorConfig& cfg = {});

}  // namespace twoway
