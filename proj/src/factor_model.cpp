#include "twoway/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace twoway {

PrincipalComponents principal_components_step(const Eigen::Ref<const Matrix>& m, Index rank) {
  const Index n = m.rows();
  const Index t = m.cols();
  if (rank < 0 || rank > std::min(n, t)) {
    std::ostringstream os;
    os << "rank " << rank << " exceeds min(N, T) = " << std::min(n, t);
    throw Error(ErrorCode::RankTooLarge, os.str());
  }
  PrincipalComponents pc;
  if (rank == 0) {
    pc.lambda = Matrix::Zero(n, 0);
    pc.f = Matrix::Zero(t, 0);
    return pc;
  }
  Matrix gram = Matrix::Zero(t, t);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  // Eigenvalues ascending; take the trailing block reversed.
  Matrix v = es.eigenvectors().rightCols(rank).rowwise().reverse();
  for (Index r = 0; r < rank; ++r) {
    Index arg = 0;
    v.col(r).cwiseAbs().maxCoeff(&arg);
    if (v(arg, r) < 0.0) v.col(r) = -v.col(r);
  }
  const double td = static_cast<double>(t);
  pc.f = std::sqrt(td) * v;
  pc.lambda = m * pc.f / td;
  return pc;
}

FactorEstimate estimate_interactive_fe(const PanelData& data, Index rank, const AlsOptions& opts) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::BadValue, "ALS tolerance must be positive");
  if (rank < 0 || rank > std::min(data.n(), data.t())) {
    throw Error(ErrorCode::RankTooLarge, "factor rank exceeds min(N, T)");
  }
  FactorEstimate est;
  est.rank = rank;
  est.beta = pooled_ols(data.y, data.x);
  Matrix resid = data.y - apply_beta(data.x, est.beta);
  if (rank == 0) {
    est.lambda = Matrix::Zero(data.n(), 0);
    est.f = Matrix::Zero(data.t(), 0);
    est.gamma_hat = Matrix::Zero(data.n(), data.t());
    est.objective = resid.squaredNorm();
    est.objective_trace.push_back(est.objective);
    est.converged = true;
    return est;
  }

  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    PrincipalComponents pc = principal_components_step(resid, rank);
    Matrix gamma = pc.lambda * pc.f.transpose();
    est.beta = pooled_ols(data.y - gamma, data.x);
    resid = data.y - apply_beta(data.x, est.beta);
    const double objective = (resid - gamma).squaredNorm();

    est.lambda = std::move(pc.lambda);
    est.f = std::move(pc.f);
    est.gamma_hat = std::move(gamma);
    est.objective = objective;
    est.iterations = it;
    est.objective_trace.push_back(objective);
    if (std::abs(previous - objective) / std::max(1.0, objective) < opts.tol) {
      est.converged = true;
      break;
    }
    previous = objective;
  }
  return est;
}

Index select_rank(const SpectrumReport& report, Index r_max) {
  const Vector& sv = report.singular_values;
  if (sv.size() < 2) throw Error(ErrorCode::Empty, "rank selection needs at least two singular values");
  const Index limit = std::clamp<Index>(r_max, 1, sv.size() - 1);
  const double floor = report.noise_floor;
  Index best = 1;
  double best_ratio = -1.0;
  for (Index r = 1; r <= limit; ++r) {
    const double num = std::max(sv(r - 1), floor);
    const double den = std::max(sv(r), floor);
    double ratio = 1.0;
    if (den > 0.0) {
      ratio = num / den;
    } else if (num > 0.0) {
      ratio = std::numeric_limits<double>::infinity();
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = r;
    }
  }
  return best;
}

SpectrumReport spectrum_report(const Eigen::Ref<const Matrix>& m, Index r_max) {
  SpectrumReport report;
  Eigen::BDCSVD<Matrix> svd(m);
  report.singular_values = svd.singularValues();
  const Index count = report.singular_values.size();
  if (count == 0) return report;
  report.noise_floor = std::numeric_limits<double>::epsilon() * report.singular_values(0) *
                       static_cast<double>(std::max(m.rows(), m.cols()));
  const Index limit = std::clamp<Index>(r_max, 0, count - 1);
  report.ratios.resize(limit);
  for (Index r = 0; r < limit; ++r) {
    const double num = std::max(report.singular_values(r), report.noise_floor);
    const double den = std::max(report.singular_values(r + 1), report.noise_floor);
    report.ratios(r) = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  report.suggested_rank = count >= 2 ? select_rank(report, limit) : 0;
  return report;
}

namespace {

Index ceil_rate(double value) {
  // Guard against values like 4.000000000001 produced by pow().
  return static_cast<Index>(std::ceil(value - 1e-9));
}

}  // namespace

Index default_rank(Index n, Index t, RankRole role) {
  if (role == RankRole::SecondStep) return 4;
  return ceil_rate(std::cbrt(static_cast<double>(std::min(n, t))));
}

Index default_rank_multidim(Index n, Index t, RankRole role) {
  const double m = static_cast<double>(std::min(n, t));
  if (role == RankRole::SecondStep) return ceil_rate(2.0 * std::pow(m, 0.2));
  return ceil_rate(2.0 * std::cbrt(m));
}

}  // namespace twoway
