#include "twoway/panel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace twoway {

namespace {

void check_finite(const Matrix& m, const char* name) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream os;
        os << name << " has a non-finite entry at (" << i + 1 << "," << j + 1 << ")";
        throw Error(ErrorCode::NonFinite, os.str());
      }
    }
  }
}

}  // namespace

PanelData validate_panel(Matrix y, std::vector<Matrix> x) {
  if (y.size() == 0) throw Error(ErrorCode::Empty, "outcome matrix is empty");
  if (x.empty()) throw Error(ErrorCode::Empty, "at least one covariate is required");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].rows() != y.rows() || x[k].cols() != y.cols()) {
      std::ostringstream os;
      os << "covariate " << k + 1 << " is " << x[k].rows() << "x" << x[k].cols()
         << " but Y is " << y.rows() << "x" << y.cols();
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
  }
  check_finite(y, "Y");
  for (const auto& xk : x) check_finite(xk, "X");
  return PanelData{std::move(y), std::move(x)};
}

PanelData truncate_to_even(const PanelData& data) {
  const Index n = data.n() - data.n() % 2;
  const Index t = data.t() - data.t() % 2;
  if (n == data.n() && t == data.t()) return data;
  std::ostringstream os;
  os << "panel " << data.n() << "x" << data.t() << " truncated to " << n << "x" << t
     << " for the quadrant split";
  warn(os.str());
  return sub_panel(data, Block{0, n, 0, t});
}

int SplitPartition::quadrant_of(Index i, Index t_idx) const {
  const int a = i < n / 2 ? 0 : 1;
  const int b = t_idx < t / 2 ? 0 : 1;
  return id(a, b);
}

SplitPartition make_split_partitions(Index n, Index t) {
  if (n < 4 || t < 4) {
    std::ostringstream os;
    os << "quadrant split needs N, T >= 4 (got " << n << "x" << t << ")";
    throw Error(ErrorCode::TooSmall, os.str());
  }
  if (n % 2 != 0 || t % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "quadrant split needs even N and T; call truncate_to_even first");
  }
  SplitPartition split;
  split.n = n;
  split.t = t;
  const Index hn = n / 2;
  const Index ht = t / 2;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      split.quadrants[SplitPartition::id(a, b)] = Block{a * hn, hn, b * ht, ht};
    }
  }
  return split;
}

PanelData sub_panel(const PanelData& data, const Block& block) {
  PanelData out;
  out.y = data.y.block(block.row0, block.col0, block.rows, block.cols);
  out.x.reserve(data.x.size());
  for (const auto& xk : data.x) out.x.emplace_back(xk.block(block.row0, block.col0, block.rows, block.cols));
  return out;
}

Matrix pooled_gram(const std::vector<Matrix>& x) {
  const auto k = static_cast<Index>(x.size());
  Matrix g(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = a; b < k; ++b) {
      g(a, b) = (x[a].array() * x[b].array()).sum();
      g(b, a) = g(a, b);
    }
  }
  return g;
}

Vector pooled_cross(const std::vector<Matrix>& x, const Matrix& z) {
  Vector c(static_cast<Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) c(static_cast<Index>(k)) = (x[k].array() * z.array()).sum();
  return c;
}

Matrix apply_beta(const std::vector<Matrix>& x, const Vector& beta) {
  Matrix out = Matrix::Zero(x.front().rows(), x.front().cols());
  for (std::size_t k = 0; k < x.size(); ++k) out += beta(static_cast<Index>(k)) * x[k];
  return out;
}

double condition_number(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (hi <= 0.0 || lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Vector pooled_ols(const Matrix& z, const std::vector<Matrix>& x) {
  const Matrix gram = pooled_gram(x);
  const double cond = condition_number(gram);
  if (!(cond < 1e10)) {
    std::ostringstream os;
    os << "pooled design is singular (condition number " << cond << ")";
    throw Error(ErrorCode::SingularDesign, os.str());
  }
  return gram.ldlt().solve(pooled_cross(x, z));
}

}  // namespace twoway
