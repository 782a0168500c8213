#include "twoway/proxies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace twoway {

namespace {

// dist(i,j) = max_{k != i,j} |G(k,i) - G(k,j)| / scale, with G the Gram of
// the vectors being compared.
Matrix max_inner_distance(const Matrix& gram, double scale) {
  const Index n = gram.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      double best = 0.0;
      for (Index k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        best = std::max(best, std::abs(gram(k, i) - gram(k, j)));
      }
      d(i, j) = best / scale;
      d(j, i) = d(i, j);
    }
  }
  return d;
}

double medoid_cost(const Matrix& dist, const std::vector<Index>& centres) {
  double cost = 0.0;
  for (Index i = 0; i < dist.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index c : centres) nearest = std::min(nearest, dist(i, c));
    cost += nearest;
  }
  return cost;
}

}  // namespace

PseudoDistances zhang_pseudo_distance(const Matrix& m) {
  if (m.rows() < 3 || m.cols() < 3) {
    std::ostringstream os;
    os << "pseudo-distances need N, T >= 3 (got " << m.rows() << "x" << m.cols() << ")";
    throw Error(ErrorCode::TooSmall, os.str());
  }
  const Matrix row_gram = m * m.transpose();
  const Matrix col_gram = m.transpose() * m;
  return {max_inner_distance(row_gram, static_cast<double>(m.cols())),
          max_inner_distance(col_gram, static_cast<double>(m.rows()))};
}

std::vector<Index> medoids(const Matrix& dist, Index m) {
  const Index n = dist.rows();
  if (m < 1 || m > n) throw Error(ErrorCode::BadValue, "medoid count must lie in [1, n]");
  std::vector<Index> best;
  double best_cost = std::numeric_limits<double>::infinity();
  if (m == 1) {
    for (Index a = 0; a < n; ++a) {
      const double cost = dist.col(a).sum();
      if (cost < best_cost) {
        best_cost = cost;
        best = {a};
      }
    }
    return best;
  }
  if (m == 2) {
    for (Index a = 0; a < n; ++a) {
      for (Index b = a + 1; b < n; ++b) {
        const double cost = dist.col(a).cwiseMin(dist.col(b)).sum();
        if (cost < best_cost) {
          best_cost = cost;
          best = {a, b};
        }
      }
    }
    return best;
  }
  // Greedy build: add the point that lowers the total cost most.
  best = medoids(dist, 2);
  while (static_cast<Index>(best.size()) < m) {
    Index pick = -1;
    double pick_cost = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < n; ++c) {
      if (std::find(best.begin(), best.end(), c) != best.end()) continue;
      auto trial = best;
      trial.push_back(c);
      const double cost = medoid_cost(dist, trial);
      if (cost < pick_cost) {
        pick_cost = cost;
        pick = c;
      }
    }
    best.push_back(pick);
  }
  return best;
}

ProxySet pseudo_proxy_set(const PanelData& data, Index anchors) {
  ProxySet set;
  set.source = ProxySource::Pseudo;
  const Index sources = 1 + data.k();
  set.row_proxies.resize(data.n(), anchors * sources);
  set.col_proxies.resize(data.t(), anchors * sources);
  for (Index s = 0; s < sources; ++s) {
    const Matrix& m = s == 0 ? data.y : data.x[static_cast<std::size_t>(s - 1)];
    const PseudoDistances d = zhang_pseudo_distance(m);
    const auto row_anchor = medoids(d.rows, std::min(anchors, data.n()));
    const auto col_anchor = medoids(d.cols, std::min(anchors, data.t()));
    for (Index a = 0; a < anchors; ++a) {
      set.row_proxies.col(s * anchors + a) = d.rows.col(row_anchor[static_cast<std::size_t>(a)]);
      set.col_proxies.col(s * anchors + a) = d.cols.col(col_anchor[static_cast<std::size_t>(a)]);
    }
  }
  return set;
}

Matrix standardize_columns(const Matrix& m) {
  Matrix out = m.rowwise() - m.colwise().mean();
  for (Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows()));
    if (sd > 0.0) out.col(c) /= sd;
  }
  return out;
}

ProxySet moment_proxy_set(const PanelData& data) {
  ProxySet set;
  set.source = ProxySource::Moment;
  const Index sources = 1 + data.k();
  set.row_proxies.resize(data.n(), sources);
  set.col_proxies.resize(data.t(), sources);
  for (Index s = 0; s < sources; ++s) {
    const Matrix& m = s == 0 ? data.y : data.x[static_cast<std::size_t>(s - 1)];
    set.row_proxies.col(s) = m.rowwise().mean();
    set.col_proxies.col(s) = m.colwise().mean().transpose();
  }
  return set;
}

}  // namespace twoway
