#pragma once

#include <vector>

#include "twoway/panel.hpp"

namespace twoway {

enum class ProxySource { Eigen, Pseudo, Moment, Oracle };

/// Point representations of the unit and period effects fed to the smoothers.
struct ProxySet {
  Matrix row_proxies;  // N x p
  Matrix col_proxies;  // T x q
  ProxySource source = ProxySource::Eigen;
  bool converged = true;  // false when an iterative proxy estimate hit its cap
};

struct PseudoDistances {
  Matrix rows;  // N x N
  Matrix cols;  // T x T
};

/// Pseudo-metrics between rows and between columns of m:
///   rows(i,j) = max_{k != i,j} |<m_k., m_i. - m_j.>| / T
///   cols(s,t) = max_{u != s,t} |<m_.u, m_.s - m_.t>| / N
/// Symmetric, nonnegative, zero diagonal. Throws TooSmall unless N, T >= 3.
PseudoDistances zhang_pseudo_distance(const Matrix& m);

/// Indices of m medoids under a distance matrix, by exhaustive search over
/// m-subsets for m <= 2 (greedy build beyond), ties to the smallest indices.
std::vector<Index> medoids(const Matrix& dist, Index m);

/// Distances to the medoid anchors of Y and of each covariate, stacked:
/// row_proxies is N x (anchors * (1+K)), col_proxies T x (anchors * (1+K)).
ProxySet pseudo_proxy_set(const PanelData& data, Index anchors = 2);

/// Unit means and period means of Y and each covariate:
/// row_proxies N x (1+K), col_proxies T x (1+K).
ProxySet moment_proxy_set(const PanelData& data);

/// Centers each column and scales it to unit standard deviation (divisor n);
/// constant columns are only centered.
Matrix standardize_columns(const Matrix& m);

}  // namespace twoway
