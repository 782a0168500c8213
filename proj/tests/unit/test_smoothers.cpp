#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twoway/smoothers.hpp"

using namespace twoway;

namespace {

bool row_stochastic(const SmootherMatrix& s) {
  return s.weights.minCoeff() >= 0.0 && (s.weights.rowwise().sum() - Vector::Ones(s.size())).cwiseAbs().maxCoeff() < 1e-10;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel_eval(0.0, Kernel::Gaussian) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(kernel_eval(2.0, Kernel::Epanechnikov) == 0.0);
  CHECK(kernel_eval(0.0, Kernel::Epanechnikov) == 0.75);
  for (Kernel k : {Kernel::Gaussian, Kernel::Epanechnikov}) {
    const int steps = 160000;
    const double du = 16.0 / steps;
    double area = 0.0;
    for (int s = 0; s <= steps; ++s) {
      const double w = (s == 0 || s == steps) ? 0.5 : 1.0;
      area += w * kernel_eval(-8.0 + s * du, k);
    }
    CHECK(std::abs(area * du - 1.0) < 1e-6);
  }
}

TEST_CASE("kernel names round trip") {
  CHECK(parse_kernel(to_string(Kernel::Epanechnikov)) == Kernel::Epanechnikov);
  CHECK_THROWS_AS(parse_kernel("box"), Error);
}

TEST_CASE("identical points give uniform weights") {
  const SmootherMatrix s = nw_weights(Matrix::Constant(5, 2, 3.0), 0.1);
  CHECK((s.weights - Matrix::Constant(5, 5, 0.2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(effective_dof(s) == doctest::Approx(1.0));
}

TEST_CASE("a huge bandwidth flattens the weights") {
  const Matrix p = oracle::random_matrix(6, 1, 1);
  const double range = p.maxCoeff() - p.minCoeff();
  const SmootherMatrix s = nw_weights(p, 1e9 * range);
  CHECK((s.weights.array() - 1.0 / 6.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("Gaussian weights on {0, 1, 2} with h = 1") {
  Matrix p(3, 1);
  p << 0, 1, 2;
  const SmootherMatrix s = nw_weights(p, 1.0);
  const double k0 = 1.0, k1 = std::exp(-0.5), k2 = std::exp(-2.0);
  CHECK(s.weights(0, 0) == doctest::Approx(k0 / (k0 + k1 + k2)).epsilon(1e-14));
  CHECK(s.weights(0, 1) == doctest::Approx(k1 / (k0 + k1 + k2)).epsilon(1e-14));
  CHECK(s.weights(0, 2) == doctest::Approx(k2 / (k0 + k1 + k2)).epsilon(1e-14));
  CHECK(s.weights(0, 0) == doctest::Approx(0.5741).epsilon(1e-4));
  CHECK(s.weights(0, 1) == doctest::Approx(0.3482).epsilon(1e-4));
  CHECK(s.weights(0, 2) == doctest::Approx(0.0777).epsilon(1e-3));
  CHECK(s.weights(1, 1) == doctest::Approx(k0 / (k0 + 2 * k1)).epsilon(1e-14));
  CHECK(effective_dof(s) == doctest::Approx(1.6001).epsilon(1e-4));
}

TEST_CASE("nw_weights matches a brute-force product kernel") {
  const Matrix p = oracle::random_matrix(6, 2, 2);
  const SmootherMatrix s = nw_weights(p, 0.7);
  CHECK((s.weights - oracle::nw(p, 0.7)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(row_stochastic(s));
}

TEST_CASE("nw_weights rejects a nonpositive bandwidth") {
  CHECK_THROWS_AS(nw_weights(Matrix::Ones(3, 1), 0.0), Error);
  CHECK_THROWS_AS(nw_weights(Matrix::Ones(3, 1), -1.0), Error);
}

TEST_CASE("Epanechnikov rows with no neighbours fall back to self-weight") {
  set_warnings_enabled(false);
  Matrix p(3, 1);
  p << 0, 10, 20;
  const SmootherMatrix s = nw_weights(p, 1.0, Kernel::Epanechnikov);
  set_warnings_enabled(true);
  CHECK(s.weights.isIdentity(0.0));
}

TEST_CASE("two-way kernel regression preserves constants") {
  const Matrix lam = oracle::random_matrix(5, 2, 3);
  const Matrix f = oracle::random_matrix(4, 1, 4);
  const Matrix z = Matrix::Constant(5, 4, -1.75);
  CHECK((two_way_kernel_regression(z, lam, f, 0.8, 0.6) - z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-way kernel regression with identity smoothers returns Z") {
  Matrix lam(4, 1), f(3, 1);
  lam << 0, 1, 2, 3;
  f << 0, 5, 10;
  const Matrix z = oracle::random_matrix(4, 3, 5);
  CHECK((two_way_kernel_regression(z, lam, f, 0.5, 0.5, Kernel::Epanechnikov) - z).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("two-way kernel regression matches the hand-composed triple product") {
  const Matrix lam = oracle::random_matrix(3, 1, 6);
  const Matrix f = oracle::random_matrix(3, 1, 7);
  const Matrix z = oracle::random_matrix(3, 3, 8);
  const Matrix expect = oracle::two_way(z, oracle::nw(lam, 1.0), oracle::nw(f, 1.0));
  CHECK((two_way_kernel_regression(z, lam, f, 1.0, 1.0) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multi-index weights") {
  const Matrix lam = oracle::random_matrix(6, 2, 9);
  const Matrix f = oracle::random_matrix(5, 2, 10);
  SUBCASE("identity index equals direct weights") {
    const auto [s1, s2] = multi_index_weights(lam, f, Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.6, 0.9);
    CHECK((s1.weights - nw_weights(lam, 0.6).weights).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((s2.weights - nw_weights(f, 0.9).weights).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("a single-row index ignores the other columns") {
    const Matrix a = selection_index(1, 2);
    Matrix lam2 = lam;
    lam2.col(1) = oracle::random_matrix(6, 1, 11);
    const auto w1 = multi_index_weights(lam, f, a, a, 0.6, 0.9).first;
    const auto w2 = multi_index_weights(lam2, f, a, a, 0.6, 0.9).first;
    CHECK((w1.weights - w2.weights).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("cancelling index gives uniform weights") {
    Matrix l(4, 2);
    l.col(0) = oracle::random_matrix(4, 1, 12);
    l.col(1) = -l.col(0);
    Matrix a(1, 2);
    a << 1, 1;
    const auto s1 = multi_index_weights(l, f, a, a, 0.5, 0.5).first;
    CHECK((s1.weights.array() - 0.25).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("effective degrees of freedom") {
  SmootherMatrix id;
  id.weights = Matrix::Identity(7, 7);
  CHECK(effective_dof(id) == 7.0);
  SmootherMatrix avg;
  avg.weights = Matrix::Constant(4, 4, 0.25);
  CHECK(effective_dof(avg) == 1.0);
}

TEST_CASE("smoother matrices from random points are row-stochastic") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Matrix p = 3.0 * oracle::random_matrix(15, 1 + seed % 3, 100 + seed);
    CHECK(row_stochastic(nw_weights(p, 0.2 + 0.1 * (seed % 5))));
    CHECK(row_stochastic(nw_weights(p, 0.5 + 0.1 * (seed % 5), Kernel::Epanechnikov)));
  }
}

TEST_CASE("default bandwidths") {
  CHECK(default_bandwidth(100, 100, BandwidthRole::Estimation) == doctest::Approx(0.5));
  CHECK(default_bandwidth(100, 200, BandwidthRole::Oracle) == doctest::Approx(0.1));
  CHECK(default_bandwidth(100, 100, BandwidthRole::Pseudo) == doctest::Approx(std::pow(0.25, 0.25)));
  CHECK(default_bandwidth(40, 100, BandwidthRole::Moment) == doctest::Approx(0.5));
}
