#include "tag/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tag/error.hpp"

namespace tag {

SplineBasis::SplineBasis(double a, double b, int count) : a_(a), b_(b), count_(count) {
  if (count < 4) throw invalid_argument("spline basis needs K >= 4, got " + std::to_string(count));
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw invalid_argument("spline domain requires a < b");
  const int interior = count - 4;
  knots_.reserve(static_cast<std::size_t>(count + 4));
  for (int i = 0; i < 4; ++i) knots_.push_back(a);
  const double h = (b - a) / (interior + 1);
  for (int j = 1; j <= interior; ++j) knots_.push_back(a + j * h);
  for (int i = 0; i < 4; ++i) knots_.push_back(b);
}

int SplineBasis::eval_nonzero(double nu, std::array<double, 4>& values) const {
  const double span_tol = 1e-9 * (b_ - a_);
  if (!(nu >= a_ - span_tol && nu <= b_ + span_tol))
    throw domain_error("wavenumber " + std::to_string(nu) + " outside spline domain [" + std::to_string(a_) +
                       ", " + std::to_string(b_) + "]");
  nu = std::clamp(nu, a_, b_);

  // Knot span s with t[s] <= nu < t[s+1], s in [3, K-1]; nu == b uses the last span.
  int s = count_ - 1;
  if (nu < b_) {
    const auto it = std::upper_bound(knots_.begin() + kDegree, knots_.begin() + count_ + 1, nu);
    s = static_cast<int>(it - knots_.begin()) - 1;
  }

  // Cox-de Boor triangle (Piegl & Tiller, BasisFuns).
  std::array<double, 4> left{}, right{};
  values[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = nu - knots_[s + 1 - j];
    right[j] = knots_[s + j] - nu;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return s - kDegree;
}

std::vector<double> SplineBasis::greville() const {
  std::vector<double> g(static_cast<std::size_t>(count_));
  for (int k = 0; k < count_; ++k) g[k] = (knots_[k + 1] + knots_[k + 2] + knots_[k + 3]) / 3.0;
  return g;
}

SplineBasis make_basis(double a, double b, int count) { return SplineBasis(a, b, count); }

SplineBasis make_basis(const SpectralGrid& grid, int count) { return SplineBasis(grid.front(), grid.back(), count); }

double BandedBasis::dot(std::size_t row, std::span<const double> beta) const {
  const int f = first[row];
  const auto& w = weights[row];
  return w[0] * beta[f] + w[1] * beta[f + 1] + w[2] * beta[f + 2] + w[3] * beta[f + 3];
}

Eigen::MatrixXd BandedBasis::dense() const {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), count);
  for (std::size_t i = 0; i < rows(); ++i)
    for (int j = 0; j < 4; ++j) phi(static_cast<Eigen::Index>(i), first[i] + j) = weights[i][j];
  return phi;
}

BandedBasis eval_basis_banded(const SplineBasis& basis, const SpectralGrid& grid) {
  BandedBasis out;
  out.count = basis.size();
  out.first.resize(grid.size());
  out.weights.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.first[i] = basis.eval_nonzero(grid[i], out.weights[i]);
  return out;
}

Eigen::MatrixXd eval_basis_matrix(const SplineBasis& basis, const SpectralGrid& grid) {
  return eval_basis_banded(basis, grid).dense();
}

Eigen::MatrixXd second_difference_operator(int count) {
  if (count < 3) throw invalid_argument("second-difference operator needs K >= 3");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(count - 2, count);
  for (int j = 0; j < count - 2; ++j) {
    d(j, j) = 1.0;
    d(j, j + 1) = -2.0;
    d(j, j + 2) = 1.0;
  }
  return d;
}

double second_difference_norm2(std::span<const double> beta) {
  double sum = 0.0;
  for (std::size_t j = 0; j + 2 < beta.size(); ++j) {
    const double v = beta[j] - 2.0 * beta[j + 1] + beta[j + 2];
    sum += v * v;
  }
  return sum;
}

double eval_spline(const SplineBasis& basis, std::span<const double> beta, double nu) {
  if (beta.size() != static_cast<std::size_t>(basis.size()))
    throw invalid_argument("coefficient count does not match basis size");
  std::array<double, 4> w{};
  const int f = basis.eval_nonzero(nu, w);
  return w[0] * beta[f] + w[1] * beta[f + 1] + w[2] * beta[f + 2] + w[3] * beta[f + 3];
}

std::vector<double> eval_spline(const BandedBasis& phi, std::span<const double> beta) {
  if (beta.size() != static_cast<std::size_t>(phi.count))
    throw invalid_argument("coefficient count does not match basis size");
  std::vector<double> e(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) e[i] = phi.dot(i, beta);
  return e;
}

}  // namespace tag
