#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tag/spectral.hpp"

namespace tag {

/// Clamped cubic B-spline basis on [a, b] with K coefficients and K-4
/// equispaced interior knots. Knot vector length is K+4.
class SplineBasis {
 public:
  static constexpr int kDegree = 3;

  SplineBasis() = default;
  SplineBasis(double a, double b, int count);

  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  int size() const noexcept { return count_; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  /// Values of the (up to) four nonzero basis functions at nu. Returns the
  /// index of the first one; entries beyond K are never produced.
  int eval_nonzero(double nu, std::array<double, 4>& values) const;

  /// Greville abscissae (knot averages); strictly increasing.
  std::vector<double> greville() const;

 private:
  double a_ = 0.0;
  double b_ = 1.0;
  int count_ = 0;
  std::vector<double> knots_;
};

SplineBasis make_basis(double a, double b, int count);

/// Default domain: [min grid, max grid].
SplineBasis make_basis(const SpectralGrid& grid, int count);

/// Row-compressed basis matrix: row i has four weights starting at column first[i].
struct BandedBasis {
  int count = 0;
  std::vector<int> first;
  std::vector<std::array<double, 4>> weights;

  std::size_t rows() const noexcept { return first.size(); }
  /// Phi(nu_i) * beta.
  double dot(std::size_t row, std::span<const double> beta) const;
  Eigen::MatrixXd dense() const;
};

BandedBasis eval_basis_banded(const SplineBasis& basis, const SpectralGrid& grid);

/// Dense N x K matrix Phi[i,k] = phi_k(nu_i). Throws DomainError if a grid
/// value lies outside [a, b].
Eigen::MatrixXd eval_basis_matrix(const SplineBasis& basis, const SpectralGrid& grid);

/// (K-2) x K second-difference matrix with (1, -2, 1) rows. Requires K >= 3.
Eigen::MatrixXd second_difference_operator(int count);

/// ||D beta||^2 without forming D.
double second_difference_norm2(std::span<const double> beta);

double eval_spline(const SplineBasis& basis, std::span<const double> beta, double nu);

/// e(nu_i) = Phi(nu_i) beta on every grid sample.
std::vector<double> eval_spline(const BandedBasis& phi, std::span<const double> beta);

}  // namespace tag
