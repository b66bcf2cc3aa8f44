#pragma once

#include <Eigen/Dense>

namespace aoisched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws DimensionError unless `m` is square with finite entries.
void require_finite_square(const Matrix& m, const char* what);

/// max |lambda| over the eigenvalues of a square matrix.
double spectral_radius(const Matrix& a);

/// Number of singular values above rel_tol * sigma_max.
int numeric_rank(const Matrix& m, double rel_tol = 1e-8);

/// [C; CA; ...; CA^{n-1}] has full column rank.
bool is_observable(const Matrix& a, const Matrix& c);

/// [B, AB, ..., A^{n-1}B] has full row rank.
bool is_controllable(const Matrix& a, const Matrix& b);

Matrix symmetrize(const Matrix& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue_sym(const Matrix& m);

/// Principal square root of a symmetric positive semi-definite matrix.
Matrix sqrt_psd(const Matrix& m);

/// Largest absolute entry.
double max_abs(const Matrix& m);

}  // namespace aoisched
