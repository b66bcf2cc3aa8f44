#include "aoisched/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aoisched/errors.hpp"

namespace aoisched {

void require_finite_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw DimensionError(std::string(what) + ": non-finite entry");
}

double spectral_radius(const Matrix& a) {
  require_finite_square(a, "spectral_radius");
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw ConvergenceError("spectral_radius: eigen solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

int numeric_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<int>((s.array() > cut).count());
}

bool is_observable(const Matrix& a, const Matrix& c) {
  const auto n = a.rows();
  Matrix obs(c.rows() * n, n);
  Matrix block = c;
  for (Eigen::Index k = 0; k < n; ++k) {
    obs.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  return numeric_rank(obs) == n;
}

bool is_controllable(const Matrix& a, const Matrix& b) {
  const auto n = a.rows();
  Matrix ctrb(n, b.cols() * n);
  Matrix block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return numeric_rank(ctrb) == n;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace aoisched
