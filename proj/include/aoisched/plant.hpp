#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aoisched/linalg.hpp"

namespace aoisched {

/// One LTI plant x(t+1) = A x(t) + w(t), y(t) = C x(t) + v(t), w ~ N(0,Q), v ~ N(0,R),
/// observed by a smart sensor whose packets reach the estimator with probability p.
struct PlantModel {
  Matrix A;
  Matrix C;
  Matrix Q;
  Matrix R;
  double p = 1.0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(C.rows()); }
};

/// Checks every PlantModel invariant (shapes, symmetry and definiteness of Q and R,
/// observability, controllability of (A, sqrt(Q)), rho(A) > 1, p in (0,1]).
/// Throws DimensionError / DomainError / AssumptionError.
void validate_plant(const PlantModel& plant);

/// Converged local Kalman filter.
struct SteadyStateFilter {
  Matrix posterior;  // P(t|t) at the fixed point
  Matrix prior;      // P(t|t-1)
  Matrix gain;       // K
};

inline constexpr double kRiccatiTol = 1e-10;
inline constexpr std::size_t kRiccatiMaxIters = 100000;

/// One predict/update step of the covariance recursion, symmetrized.
SteadyStateFilter riccati_step(const PlantModel& plant, const Matrix& posterior);

/// Fixed-point iteration of riccati_step from P(0|0) = Q until successive posteriors
/// differ by less than `tol` in max-abs norm. Throws ConvergenceError.
SteadyStateFilter steady_state_filter(const PlantModel& plant, double tol = kRiccatiTol,
                                      std::size_t max_iters = kRiccatiMaxIters);

/// Scale (beta) and growth rate (alpha) of the AoI cost f(delta) = beta * alpha^delta.
struct CharParams {
  double alpha = 0.0;
  double beta = 0.0;
};

/// alpha = rho(A)^2, beta = max{Tr(A Pbar A^T) / alpha, Tr(Q)}. Throws AssumptionError
/// when rho(A) <= 1.
CharParams characteristic_params(const PlantModel& plant, const SteadyStateFilter& ss);

/// Which covariance-from-AoI relation to use.
///  - kRecursion: P(1) = A Pbar A^T, P(d) = A P(d-1) A^T + Q. This is the reset
///    recursion the analysis and the scalar bound are built on.
///  - kPhysical: P(d) = A^d Pbar (A^d)^T + sum_{k=0}^{d-1} A^k Q (A^k)^T. This is the
///    error a trajectory simulation of the one-step-predicting remote estimator
///    actually produces; it exceeds kRecursion by A^{d-1} Q (A^{d-1})^T.
enum class CovarianceConvention { kRecursion, kPhysical };

/// Remote error covariance at AoI `delta` (>= 1). Throws DomainError on delta == 0.
Matrix error_cov_from_aoi(const PlantModel& plant, const SteadyStateFilter& ss, int delta,
                          CovarianceConvention convention = CovarianceConvention::kRecursion);

/// Tr P(d) for d = 1..max_delta, stopping early once the trace exceeds `stop_above`.
std::vector<double> error_trace_table(const PlantModel& plant, const SteadyStateFilter& ss,
                                      int max_delta, CovarianceConvention convention,
                                      double stop_above = 1e300);

/// sum_{k=1}^{delta} beta * alpha^k. Throws DomainError when alpha <= 1 or delta == 0.
double scalar_error_bound(const CharParams& cp, int delta);

struct PlantGenSpec {
  int n = 3;
  int m = 3;
  double rho_min = 1.05;
  double rho_max = 1.3;
  double p_min = 0.7;
  double p_max = 1.0;
  // p is drawn so that rho^2 (1 - p) <= stability_margin < 1.
  double stability_margin = 0.9;
  int max_retries = 1000;
};

/// Throws ConfigError for an invalid spec (empty dims, radius range not inside (1, inf), ...).
void validate_gen_spec(const PlantGenSpec& spec);

/// Random plant satisfying every PlantModel invariant. Deterministic in `seed`.
/// Throws GenerationError when rejection sampling is exhausted.
PlantModel generate_plant(const PlantGenSpec& spec, std::uint64_t seed);

/// `count` plants; plant k uses an independent substream of `seed`.
std::vector<PlantModel> generate_ensemble(const PlantGenSpec& spec, int count, std::uint64_t seed);

}  // namespace aoisched
