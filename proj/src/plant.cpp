#include "aoisched/plant.hpp"

#include <cmath>
#include <string>

#include "aoisched/errors.hpp"
#include "aoisched/rng.hpp"

namespace aoisched {

namespace {

void require_spd(const Matrix& m, const char* what) {
  require_finite_square(m, what);
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m - m.transpose()) > 1e-9 * scale) {
    throw DomainError(std::string(what) + " is not symmetric");
  }
  if (!(min_eigenvalue_sym(m) > 0.0)) {
    throw DomainError(std::string(what) + " is not positive definite");
  }
}

Matrix random_normal(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Matrix random_spd(Rng& rng, int n, double eps) {
  Matrix g = random_normal(rng, n, n);
  return symmetrize(g * g.transpose()) + eps * Matrix::Identity(n, n);
}

}  // namespace

void validate_plant(const PlantModel& plant) {
  require_finite_square(plant.A, "A");
  const auto n = plant.A.rows();
  if (plant.C.cols() != n || plant.C.rows() == 0 || !plant.C.allFinite()) {
    throw DimensionError("C must be m x n with finite entries");
  }
  if (plant.Q.rows() != n) throw DimensionError("Q must be n x n");
  if (plant.R.rows() != plant.C.rows()) throw DimensionError("R must be m x m");
  require_spd(plant.Q, "Q");
  require_spd(plant.R, "R");
  if (!(plant.p > 0.0 && plant.p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  if (!is_observable(plant.A, plant.C)) throw AssumptionError("(A, C) is not observable");
  if (!is_controllable(plant.A, sqrt_psd(plant.Q))) {
    throw AssumptionError("(A, sqrt(Q)) is not controllable");
  }
  if (!(spectral_radius(plant.A) > 1.0)) throw AssumptionError("rho(A) must exceed 1");
}

SteadyStateFilter riccati_step(const PlantModel& plant, const Matrix& posterior) {
  const Matrix& A = plant.A;
  const Matrix& C = plant.C;
  Matrix prior = symmetrize(A * posterior * A.transpose() + plant.Q);
  Matrix innovation = C * prior * C.transpose() + plant.R;
  Matrix gain = prior * C.transpose() * innovation.ldlt().solve(Matrix::Identity(C.rows(), C.rows()));
  Matrix next = symmetrize(prior - gain * C * prior);
  return {std::move(next), std::move(prior), std::move(gain)};
}

SteadyStateFilter steady_state_filter(const PlantModel& plant, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw DomainError("steady_state_filter: tol must be positive");
  Matrix posterior = plant.Q;
  for (std::size_t it = 0; it < max_iters; ++it) {
    SteadyStateFilter step = riccati_step(plant, posterior);
    if (!step.posterior.allFinite()) break;
    const double diff = max_abs(step.posterior - posterior);
    if (diff < tol) return step;
    posterior = std::move(step.posterior);
  }
  throw ConvergenceError("steady_state_filter: Riccati iteration did not converge within " +
                         std::to_string(max_iters) + " iterations");
}

CharParams characteristic_params(const PlantModel& plant, const SteadyStateFilter& ss) {
  const double rho = spectral_radius(plant.A);
  if (!(rho > 1.0)) {
    throw AssumptionError("characteristic_params: rho(A) = " + std::to_string(rho) +
                          " must exceed 1");
  }
  const double alpha = rho * rho;
  const double propagated = (plant.A * ss.posterior * plant.A.transpose()).trace();
  return {alpha, std::max(propagated / alpha, plant.Q.trace())};
}

Matrix error_cov_from_aoi(const PlantModel& plant, const SteadyStateFilter& ss, int delta,
                          CovarianceConvention convention) {
  if (delta < 1) throw DomainError("error_cov_from_aoi: delta must be >= 1");
  const Matrix& A = plant.A;
  Matrix p = A * ss.posterior * A.transpose();
  if (convention == CovarianceConvention::kPhysical) p += plant.Q;
  for (int d = 2; d <= delta; ++d) p = A * p * A.transpose() + plant.Q;
  return p;
}

std::vector<double> error_trace_table(const PlantModel& plant, const SteadyStateFilter& ss,
                                      int max_delta, CovarianceConvention convention,
                                      double stop_above) {
  std::vector<double> out;
  if (max_delta < 1) return out;
  out.reserve(static_cast<std::size_t>(max_delta));
  const Matrix& A = plant.A;
  Matrix p = A * ss.posterior * A.transpose();
  if (convention == CovarianceConvention::kPhysical) p += plant.Q;
  for (int d = 1; d <= max_delta; ++d) {
    if (d > 1) p = A * p * A.transpose() + plant.Q;
    const double tr = p.trace();
    out.push_back(tr);
    if (!(tr <= stop_above)) break;
  }
  return out;
}

double scalar_error_bound(const CharParams& cp, int delta) {
  if (delta < 1) throw DomainError("scalar_error_bound: delta must be >= 1");
  if (!(cp.alpha > 1.0)) throw DomainError("scalar_error_bound: alpha must exceed 1");
  return cp.beta * cp.alpha * (std::pow(cp.alpha, delta) - 1.0) / (cp.alpha - 1.0);
}

void validate_gen_spec(const PlantGenSpec& spec) {
  if (spec.n < 1 || spec.m < 1) throw ConfigError("plant dimensions must be >= 1");
  if (!(spec.rho_min > 1.0) || !(spec.rho_max >= spec.rho_min) || !std::isfinite(spec.rho_max)) {
    throw ConfigError("spectral-radius range must be a finite subset of (1, inf)");
  }
  if (!(spec.p_min > 0.0 && spec.p_max <= 1.0 && spec.p_min <= spec.p_max)) {
    throw ConfigError("p range must be a subset of (0, 1]");
  }
  if (!(spec.stability_margin > 0.0 && spec.stability_margin < 1.0)) {
    throw ConfigError("stability margin must lie in (0, 1)");
  }
  // Even p = p_max must satisfy rho^2 (1 - p) <= margin at the largest radius.
  if (spec.rho_max * spec.rho_max * (1.0 - spec.p_max) > spec.stability_margin) {
    throw ConfigError("p range cannot satisfy the mean-square stability condition");
  }
}

PlantModel generate_plant(const PlantGenSpec& spec, std::uint64_t seed) {
  validate_gen_spec(spec);
  Rng rng = substream(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    PlantModel plant;
    plant.A = random_normal(rng, spec.n, spec.n);
    const double rho = spectral_radius(plant.A);
    const double target = spec.rho_min + (spec.rho_max - spec.rho_min) * unit(rng);
    plant.C = random_normal(rng, spec.m, spec.n);
    plant.Q = random_spd(rng, spec.n, 1e-3);
    plant.R = random_spd(rng, spec.m, 1e-3);
    const double u = unit(rng);
    if (rho < 1e-6) continue;
    plant.A *= target / rho;

    const double rho2 = target * target;
    const double p_lo = std::max(spec.p_min, 1.0 - spec.stability_margin / rho2);
    plant.p = p_lo + (spec.p_max - p_lo) * u;

    if (!is_observable(plant.A, plant.C)) continue;
    if (!is_controllable(plant.A, sqrt_psd(plant.Q))) continue;
    return plant;
  }
  throw GenerationError("generate_plant: no sample passed the rank checks after " +
                        std::to_string(spec.max_retries) + " attempts");
}

std::vector<PlantModel> generate_ensemble(const PlantGenSpec& spec, int count, std::uint64_t seed) {
  std::vector<PlantModel> plants;
  plants.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    const std::uint64_t key = splitmix64(static_cast<std::uint64_t>(k) + 0x2545f4914f6cdd1dULL);
    plants.push_back(generate_plant(spec, splitmix64(seed ^ key)));
  }
  return plants;
}

}  // namespace aoisched
