#pragma once

#include <cstdint>
#include <random>

#include "aoisched/plant.hpp"
#include "aoisched/rng.hpp"

namespace fixtures {

inline aoisched::PlantModel scalar_plant(double a, double c, double q, double r, double p = 1.0) {
  aoisched::PlantModel pm;
  pm.A = aoisched::Matrix::Constant(1, 1, a);
  pm.C = aoisched::Matrix::Constant(1, 1, c);
  pm.Q = aoisched::Matrix::Constant(1, 1, q);
  pm.R = aoisched::Matrix::Constant(1, 1, r);
  pm.p = p;
  return pm;
}

// Symmetric (hence normal) A with a well-conditioned Q; the trace inequalities of the
// characteristic parameters hold exactly for such plants.
inline aoisched::PlantModel normal_plant(std::uint64_t seed, int n = 3) {
  aoisched::Rng rng = aoisched::substream(seed, 99);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  aoisched::Matrix G(n, n), H(n, n), K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      G(i, j) = g(rng);
      H(i, j) = g(rng);
      K(i, j) = g(rng);
    }
  aoisched::PlantModel pm;
  pm.A = 0.5 * (G + G.transpose());
  const double rho = aoisched::spectral_radius(pm.A);
  pm.A *= (1.05 + 0.25 * u(rng)) / rho;
  pm.C = aoisched::Matrix::Identity(n, n) + 0.3 * H;
  pm.Q = aoisched::Matrix::Identity(n, n) + 0.05 * K * K.transpose();
  pm.R = aoisched::Matrix::Identity(n, n);
  pm.p = 0.9;
  return pm;
}

}  // namespace fixtures
