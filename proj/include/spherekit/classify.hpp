#pragma once

#include <string>
#include <vector>

#include "spherekit/potential.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

namespace spherekit {

/// Exponent test shared by the classifier and the capacity probe: the
/// integrand behaves like r^e beyond the truncation; the integral diverges
/// iff e >= -1. `band` is the uncertainty carried by e.
enum class TailVerdict { Divergent, Convergent, Inconclusive };
TailVerdict exponent_test(double e, double band);

struct ParabolicityRow {
  double radius;
  double measure;      // μ(B(a, r))
  double local_slope;  // log2 of the measure ratio to the previous rung (0 on the first)
  double partial_sum;  // Σ_{j<=k} r_j (r_j^{q−2p+1}/μ_j)^{1/(p−1)}
};

struct ParabolicityReport {
  std::string verdict;  // PARABOLIC | HYPERBOLIC | INCONCLUSIVE
  double p = 2.0;
  double q = 4.0;
  double sigma_fit = 0.0;   // least-squares slope of log μ against log r
  double sigma_tail = 0.0;  // extrapolated slope beyond the ladder
  double sigma_band = 0.0;
  double exponent = 0.0;    // (q − 2p + 1 − σ_tail)/(p − 1)
  double exponent_band = 0.0;
  std::vector<ParabolicityRow> rows;
};

/// Uses the open balls B(a, r) for r in `radius_ladder` (strictly increasing,
/// dyadic spacing expected, at least 3 rungs). With q = 2p the test is the
/// plain volume-growth criterion for p-parabolicity.
ParabolicityReport classify_parabolicity(const Space& space, double p, double q,
                                         const std::vector<double>& radius_ladder);

struct CapacityProbeRow {
  double hat_radius;     // ρ_j; E_j = B̂(∞, ρ_j)
  double outer_radius;   // 1/ρ_j − 1
  double capacity;       // cap_p(E_j ∩ X, Ω) in the spherical geometry
  double resistance;     // capacity^{−1/(p−1)}
};

struct CapacityProbeReport {
  std::string verdict;  // VANISHING | POSITIVE | INCONCLUSIVE
  double p = 2.0;
  double q = 4.0;
  double omega_radius = 0.0;  // Ω = B̂(∞, ρ_0) ∩ X
  double exponent = 0.0;      // growth exponent of resistance increments
  double exponent_band = 0.0;
  std::vector<CapacityProbeRow> rows;
};

/// Condensers (B̂(∞, ρ_j), B̂(∞, ρ_0)) for a decreasing ladder ρ_0 > ρ_1 > …
/// in (0,1). The point ∞ carries no edges, so shrinking neighbourhoods of it
/// stand in for {∞}. Resistances grow without bound iff the capacity of {∞}
/// vanishes; the increments are read with the same exponent test as the
/// classifier.
CapacityProbeReport capacity_at_infinity_probe(const SphericalizedSpace& sph, double p,
                                               const std::vector<double>& hat_radius_ladder,
                                               const SolveOptions& options = {});

}  // namespace spherekit
