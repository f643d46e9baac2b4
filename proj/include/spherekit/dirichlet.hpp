#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "spherekit/potential.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

namespace spherekit {

/// Ω ⊆ X with data on its extended boundary. When `unbounded` is set, ∞
/// belongs to the boundary and carries data.at_infinity.
struct DirichletProblem {
  const SphericalizedSpace* sph = nullptr;
  PointSet domain;
  FunctionField data;
  double p = 2.0;
  bool unbounded = true;
  /// Points with d̂(x,∞) <= connection_radius are identified with ∞ and take
  /// its value. Zero selects 1/(1 + truncation radius).
  double connection_radius = 0.0;
};

struct PerronResult {
  FunctionField u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double connection_radius = 0.0;
  std::size_t identified_with_infinity = 0;
  /// Re-solve with the connection radius one dyadic step larger: sup over
  /// their common domain of |u − u'|.
  double sensitivity = 0.0;
  double sensitivity_radius = 0.0;
};

/// On a finite model the upper and lower Perron solutions coincide with the
/// unique p-energy minimizer, so this is one solve in the spherical form.
PerronResult perron_solve(const DirichletProblem& problem, const SolveOptions& options = {},
                          bool with_sensitivity = true);

struct InvarianceReport {
  double sup_difference = 0.0;
  double tol = 0.0;
  bool pass = false;
  double base_residual = 0.0;
  double spherical_residual = 0.0;
};

/// Solves the same bounded problem with the base form and with the spherical
/// form at q = 2p, the latter started from a different initial field.
InvarianceReport invariance_under_sphericalization(std::shared_ptr<const Space> space, const PointSet& domain,
                                                   const FunctionField& data, double p, double tol,
                                                   const SolveOptions& options = {});

/// How the removed inner ball is measured: by d(a, x), or by the Euclidean
/// norm of the coordinates.
enum class Obstacle { BaseBall, CoordinateBall };

/// Ω = {x : |x| > inner_radius}.
PointSet exterior_domain(const Space& space, double inner_radius, Obstacle shape = Obstacle::BaseBall);
/// Points of Ω adjacent to X \ Ω.
PointSet first_layer(const Space& space, const PointSet& domain);
/// {ρ <= |x| < ρ + 1} ∩ Ω.
PointSet ring(const Space& space, const PointSet& domain, double rho);

struct BoundaryData {
  std::string name;
  double at_infinity;
  std::function<double(const Space&, Index)> finite;
};

struct RegularityRow {
  double truncation;
  std::size_t member;
  double ring_mean;
  double ring_min;
  double ring_max;
  double residual;
};

struct InfluenceRow {
  double truncation;
  std::size_t member_a;
  std::size_t member_b;
  double sup_difference;  // over the first layer of Ω
};

struct RegularityReport {
  std::string classification;  // REGULAR | LIMIT-EXISTS | SEQUENCE-ATTAINS | UNRESOLVED
  bool limit_independent_of_infinity = false;
  double tolerance = 0.1;
  std::vector<RegularityRow> rows;
  std::vector<InfluenceRow> influence;
  std::vector<double> trend;        // extrapolated ring value per member
  std::vector<double> trend_error;  // |trend − f(∞)| per member
  std::vector<std::string> notes;
};

struct RegularityOptions {
  double inner_radius = 2.0;
  Obstacle obstacle = Obstacle::BaseBall;
  double tolerance = 0.1;
  double influence_tolerance = 0.05;
  SolveOptions solve;
};

/// Solves the exterior problem for every battery member on every truncation
/// and reads the outer ring {ρ <= |x| < ρ + 1}, ρ = max(R/2, inner radius + 1). Ring values are fitted as
/// A + B/R across the ladder.
RegularityReport regularity_probe(const std::vector<std::shared_ptr<const Space>>& ladder, double p, double q,
                                  const std::vector<BoundaryData>& battery, const RegularityOptions& options = {});

/// Least-squares c in 1 − P(x) ≈ c/|x|_2 over Ω.
double fit_inverse_profile(const Space& space, const PointSet& domain, const FunctionField& P);

struct BarrierReport {
  bool pass = false;
  int failed_condition = 0;  // 1 superharmonicity, 2 decay, 3 boundary margin
  Index witness = 0;
  double witness_value = 0.0;
  std::vector<std::pair<double, double>> ring_maxima;  // (ρ, max u on the ring)
  double boundary_min = 0.0;
  double worst_excess = 0.0;  // max of (one-vertex update − u)
};

/// (1) at every vertex of Ω the one-vertex p-harmonic replacement of u does
/// not exceed u + tol; (2) ring maxima at dyadic radii are non-increasing up
/// to tol and the outermost is at most max(tol, half the innermost); (3) u is
/// at least `margin` on the first layer of Ω. Edge weights are those of the
/// spherical form of `sph`.
BarrierReport barrier_check(const SphericalizedSpace& sph, const PointSet& domain, const FunctionField& u, double p,
                            double tol, double margin);

struct PerturbationRow {
  std::size_t set_size;
  double capacity;          // cap_p(E_k, Ω ∪ E_k)
  double sup_difference;    // over Ω
  double core_difference;   // over `core`
};

struct PerturbationReport {
  std::vector<PerturbationRow> rows;
  bool decreasing = false;
  double final_difference = 0.0;
};

/// Solves with f and with f + h·χ_{E_k} for each boundary set E_k (nested,
/// decreasing) and compares.
PerturbationReport resolutive_perturbation_test(const SphericalizedSpace& sph, const PointSet& domain,
                                                const FunctionField& f, double p,
                                                const std::vector<PointSet>& shrinking_sets, double h,
                                                const PointSet& core, const SolveOptions& options = {});

struct RefinementRow {
  int N;
  double capacity;
  double core_difference;
  double sup_difference;
};

/// Discs {|x|_1 < N} in the 2-D grid of half-width N with data x_1/N and a
/// perturbation of size h at the single boundary vertex (N, 0); differences
/// are read on the core {|x|_1 <= N/2}.
std::vector<RefinementRow> refinement_perturbation(const std::vector<int>& Ns, double p, double h,
                                                   const SolveOptions& options = {});

}  // namespace spherekit
