#pragma once

// Hot loops shared by the modules. Each kernel has a serial reference
// implementation and an OpenMP implementation; both produce bitwise identical
// results (reductions use fixed chunking, argmin ties break by index).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spherekit/space.hpp"

namespace spherekit::kernels {

enum class Exec { Serial, Parallel };

/// Process default: Parallel unless SPHEREKIT_SERIAL is set in the environment.
Exec default_exec();

/// Improvements smaller than this relative margin are rounding noise and are
/// ignored, so that identities such as d̂(x,∞) = t_x stay bitwise exact.
inline constexpr double kRelaxShrink = 1.0 - 4.0 * 2.220446049250313e-16;

/// Single-source shortest paths on the complete graph over X ∪ {∞} with hop
/// weights d_a(x,y) = d(x,y)·(t_x·t_y) and d_a(x,∞) = t_x, t = 1/(1+|x|).
/// Index n denotes ∞. Nodes at distance >= bound are left at +inf.
/// `dist` is resized to n+1.
void chain_sssp(Exec exec, const Space& space, std::span<const double> t, Index source, double bound,
                std::vector<double>& dist);

namespace serial {
void chain_sssp(const Space& space, std::span<const double> t, Index source, double bound, std::vector<double>& dist);
}
namespace parallel {
void chain_sssp(const Space& space, std::span<const double> t, Index source, double bound, std::vector<double>& dist);
}

/// Edge list with per-edge weights kappa, plus vertex incidence for gathers.
struct EdgeSystem {
  std::size_t vertices = 0;
  std::vector<std::uint32_t> u, v;
  std::vector<double> kappa;
  std::vector<std::size_t> offsets;        // size vertices+1
  std::vector<std::uint32_t> incident;     // edge ids, grouped by vertex

  void finalize();  // builds the incidence arrays from u, v
  std::size_t edges() const { return u.size(); }
};

/// Σ_e kappa_e ((x_u − x_v)² + δ²)^{p/2}.
double smoothed_energy(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta);
/// Gradient of smoothed_energy with respect to every vertex value.
void smoothed_gradient(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta,
                       std::span<double> grad);
/// Second derivative of each edge term along its increment.
void hessian_weights(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta,
                     std::span<double> h);
/// y_i = Σ_{e∋i} h_e (x_i − x_j).
void laplacian_apply(Exec exec, const EdgeSystem& sys, std::span<const double> h, std::span<const double> x,
                     std::span<double> y);
/// Chunked dot product, identical under both backends.
double dot(Exec exec, std::span<const double> a, std::span<const double> b);

/// Measures of base-space balls for a batch of queries.
void ball_measures(Exec exec, const Space& space, std::span<const BallQuery> queries, std::span<double> out);

}  // namespace spherekit::kernels
