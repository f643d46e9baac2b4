#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spherekit/kernels.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

namespace spherekit {

/// Per-vertex values, indexed like the base space, plus an optional value
/// at ∞.
struct FunctionField {
  std::vector<double> values;
  std::optional<double> at_infinity;

  static FunctionField constant(std::size_t n, double c) { return {std::vector<double>(n, c), c}; }
};

enum class EnergyGeometry { Base, Spherical };

/// Base: lengths d, edge masses sqrt(μ(x)μ(y)).
/// Spherical: lengths len·t_x·t_y (d_a along the edge), edge masses
/// sqrt(μ̂_q(x)μ̂_q(y)). The quotient mass/length^p agrees edge by edge
/// between the two when q = 2p.
struct EnergyForm {
  double p = 2.0;
  EnergyGeometry geometry = EnergyGeometry::Base;
};

struct EdgeQuotients {
  std::vector<double> mass;
  std::vector<double> length;
};

EdgeQuotients edge_quotients(const Space& space);
EdgeQuotients edge_quotients(const SphericalizedSpace& sph, EnergyGeometry geometry);

/// g_e = |u(x) − u(y)| / len(x,y).
EdgeGradientField edge_gradient(const Space& space, const FunctionField& u);

/// Σ over edges with both endpoints in `domain` of mass_e·(|Δu|/length_e)^p.
double p_energy(const EnergyForm& form, const Space& space, const FunctionField& u, const PointSet& domain);
double p_energy(const EnergyForm& form, const SphericalizedSpace& sph, const FunctionField& u,
                const PointSet& domain);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  /// Starting values on the domain (full-length field); harmonic extension
  /// of the boundary data when absent.
  const std::vector<double>* initial = nullptr;
  kernels::Exec exec = kernels::default_exec();
};

struct SolveResult {
  FunctionField u;
  double residual = 0.0;
  int iterations = 0;
  std::size_t cg_iterations = 0;
  bool converged = false;
};

/// The smoothed Dirichlet functional of one solve, exposed for diagnostics.
/// Unknowns are the domain points; fixed vertices are the boundary
/// neighbours carrying data.
class DirichletEnergy {
 public:
  DirichletEnergy(const Space& space, const EdgeQuotients& quotients, double p, const PointSet& domain,
                  const FunctionField& boundary);

  std::size_t vertices() const { return local_to_global_.size(); }
  std::size_t unknowns() const { return unknowns_; }
  double delta() const { return delta_; }
  double data_range() const { return range_; }
  double p() const { return p_; }
  const kernels::EdgeSystem& system() const { return sys_; }
  /// Local vertex order: unknowns first, then fixed vertices.
  const std::vector<Index>& local_to_global() const { return local_to_global_; }

  /// Local vector from a full field (boundary entries copied from the data).
  std::vector<double> local(const std::vector<double>& field) const;
  /// Full field with the local values written in.
  FunctionField expand(std::span<const double> x) const;

  double energy(kernels::Exec exec, std::span<const double> x) const;
  /// Gradient with respect to all local vertices.
  void gradient(kernels::Exec exec, std::span<const double> x, std::span<double> g) const;
  /// Max over unknowns of |∂E/∂u_i| / (p·Σ_e kappa_e·range^{p−1}).
  double residual(std::span<const double> g) const;

 private:
  const Space& space_;
  double p_;
  std::size_t unknowns_ = 0;
  double range_ = 0.0;
  double delta_ = 0.0;
  std::vector<Index> local_to_global_;
  std::vector<double> fixed_values_;
  std::vector<double> scale_;
  kernels::EdgeSystem sys_;
  FunctionField template_;
};

/// Minimizer of the p-energy over fields equal to `boundary` off `domain`.
/// Newton iterations on the smoothed energy, each solved by Jacobi-
/// preconditioned CG, with backtracking line search.
SolveResult solve_p_harmonic(const EnergyForm& form, const Space& space, const PointSet& domain,
                             const FunctionField& boundary, const SolveOptions& options = {});
SolveResult solve_p_harmonic(const EnergyForm& form, const SphericalizedSpace& sph, const PointSet& domain,
                             const FunctionField& boundary, const SolveOptions& options = {});
SolveResult solve_with_quotients(const Space& space, const EdgeQuotients& quotients, double p,
                                 const PointSet& domain, const FunctionField& boundary,
                                 const SolveOptions& options = {});

/// Points outside `domain` adjacent to it.
PointSet outer_boundary(const Space& space, const PointSet& domain);

/// inf of the p-energy over u with u = 1 on E, u = 0 off Omega, 0 <= u <= 1.
double condenser_capacity(const EnergyForm& form, const Space& space, const PointSet& E, const PointSet& Omega,
                          const SolveOptions& options = {});
double condenser_capacity(const EnergyForm& form, const SphericalizedSpace& sph, const PointSet& E,
                          const PointSet& Omega, const SolveOptions& options = {});

}  // namespace spherekit
