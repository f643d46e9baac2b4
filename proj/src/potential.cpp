#include "spherekit/potential.hpp"

#include <algorithm>
#include <cmath>

#include "spherekit/error.hpp"

namespace spherekit {

EdgeQuotients edge_quotients(const Space& space) {
  EdgeQuotients q;
  q.mass.reserve(space.edges().size());
  q.length.reserve(space.edges().size());
  for (const auto& e : space.edges()) {
    q.mass.push_back(std::sqrt(space.mass(e.u) * space.mass(e.v)));
    q.length.push_back(e.length);
  }
  return q;
}

EdgeQuotients edge_quotients(const SphericalizedSpace& sph, EnergyGeometry geometry) {
  if (geometry == EnergyGeometry::Base) return edge_quotients(sph.base());
  EdgeQuotients q;
  const auto& edges = sph.base().edges();
  q.mass.reserve(edges.size());
  q.length.reserve(edges.size());
  const auto t = sph.t();
  for (const auto& e : edges) {
    q.mass.push_back(std::sqrt(sph.hat_mass(e.u) * sph.hat_mass(e.v)));
    q.length.push_back(e.length * (t[e.u] * t[e.v]));
  }
  return q;
}

EdgeGradientField edge_gradient(const Space& space, const FunctionField& u) {
  if (u.values.size() != space.size()) throw InvalidArgument("edge_gradient: field must have one value per point");
  EdgeGradientField g;
  g.values.reserve(space.edges().size());
  for (const auto& e : space.edges()) {
    const double a = u.values[e.u], b = u.values[e.v];
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("edge_gradient: missing value");
    g.values.push_back(std::abs(a - b) / e.length);
  }
  return g;
}

namespace {

double energy_impl(double p, const Space& space, const EdgeQuotients& q, const FunctionField& u,
                   const PointSet& domain) {
  if (!(p >= 1.0)) throw InvalidArgument("p_energy: p must be >= 1");
  if (domain.empty()) throw InvalidArgument("p_energy: empty domain");
  if (domain.universe() < space.size()) throw InvalidArgument("p_energy: domain universe too small");
  if (u.values.size() != space.size()) throw InvalidArgument("p_energy: field must have one value per point");
  double total = 0.0;
  const auto& edges = space.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (!domain.contains(e.u) || !domain.contains(e.v)) continue;
    const double a = u.values[e.u], b = u.values[e.v];
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("p_energy: missing value");
    const double g = std::abs(a - b) / q.length[k];
    total += q.mass[k] * (p == 2.0 ? g * g : std::pow(g, p));
  }
  return total;
}

}  // namespace

double p_energy(const EnergyForm& form, const Space& space, const FunctionField& u, const PointSet& domain) {
  if (form.geometry != EnergyGeometry::Base)
    throw InvalidArgument("p_energy: the spherical geometry needs a sphericalized space");
  return energy_impl(form.p, space, edge_quotients(space), u, domain);
}

double p_energy(const EnergyForm& form, const SphericalizedSpace& sph, const FunctionField& u,
                const PointSet& domain) {
  return energy_impl(form.p, sph.base(), edge_quotients(sph, form.geometry), u, domain);
}

PointSet outer_boundary(const Space& space, const PointSet& domain) {
  PointSet b(space.size());
  for (Index i : domain.members()) {
    if (i >= space.size()) continue;
    for (const auto& nb : space.neighbors(i))
      if (!domain.contains(nb.vertex)) b.insert(nb.vertex);
  }
  return b;
}

namespace {

double capacity_impl(double p, const Space& space, const EdgeQuotients& q, const PointSet& E,
                     const PointSet& Omega, const SolveOptions& options) {
  const std::size_t n = space.size();
  PointSet interior(n);
  bool any_e = false;
  for (Index i : E.members()) {
    if (i >= n) continue;  // ∞ carries no edges
    if (!Omega.contains(i)) throw InvalidArgument("condenser_capacity: E must be a subset of Omega");
    any_e = true;
  }
  if (!any_e) return 0.0;
  for (Index i : Omega.members())
    if (i < n && !E.contains(i)) interior.insert(i);

  FunctionField u{std::vector<double>(n, 0.0), std::nullopt};
  for (Index i : E.members())
    if (i < n) u.values[i] = 1.0;
  if (!interior.empty()) {
    auto sol = solve_with_quotients(space, q, p, interior, u, options);
    if (!sol.converged) throw SolverError("condenser_capacity: solver did not converge", sol.residual);
    for (Index i : interior.members()) u.values[i] = std::clamp(sol.u.values[i], 0.0, 1.0);
  }
  return energy_impl(p, space, q, u, PointSet::all(n));
}

}  // namespace

double condenser_capacity(const EnergyForm& form, const Space& space, const PointSet& E, const PointSet& Omega,
                          const SolveOptions& options) {
  if (form.geometry != EnergyGeometry::Base)
    throw InvalidArgument("condenser_capacity: the spherical geometry needs a sphericalized space");
  return capacity_impl(form.p, space, edge_quotients(space), E, Omega, options);
}

double condenser_capacity(const EnergyForm& form, const SphericalizedSpace& sph, const PointSet& E,
                          const PointSet& Omega, const SolveOptions& options) {
  return capacity_impl(form.p, sph.base(), edge_quotients(sph, form.geometry), E, Omega, options);
}

}  // namespace spherekit
