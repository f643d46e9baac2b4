#include <algorithm>
#include <cmath>
#include <limits>

#include "spherekit/error.hpp"
#include "spherekit/potential.hpp"

namespace spherekit {

DirichletEnergy::DirichletEnergy(const Space& space, const EdgeQuotients& quotients, double p,
                                 const PointSet& domain, const FunctionField& boundary)
    : space_(space), p_(p) {
  const std::size_t n = space.size();
  if (!(p > 1.0)) throw InvalidArgument("solver: p must be > 1");
  if (domain.universe() < n) throw InvalidArgument("solver: domain universe too small");
  if (domain.universe() > n && domain.contains(n)) throw InvalidArgument("solver: ∞ cannot be a domain point");
  if (boundary.values.size() != n) throw InvalidArgument("solver: boundary field must have one value per point");
  if (quotients.mass.size() != space.edges().size()) throw InvalidArgument("solver: quotients do not match edges");

  std::vector<Index> unknown;
  for (Index i : domain.members())
    if (i < n) unknown.push_back(i);
  if (unknown.empty()) throw InvalidArgument("solver: empty domain");
  PointSet dom_x(n);
  for (Index i : unknown) dom_x.insert(i);
  const auto fixed = outer_boundary(space, dom_x).members();
  // The graph is connected, so a domain component without boundary would be
  // the whole space.
  if (fixed.empty()) throw InvalidArgument("solver: a domain component has no boundary vertex");

  unknowns_ = unknown.size();
  local_to_global_ = unknown;
  local_to_global_.insert(local_to_global_.end(), fixed.begin(), fixed.end());
  std::vector<std::int64_t> global_to_local(n, -1);
  for (std::size_t k = 0; k < local_to_global_.size(); ++k) global_to_local[local_to_global_[k]] = static_cast<std::int64_t>(k);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  fixed_values_.reserve(fixed.size());
  for (Index i : fixed) {
    const double v = boundary.values[i];
    if (!std::isfinite(v)) throw InvalidArgument("solver: boundary data must be finite at '" + space.id(i) + "'");
    fixed_values_.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  range_ = hi - lo;
  delta_ = 1e-9 * range_;

  sys_.vertices = local_to_global_.size();
  const auto& edges = space.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (!dom_x.contains(e.u) && !dom_x.contains(e.v)) continue;
    sys_.u.push_back(static_cast<std::uint32_t>(global_to_local[e.u]));
    sys_.v.push_back(static_cast<std::uint32_t>(global_to_local[e.v]));
    sys_.kappa.push_back(quotients.mass[k] / std::pow(quotients.length[k], p));
  }
  sys_.finalize();

  scale_.assign(unknowns_, 0.0);
  const double unit = range_ > 0.0 ? std::pow(range_, p - 1.0) : 1.0;
  for (std::size_t e = 0; e < sys_.edges(); ++e) {
    if (sys_.u[e] < unknowns_) scale_[sys_.u[e]] += p * sys_.kappa[e] * unit;
    if (sys_.v[e] < unknowns_) scale_[sys_.v[e]] += p * sys_.kappa[e] * unit;
  }
  template_ = {boundary.values, boundary.at_infinity};
}

std::vector<double> DirichletEnergy::local(const std::vector<double>& field) const {
  std::vector<double> x(vertices());
  for (std::size_t k = 0; k < unknowns_; ++k) x[k] = field.at(local_to_global_[k]);
  for (std::size_t k = unknowns_; k < vertices(); ++k) x[k] = fixed_values_[k - unknowns_];
  return x;
}

FunctionField DirichletEnergy::expand(std::span<const double> x) const {
  FunctionField out = template_;
  for (std::size_t k = 0; k < unknowns_; ++k) out.values[local_to_global_[k]] = x[k];
  return out;
}

double DirichletEnergy::energy(kernels::Exec exec, std::span<const double> x) const {
  return kernels::smoothed_energy(exec, sys_, x, p_, delta_);
}

void DirichletEnergy::gradient(kernels::Exec exec, std::span<const double> x, std::span<double> g) const {
  kernels::smoothed_gradient(exec, sys_, x, p_, delta_, g);
}

double DirichletEnergy::residual(std::span<const double> g) const {
  double r = 0.0;
  for (std::size_t k = 0; k < unknowns_; ++k) r = std::max(r, std::abs(g[k]) / scale_[k]);
  return r;
}

namespace {

// Solves H d = rhs on the unknowns (the leading block); fixed entries of d
// stay zero. Returns the iteration count.
std::size_t pcg(kernels::Exec exec, const kernels::EdgeSystem& sys, std::size_t m, std::span<const double> h,
                std::span<const double> rhs, std::span<double> d, double rel_tol) {
  const std::size_t nv = sys.vertices;
  std::vector<double> diag(m, 0.0);
  for (std::size_t e = 0; e < sys.edges(); ++e) {
    if (sys.u[e] < m) diag[sys.u[e]] += h[e];
    if (sys.v[e] < m) diag[sys.v[e]] += h[e];
  }
  std::vector<double> r(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<double> z(m), pdir(nv, 0.0), ap(nv, 0.0);
  std::fill(d.begin(), d.end(), 0.0);
  const double rhs_norm = std::sqrt(kernels::dot(exec, r, r));
  if (rhs_norm == 0.0) return 0;
  for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / diag[i];
  std::copy(z.begin(), z.end(), pdir.begin());
  double rz = kernels::dot(exec, r, z);
  const std::size_t max_it = std::max<std::size_t>(2000, static_cast<std::size_t>(60.0 * std::sqrt(static_cast<double>(m))));
  std::size_t it = 0;
  const std::span<const double> pm(pdir.data(), m), apm(ap.data(), m);
  for (; it < max_it; ++it) {
    kernels::laplacian_apply(exec, sys, h, pdir, ap);
    const double pap = kernels::dot(exec, pm, apm);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < m; ++i) {
      d[i] += alpha * pdir[i];
      r[i] -= alpha * ap[i];
    }
    if (std::sqrt(kernels::dot(exec, r, r)) <= rel_tol * rhs_norm) {
      ++it;
      break;
    }
    for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / diag[i];
    const double rz_new = kernels::dot(exec, r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < m; ++i) pdir[i] = z[i] + beta * pdir[i];
  }
  return it;
}

// Newton iterations on the smoothed energy at exponent p.
void newton(const DirichletEnergy& F, double p, std::vector<double>& x, const SolveOptions& options,
            SolveResult& result) {
  const auto exec = options.exec;
  const auto& sys = F.system();
  const std::size_t nv = F.vertices(), m = F.unknowns();
  std::vector<double> g(nv), h(sys.edges()), rhs(nv), d(nv, 0.0), trial(nv), g_trial(nv);
  const double delta = F.delta();
  auto energy = [&](std::span<const double> v) { return kernels::smoothed_energy(exec, sys, v, p, delta); };
  auto grad = [&](std::span<const double> v, std::span<double> out) {
    kernels::smoothed_gradient(exec, sys, v, p, delta, out);
  };
  grad(x, g);
  double res = F.residual(g);
  double e0 = energy(x);
  for (int it = 0; it < options.max_iter; ++it) {
    if (res <= options.tol) {
      result.converged = true;
      break;
    }
    kernels::hessian_weights(exec, sys, x, p, delta, h);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = -g[i];
    const double cg_tol = p == 2.0 ? 1e-13 : std::clamp(0.1 * res, 1e-13, 1e-3);
    result.cg_iterations += pcg(exec, sys, m, h, rhs, d, cg_tol);
    double slope = 0.0;
    for (std::size_t i = 0; i < m; ++i) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      // Not a descent direction: fall back to the preconditioned gradient.
      std::vector<double> diag(m, 0.0);
      for (std::size_t e = 0; e < sys.edges(); ++e) {
        if (sys.u[e] < m) diag[sys.u[e]] += h[e];
        if (sys.v[e] < m) diag[sys.v[e]] += h[e];
      }
      slope = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        d[i] = -g[i] / diag[i];
        slope += g[i] * d[i];
      }
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      std::copy(x.begin(), x.end(), trial.begin());
      for (std::size_t i = 0; i < m; ++i) trial[i] += alpha * d[i];
      const double e1 = energy(trial);
      if (e1 <= e0 + 1e-4 * alpha * slope) {
        accepted = true;
      } else if (std::abs(e1 - e0) <= 1e-13 * std::abs(e0)) {
        // Energy differences are at rounding level; judge by stationarity.
        grad(trial, g_trial);
        accepted = F.residual(g_trial) < res;
      }
      if (accepted) {
        x.swap(trial);
        e0 = e1;
        break;
      }
      alpha *= 0.5;
    }
    ++result.iterations;
    grad(x, g);
    res = F.residual(g);
    if (!accepted) break;
  }
  if (res <= options.tol) result.converged = true;
  result.residual = res;
}

}  // namespace

SolveResult solve_with_quotients(const Space& space, const EdgeQuotients& quotients, double p, const PointSet& domain,
                                 const FunctionField& boundary, const SolveOptions& options) {
  DirichletEnergy F(space, quotients, p, domain, boundary);
  SolveResult result;
  std::vector<double> x;
  if (F.data_range() == 0.0) {
    // Constant data: the constant extension is the minimizer.
    x = F.local(boundary.values);
    const double c = x.back();
    std::fill(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(F.unknowns()), c);
    result.u = F.expand(x);
    result.converged = true;
    return result;
  }
  if (options.initial) {
    x = F.local(*options.initial);
  } else {
    x = F.local(boundary.values);
    double mean = 0.0;
    for (std::size_t k = F.unknowns(); k < F.vertices(); ++k) mean += x[k];
    mean /= static_cast<double>(F.vertices() - F.unknowns());
    std::fill(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(F.unknowns()), mean);
    if (p != 2.0) {
      // Warm start from the quadratic problem with the same edge weights.
      SolveResult warm;
      SolveOptions o = options;
      o.tol = 1e-6;
      newton(F, 2.0, x, o, warm);
      result.cg_iterations += warm.cg_iterations;
    }
  }
  newton(F, p, x, options, result);
  result.u = F.expand(x);
  return result;
}

SolveResult solve_p_harmonic(const EnergyForm& form, const Space& space, const PointSet& domain,
                             const FunctionField& boundary, const SolveOptions& options) {
  if (form.geometry != EnergyGeometry::Base)
    throw InvalidArgument("solve_p_harmonic: the spherical geometry needs a sphericalized space");
  return solve_with_quotients(space, edge_quotients(space), form.p, domain, boundary, options);
}

SolveResult solve_p_harmonic(const EnergyForm& form, const SphericalizedSpace& sph, const PointSet& domain,
                             const FunctionField& boundary, const SolveOptions& options) {
  return solve_with_quotients(sph.base(), edge_quotients(sph, form.geometry), form.p, domain, boundary, options);
}

}  // namespace spherekit
