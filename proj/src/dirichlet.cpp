#include "spherekit/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spherekit/error.hpp"

namespace spherekit {

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b, const PointSet& where) {
  double d = 0.0;
  for (Index i : where.members())
    if (i < a.size()) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

PerronResult solve_once(const DirichletProblem& pr, double rho, const SolveOptions& options) {
  const SphericalizedSpace& sph = *pr.sph;
  const std::size_t n = sph.base().size();
  PointSet dom(n);
  FunctionField data = pr.data;
  PerronResult res;
  res.connection_radius = rho;
  for (Index i : pr.domain.members()) {
    if (i >= n) continue;
    if (pr.unbounded && sph.t()[i] <= rho) continue;
    dom.insert(i);
  }
  if (pr.unbounded)
    for (Index i = 0; i < n; ++i)
      if (sph.t()[i] <= rho) {
        data.values[i] = *pr.data.at_infinity;
        if (pr.domain.contains(i)) ++res.identified_with_infinity;
      }
  if (dom.empty()) {
    res.u = data;
    res.converged = true;
    return res;
  }
  auto sol = solve_p_harmonic({pr.p, EnergyGeometry::Spherical}, sph, dom, data, options);
  res.u = std::move(sol.u);
  res.residual = sol.residual;
  res.iterations = sol.iterations;
  res.converged = sol.converged;
  return res;
}

}  // namespace

PerronResult perron_solve(const DirichletProblem& pr, const SolveOptions& options, bool with_sensitivity) {
  if (!pr.sph) throw InvalidArgument("perron_solve: no geometry");
  const Space& X = pr.sph->base();
  const std::size_t n = X.size();
  if (pr.domain.universe() < n) throw InvalidArgument("perron_solve: domain universe too small");
  if (pr.domain.universe() > n && pr.domain.contains(n)) throw InvalidArgument("perron_solve: ∞ is a boundary point");
  if (pr.data.values.size() != n) throw InvalidArgument("perron_solve: data must have one value per point");
  if (pr.unbounded && !(pr.data.at_infinity && std::isfinite(*pr.data.at_infinity)))
    throw InvalidArgument("perron_solve: unbounded problem needs a finite value at ∞");
  const double rho = pr.connection_radius > 0.0 ? pr.connection_radius : 1.0 / (1.0 + X.truncation_radius());

  PerronResult res = solve_once(pr, rho, options);
  if (pr.unbounded) res.u.at_infinity = pr.data.at_infinity;
  if (with_sensitivity && pr.unbounded) {
    // One dyadic step inwards: identify {|x| >= R/2} with ∞.
    const double R = 1.0 / rho - 1.0;
    const double rho2 = 1.0 / (1.0 + 0.5 * R);
    SolveOptions o = options;
    o.initial = &res.u.values;
    const PerronResult alt = solve_once(pr, rho2, o);
    PointSet common(n);
    for (Index i : pr.domain.members())
      if (i < n && pr.sph->t()[i] > rho2) common.insert(i);
    res.sensitivity = sup_diff(res.u.values, alt.u.values, common);
    res.sensitivity_radius = rho2;
  }
  return res;
}

InvarianceReport invariance_under_sphericalization(std::shared_ptr<const Space> space, const PointSet& domain,
                                                   const FunctionField& data, double p, double tol,
                                                   const SolveOptions& options) {
  const auto sph = sphericalize(space, 2.0 * p);
  InvarianceReport rep;
  rep.tol = tol;
  const auto a = solve_p_harmonic({p, EnergyGeometry::Base}, *space, domain, data, options);
  double hi = -std::numeric_limits<double>::infinity();
  for (Index i : outer_boundary(*space, domain).members()) hi = std::max(hi, data.values[i]);
  std::vector<double> start(space->size(), std::isfinite(hi) ? hi : 0.0);
  SolveOptions o = options;
  o.initial = &start;
  const auto b = solve_p_harmonic({p, EnergyGeometry::Spherical}, sph, domain, data, o);
  rep.base_residual = a.residual;
  rep.spherical_residual = b.residual;
  rep.sup_difference = sup_diff(a.u.values, b.u.values, domain);
  rep.pass = a.converged && b.converged && rep.sup_difference <= tol;
  return rep;
}

PointSet exterior_domain(const Space& space, double inner_radius, Obstacle shape) {
  PointSet s(space.size());
  for (Index i = 0; i < space.size(); ++i) {
    double r = space.remoteness(i);
    if (shape == Obstacle::CoordinateBall) {
      const auto& c = space.coords(i);
      if (c.empty()) throw InvalidArgument("exterior_domain: the space has no coordinates");
      r = 0.0;
      for (double v : c) r += v * v;
      r = std::sqrt(r);
    }
    if (r > inner_radius) s.insert(i);
  }
  return s;
}

PointSet first_layer(const Space& space, const PointSet& domain) {
  PointSet s(space.size());
  for (Index i : domain.members()) {
    if (i >= space.size()) continue;
    for (const auto& nb : space.neighbors(i))
      if (!domain.contains(nb.vertex)) {
        s.insert(i);
        break;
      }
  }
  return s;
}

PointSet ring(const Space& space, const PointSet& domain, double rho) {
  PointSet s(space.size());
  for (Index i : domain.members())
    if (i < space.size() && space.remoteness(i) >= rho && space.remoteness(i) < rho + 1.0) s.insert(i);
  return s;
}

RegularityReport regularity_probe(const std::vector<std::shared_ptr<const Space>>& ladder, double p, double q,
                                  const std::vector<BoundaryData>& battery, const RegularityOptions& options) {
  if (ladder.size() < 3) throw InvalidArgument("regularity_probe: ladder too short");
  if (battery.empty()) throw InvalidArgument("regularity_probe: empty battery");
  RegularityReport rep;
  rep.tolerance = options.tolerance;
  const std::size_t M = battery.size();
  std::vector<std::vector<double>> ring_means(M);
  std::vector<double> Rs;

  for (const auto& space : ladder) {
    const Space& X = *space;
    const double R = X.truncation_radius();
    Rs.push_back(R);
    const auto sph = sphericalize(space, q);
    const PointSet omega = exterior_domain(X, options.inner_radius, options.obstacle);
    const PointSet outer = ring(X, omega, std::max(0.5 * R, options.inner_radius + 1.0));
    const PointSet layer = first_layer(X, omega);
    if (outer.empty()) throw InvalidArgument("regularity_probe: empty outer ring");
    std::vector<std::vector<double>> finite(M), sols(M);
    for (std::size_t m = 0; m < M; ++m) {
      finite[m].resize(X.size());
      for (Index i = 0; i < X.size(); ++i) finite[m][i] = battery[m].finite(X, i);
      DirichletProblem pr{&sph, omega, {finite[m], battery[m].at_infinity}, p, true, 0.0};
      const auto res = perron_solve(pr, options.solve, false);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
      for (Index i : outer.members()) {
        const double v = res.u.values[i];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        mean += v;
      }
      mean /= static_cast<double>(outer.size());
      ring_means[m].push_back(mean);
      rep.rows.push_back({R, m, mean, lo, hi, res.residual});
      sols[m] = res.u.values;
    }
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = a + 1; b < M; ++b)
        if (finite[a] == finite[b] && battery[a].at_infinity != battery[b].at_infinity)
          rep.influence.push_back({R, a, b, sup_diff(sols[a], sols[b], layer)});
  }

  // Ring values against 1/R by least squares; the intercept is the trend.
  const double K = static_cast<double>(Rs.size());
  bool fits = true;
  for (std::size_t m = 0; m < M; ++m) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < Rs.size(); ++k) {
      const double x = 1.0 / Rs[k], y = ring_means[m][k];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double B = (K * sxy - sx * sy) / (K * sxx - sx * sx);
    const double A = (sy - B * sx) / K;
    for (std::size_t k = 0; k < Rs.size(); ++k)
      if (std::abs(ring_means[m][k] - (A + B / Rs[k])) > options.tolerance) fits = false;
    rep.trend.push_back(A);
    rep.trend_error.push_back(std::abs(A - battery[m].at_infinity));
  }

  // f(∞) has vanishing influence when every pair differing only there gives
  // a decreasing sup-difference that ends below the influence tolerance.
  bool vanishing = !rep.influence.empty();
  for (std::size_t a = 0; a < M && vanishing; ++a)
    for (std::size_t b = a + 1; b < M && vanishing; ++b) {
      std::vector<double> seq;
      for (const auto& row : rep.influence)
        if (row.member_a == a && row.member_b == b) seq.push_back(row.sup_difference);
      if (seq.empty()) continue;
      for (std::size_t k = 1; k < seq.size(); ++k)
        if (!(seq[k] < seq[k - 1])) vanishing = false;
      if (!(seq.back() < options.influence_tolerance)) vanishing = false;
    }
  rep.limit_independent_of_infinity = vanishing;

  const bool all_attain_trend =
      std::all_of(rep.trend_error.begin(), rep.trend_error.end(), [&](double e) { return e <= options.tolerance; });
  bool sequence = true;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& last = rep.rows[rep.rows.size() - M + m];
    const double f = battery[m].at_infinity;
    if (f < last.ring_min - options.tolerance || f > last.ring_max + options.tolerance) sequence = false;
  }
  if (vanishing) {
    rep.classification = "LIMIT-EXISTS";
    rep.notes.push_back("solutions near the finite boundary do not depend on the value at infinity");
  } else if (all_attain_trend) {
    rep.classification = "REGULAR";
  } else if (fits) {
    rep.classification = "LIMIT-EXISTS";
  } else if (sequence) {
    rep.classification = "SEQUENCE-ATTAINS";
  } else {
    rep.classification = "UNRESOLVED";
  }
  rep.notes.push_back("ring trends sample only the truncation rings, not every approach to infinity");
  return rep;
}

double fit_inverse_profile(const Space& space, const PointSet& domain, const FunctionField& P) {
  double num = 0.0, den = 0.0;
  for (Index i : domain.members()) {
    if (i >= space.size()) continue;
    double r2 = 0.0;
    for (double c : space.coords(i)) r2 += c * c;
    if (!(r2 > 0.0)) continue;
    const double w = 1.0 / std::sqrt(r2);
    num += w * (1.0 - P.values[i]);
    den += w * w;
  }
  if (!(den > 0.0)) throw InvalidArgument("fit_inverse_profile: empty domain");
  return num / den;
}

namespace {

// argmin_v Σ κ_k |v − w_k|^p, by bisection on the monotone derivative.
double one_vertex_update(const std::vector<double>& kappa, const std::vector<double>& w, double p) {
  if (p == 2.0) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      a += kappa[k] * w[k];
      b += kappa[k];
    }
    return a / b;
  }
  double lo = *std::min_element(w.begin(), w.end()), hi = *std::max_element(w.begin(), w.end());
  for (int it = 0; it < 200 && hi > lo; ++it) {
    const double mid = 0.5 * (lo + hi);
    double g = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double s = mid - w[k];
      g += kappa[k] * std::copysign(std::pow(std::abs(s), p - 1.0), s);
    }
    if (g > 0.0)
      hi = mid;
    else
      lo = mid;
    if (mid == lo && mid == hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BarrierReport barrier_check(const SphericalizedSpace& sph, const PointSet& domain, const FunctionField& u, double p,
                            double tol, double margin) {
  const Space& X = sph.base();
  const std::size_t n = X.size();
  if (u.values.size() != n) throw InvalidArgument("barrier_check: field must have one value per point");
  if (!(p > 1.0)) throw InvalidArgument("barrier_check: p must be > 1");
  BarrierReport rep;
  const auto quot = edge_quotients(sph, EnergyGeometry::Spherical);

  // (1) superharmonicity through the one-vertex comparison.
  std::vector<double> kappa, w;
  bool ok1 = true;
  for (Index x : domain.members()) {
    if (x >= n) continue;
    kappa.clear();
    w.clear();
    for (const auto& nb : X.neighbors(x)) {
      kappa.push_back(quot.mass[nb.edge] / std::pow(quot.length[nb.edge], p));
      w.push_back(u.values[nb.vertex]);
    }
    if (w.empty()) continue;
    const double excess = one_vertex_update(kappa, w, p) - u.values[x];
    rep.worst_excess = std::max(rep.worst_excess, excess);
    if (ok1 && excess > tol) {
      ok1 = false;
      rep.witness = x;
      rep.witness_value = excess;
    }
  }
  if (!ok1) {
    rep.failed_condition = 1;
    return rep;
  }

  // (2) decay along dyadic rings.
  double inner = std::numeric_limits<double>::infinity();
  for (Index i : domain.members())
    if (i < n) inner = std::min(inner, X.remoteness(i));
  for (double rho = std::exp2(std::floor(std::log2(std::max(inner, 1.0)))); rho + 1.0 <= X.truncation_radius();
       rho *= 2.0) {
    const PointSet rg = ring(X, domain, rho);
    if (rg.empty()) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (Index i : rg.members()) mx = std::max(mx, u.values[i]);
    rep.ring_maxima.push_back({rho, mx});
  }
  bool ok2 = rep.ring_maxima.size() >= 2;
  for (std::size_t k = 1; ok2 && k < rep.ring_maxima.size(); ++k)
    if (rep.ring_maxima[k].second > rep.ring_maxima[k - 1].second + tol) ok2 = false;
  if (ok2 && rep.ring_maxima.back().second > std::max(tol, 0.5 * rep.ring_maxima.front().second)) ok2 = false;
  if (!ok2) {
    rep.failed_condition = 2;
    if (!rep.ring_maxima.empty()) rep.witness_value = rep.ring_maxima.back().second;
    return rep;
  }

  // (3) positive margin next to the finite boundary.
  rep.boundary_min = std::numeric_limits<double>::infinity();
  for (Index i : first_layer(X, domain).members())
    if (u.values[i] < rep.boundary_min) {
      rep.boundary_min = u.values[i];
      rep.witness = i;
    }
  if (!(rep.boundary_min >= margin)) {
    rep.failed_condition = 3;
    rep.witness_value = rep.boundary_min;
    return rep;
  }
  rep.pass = true;
  rep.witness = 0;
  return rep;
}

PerturbationReport resolutive_perturbation_test(const SphericalizedSpace& sph, const PointSet& domain,
                                                const FunctionField& f, double p,
                                                const std::vector<PointSet>& sets, double h, const PointSet& core,
                                                const SolveOptions& options) {
  const Space& X = sph.base();
  const std::size_t n = X.size();
  const PointSet boundary = outer_boundary(X, domain);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (Index i : sets[k].members())
      if (i >= n || !boundary.contains(i))
        throw InvalidArgument("resolutive_perturbation_test: sets must lie on the boundary of the domain");
    if (k)
      for (Index i : sets[k].members())
        if (!sets[k - 1].contains(i)) throw InvalidArgument("resolutive_perturbation_test: sets are not nested");
  }
  const EnergyForm form{p, EnergyGeometry::Spherical};
  const auto base = solve_p_harmonic(form, sph, domain, f, options);
  PerturbationReport rep;
  for (const auto& E : sets) {
    FunctionField g = f;
    for (Index i : E.members()) g.values[i] += h;
    const auto pert = solve_p_harmonic(form, sph, domain, g, options);
    PointSet omega_e = domain;
    for (Index i : E.members()) omega_e.insert(i);
    const double cap = condenser_capacity(form, sph, E, omega_e, options);
    rep.rows.push_back(
        {E.size(), cap, sup_diff(base.u.values, pert.u.values, domain), sup_diff(base.u.values, pert.u.values, core)});
  }
  rep.decreasing = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (!(rep.rows[k].core_difference <= rep.rows[k - 1].core_difference)) rep.decreasing = false;
  if (!rep.rows.empty()) rep.final_difference = rep.rows.back().core_difference;
  return rep;
}

std::vector<RefinementRow> refinement_perturbation(const std::vector<int>& Ns, double p, double h,
                                                   const SolveOptions& options) {
  std::vector<RefinementRow> out;
  for (int N : Ns) {
    auto space = std::make_shared<const Space>(generate_grid(2, N, 0.0));
    const auto sph = sphericalize(space, 2.0 * p);
    const std::size_t n = space->size();
    PointSet omega(n), core(n), E(n);
    FunctionField f{std::vector<double>(n), std::nullopt};
    for (Index i = 0; i < n; ++i) {
      const double r = space->remoteness(i);
      if (r < N) omega.insert(i);
      if (r <= 0.5 * N) core.insert(i);
      f.values[i] = space->coords(i)[0] / N;
    }
    E.insert(space->index_of(std::to_string(N) + ",0"));
    const auto rep = resolutive_perturbation_test(sph, omega, f, p, {E}, h, core, options);
    out.push_back({N, rep.rows[0].capacity, rep.rows[0].core_difference, rep.rows[0].sup_difference});
  }
  return out;
}

}  // namespace spherekit
