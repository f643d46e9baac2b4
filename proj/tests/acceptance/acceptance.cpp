// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spherekit/classify.hpp"
#include "spherekit/dirichlet.hpp"
#include "spherekit/geometry.hpp"
#include "spherekit/kernels.hpp"
#include "spherekit/potential.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::shared_ptr<const Space> grid(int dim, int R) { return std::make_shared<const Space>(generate_grid(dim, R, 0.0)); }

std::vector<double> dyadic(double lo, double hi) {
  std::vector<double> out;
  for (double r = lo; r <= hi; r *= 2) out.push_back(r);
  return out;
}

std::vector<double> hat_ladder(double rho_max) {
  std::vector<double> out;
  for (double rho : dyadic(1.0, rho_max)) out.push_back(1.0 / (1.0 + rho));
  return out;
}

double euclid(const Space& X, Index i) {
  double s = 0.0;
  for (double c : X.coords(i)) s += c * c;
  return std::sqrt(s);
}

Outcome metric_sandwich() {
  Outcome o;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto X = std::make_shared<const Space>(generate_random_cloud(seed, {200, 4, 0.5, 2.0}));
    const auto sph = sphericalize(X, 4.0);
    const Index inf = sph.infinity();
    double diam = 0.0;
    for (Index x = 0; x < sph.size(); ++x) {
      const auto row = sph.chain_metric(x);
      for (Index y = 0; y < sph.size(); ++y) {
        const double da = sph.d_a(x, y);
        if (!(row[y] <= da && 0.25 * da <= row[y])) {
          o.pass = false;
          o.detail = fmt("seed %llu: sandwich broken at (%s, %s)", (unsigned long long)seed, sph.id(x).c_str(),
                         sph.id(y).c_str());
          return o;
        }
        diam = std::max(diam, row[y]);
        ++pairs;
      }
    }
    if (sph.d_hat(X->base(), inf) != 1.0 || sph.chain_metric(X->base())[inf] != 1.0 || diam != 1.0) {
      o.pass = false;
      o.detail = fmt("seed %llu: d̂(a,∞) = %.17g, diam = %.17g", (unsigned long long)seed,
                     sph.d_hat(X->base(), inf), diam);
      return o;
    }
  }

  // Relay enumeration. Ties within the relaxation margin keep the direct chain.
  std::size_t compared = 0, exact = 0;
  double worst = 0.0;
  auto relay = [&](std::shared_ptr<const Space> X) {
    const auto sph = sphericalize(X, 4.0);
    const auto q = oracle::quasimetric(oracle::floyd(*X), X->base());
    for (Index x = 0; x < sph.size(); ++x)
      for (Index y = 0; y < sph.size(); ++y) {
        const double want = oracle::relay_min(q, x, y, 4), got = sph.d_hat(x, y);
        worst = std::max(worst, std::abs(got - want) / std::max(want, 1e-300));
        exact += got == want;
        ++compared;
      }
  };
  relay(grid(1, 8));
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    relay(std::make_shared<const Space>(generate_random_cloud(100 + seed, {16, 3, 0.5, 2.0})));
  const double margin = 1.0 - kernels::kRelaxShrink;
  if (worst > margin) o.pass = false;
  o.detail = fmt("%zu pairs on 20 spaces; relay oracle %zu/%zu bitwise, worst rel %.2g (margin %.2g)", pairs, exact,
                 compared, worst, margin);
  return o;
}

Outcome ball_identities() {
  Outcome o;
  std::size_t radii = 0, samples = 0, violations = 0;
  for (const auto& X : {grid(1, 256), grid(2, 64)}) {
    const auto sph = sphericalize(X, 4.0);
    Rng rng(17, X->lattice()->dim);
    for (int k = 0; k < 50; ++k, ++radii) {
      const double r = rng.log_uniform(1.0 / (2.0 * X->truncation_radius()), 1.2);
      const auto got = sph.hat_ball(sph.infinity(), r);
      bool same = got.contains(sph.infinity());
      for (Index x = 0; x < X->size(); ++x) same = same && got.contains(x) == !(X->remoteness(x) <= 1.0 / r - 1.0);
      if (!same) {
        o.pass = false;
        o.detail = fmt("identity fails on %d-D grid at r = %.17g", X->lattice()->dim, r);
        return o;
      }
    }
    const auto rep = verify_ball_inclusions(sph, 500, 5);
    samples += rep.samples.size();
    violations += rep.violations;
    if (rep.small_samples == 0 || rep.large_samples == 0) o.pass = false;
  }
  if (violations) o.pass = false;
  o.detail = fmt("%zu radii exact; %zu inclusion samples, %zu violations", radii, samples, violations);
  return o;
}

Outcome doubling_necessity() {
  Outcome o;
  std::vector<std::shared_ptr<const Space>> ladder{grid(2, 32), grid(2, 64), grid(2, 128)};
  NecessityOptions opts;
  opts.samples = 16;
  const auto above = necessity_experiment(ladder, 3.0, opts);
  const auto below = necessity_experiment(ladder, 1.5, opts);
  std::vector<double> c;
  for (const auto& r : below.rungs) c.push_back(r.doubling.constant);
  bool increasing = true;
  for (std::size_t k = 1; k < c.size(); ++k) increasing = increasing && c[k] > c[k - 1];
  const double growth = c.back() / c.front();
  o.pass = above.spread <= 2.0 && increasing && growth >= 1.5;
  o.detail = fmt("q=3 spread %.3f (%s); q=1.5 estimates %.3f %.3f %.3f, growth %.3f", above.spread,
                 above.verdict.c_str(), c[0], c[1], c[2], growth);
  return o;
}

Outcome ahlfors() {
  Outcome o;
  std::vector<double> spread;
  for (int R : {32, 64, 128}) {
    const auto sph = sphericalize(grid(2, R), 4.0);
    const auto est = ahlfors_regularity(sph, 2.0, 4.0 / 33.0, 1.0, 32, 7, 16.0);
    std::size_t small = 0;
    for (const auto& s : est.evidence) small += s.small_regime;
    if (small == 0 || small == est.evidence.size()) o.pass = false;
    spread.push_back(est.spread);
  }
  for (std::size_t k = 0; k < spread.size(); ++k) {
    if (spread[k] > 64.0) o.pass = false;
    if (k && spread[k] > 1.05 * spread[k - 1]) o.pass = false;
    if (k > 1 && spread[k] - spread[k - 1] > spread[k - 1] - spread[k - 2]) o.pass = false;
  }
  o.detail = fmt("spread %.4f %.4f %.4f over R = 32, 64, 128", spread[0], spread[1], spread[2]);
  return o;
}

Outcome whitney() {
  Outcome o;
  const auto sph = sphericalize(grid(2, 64), 4.0);
  for (double r : {0.02, 0.05}) {
    const auto w = whitney_cover(sph, r, 1.0);
    const bool ok = w.radii_law && w.level_bounds && w.disjoint && w.covers && w.max_overlap <= 3 * w.M;
    o.pass = o.pass && ok;
    o.detail += fmt("%sr=%.2f: %zu balls, overlap %zu <= 3*%zu%s", o.detail.empty() ? "" : "; ", r, w.balls.size(),
                    w.max_overlap, w.M, ok ? "" : " (broken)");
  }
  return o;
}

Outcome energy_identity() {
  Outcome o;
  double worst = 0.0;
  std::size_t fields = 0;
  Rng rng(6, 0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto X = std::make_shared<const Space>(generate_random_cloud(600 + seed, {500, 4, 0.5, 2.0}));
    const auto all = PointSet::all(X->size());
    for (double p : {1.5, 2.0, 3.0}) {
      const auto sph = sphericalize(X, 2 * p);
      for (int k = 0; k < 20; ++k, ++fields) {
        FunctionField u{std::vector<double>(X->size()), std::nullopt};
        for (auto& v : u.values) v = rng.uniform(-3.0, 3.0);
        const double eb = p_energy({p, EnergyGeometry::Base}, sph, u, all);
        const double es = p_energy({p, EnergyGeometry::Spherical}, sph, u, all);
        worst = std::max(worst, std::abs(eb - es) / eb);
      }
    }
  }
  o.pass = worst <= 1e-10;
  o.detail = fmt("%zu fields, worst relative difference %.2e", fields, worst);
  return o;
}

Outcome minimizer_invariance() {
  Outcome o;
  double worst2 = 0.0, worst3 = 0.0, worst_fd = 0.0;
  Rng rng(7, 0);
  for (int k = 0; k < 10; ++k) {
    const int R = 10 + k % 4;
    const auto X = grid(2, R);
    const double inner = 1.0 + k % 3, outer = R - 2.0;
    PointSet dom(X->size());
    FunctionField data{std::vector<double>(X->size(), 0.0), std::nullopt};
    const double a = rng.uniform(0.2, 1.0), b = rng.uniform(-0.3, 0.3);
    for (Index i = 0; i < X->size(); ++i) {
      const double r = X->remoteness(i);
      if (r > inner && r < outer) dom.insert(i);
      if (r >= outer) data.values[i] = a + b * X->coords(i)[0] / R + 0.1 * rng.uniform(0.0, 1.0);
    }
    for (double p : {2.0, 3.0}) {
      const double tol = p == 2.0 ? 1e-6 : 1e-5;
      const auto rep = invariance_under_sphericalization(X, dom, data, p, tol);
      (p == 2.0 ? worst2 : worst3) = std::max(p == 2.0 ? worst2 : worst3, rep.sup_difference);
      o.pass = o.pass && rep.pass && rep.sup_difference <= tol;
    }
    if (k < 3) {
      const auto sph = sphericalize(X, 6.0);
      for (double p : {2.0, 3.0})
        for (auto geometry : {EnergyGeometry::Base, EnergyGeometry::Spherical}) {
          const auto& quot = sph.with_q(2 * p);
          const DirichletEnergy F(*X, edge_quotients(quot, geometry), p, dom, data);
          auto x = F.local(data.values);
          for (std::size_t j = 0; j < F.unknowns(); ++j) x[j] = rng.uniform(0.0, 1.0);
          std::vector<double> g(F.vertices());
          F.gradient(kernels::Exec::Serial, x, g);
          for (std::size_t j = 0; j < F.unknowns(); j += 7) {
            const double keep = x[j], h = 1e-6 * std::max(1.0, std::abs(keep));
            x[j] = keep + h;
            const double up = F.energy(kernels::Exec::Serial, x);
            x[j] = keep - h;
            const double down = F.energy(kernels::Exec::Serial, x);
            x[j] = keep;
            const double fd = (up - down) / (2 * h);
            worst_fd = std::max(worst_fd, std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])));
          }
        }
    }
  }
  o.pass = o.pass && worst_fd <= 1e-5;
  o.detail = fmt("10 annuli: sup diff p=2 %.2e, p=3 %.2e; gradient vs FD %.2e", worst2, worst3, worst_fd);
  return o;
}

Outcome parabolicity() {
  Outcome o;
  struct Case {
    int dim, R;
    double p;
    std::vector<double> radii;
    double rho_max;
    const char* want;
  };
  const std::vector<Case> cases{{1, 2048, 2.0, dyadic(2, 1024), 256, "PARABOLIC"},
                                {2, 128, 2.0, dyadic(2, 64), 64, "PARABOLIC"},
                                {3, 32, 2.0, dyadic(2, 32), 32, "HYPERBOLIC"},
                                {3, 32, 3.5, dyadic(2, 32), 32, "PARABOLIC"}};
  for (const auto& c : cases) {
    const auto X = grid(c.dim, c.R);
    const auto cls = classify_parabolicity(*X, c.p, 2 * c.p, c.radii);
    const auto probe = capacity_at_infinity_probe(sphericalize(X, 2 * c.p), c.p, hat_ladder(c.rho_max));
    const bool agree = (cls.verdict == "PARABOLIC" && probe.verdict == "VANISHING") ||
                       (cls.verdict == "HYPERBOLIC" && probe.verdict == "POSITIVE");
    o.pass = o.pass && cls.verdict == c.want && agree;
    o.detail += fmt("%s%d-D p=%.1f %s/%s", o.detail.empty() ? "" : "; ", c.dim, c.p, cls.verdict.c_str(),
                    probe.verdict.c_str());
  }
  return o;
}

Outcome dirichlet_at_infinity() {
  Outcome o;
  // Hyperbolic regularity: ring values trend to f(∞).
  std::vector<std::shared_ptr<const Space>> cubes{grid(3, 8), grid(3, 16), grid(3, 32)};
  const std::vector<BoundaryData> battery{
      {"zero-one", 1.0, [](const Space&, Index) { return 0.0; }},
      {"x-half", 0.5, [](const Space& X, Index i) { return X.coords(i)[0] / 3.0; }}};
  const auto reg = regularity_probe(cubes, 2.0, 4.0, battery);
  double trend_err = 0.0;
  for (double e : reg.trend_error) trend_err = std::max(trend_err, e);
  const bool regular = !reg.trend_error.empty() && trend_err <= 0.15;

  // Parabolic plane: the value at ∞ stops mattering.
  std::vector<std::shared_ptr<const Space>> planes{grid(2, 32), grid(2, 64), grid(2, 128)};
  const std::vector<BoundaryData> pair{{"zero-zero", 0.0, [](const Space&, Index) { return 0.0; }},
                                       {"zero-one", 1.0, [](const Space&, Index) { return 0.0; }}};
  RegularityOptions opts;
  opts.inner_radius = 16.0;
  opts.obstacle = Obstacle::CoordinateBall;
  const auto inf = regularity_probe(planes, 2.0, 4.0, pair, opts);
  std::vector<double> sup;
  for (const auto& r : inf.influence) sup.push_back(r.sup_difference);
  bool fading = sup.size() == 3 && sup.back() < 0.05;
  for (std::size_t k = 1; k < sup.size(); ++k) fading = fading && sup[k] < sup[k - 1];

  // Barrier at ∞ on the cube exterior.
  const auto X = grid(3, 32);
  const auto sph = sphericalize(X, 4.0);
  const auto om = exterior_domain(*X, 2.0);
  const auto P = perron_solve({&sph, om, {std::vector<double>(X->size(), 0.0), 1.0}, 2.0, true, 0.0}, {}, false);
  const double c = fit_inverse_profile(*X, om, P.u);
  FunctionField barrier{std::vector<double>(X->size()), 0.0};
  for (Index i = 0; i < X->size(); ++i) barrier.values[i] = c / std::max(euclid(*X, i), 1.0);
  const bool fitted = barrier_check(sph, om, barrier, 2.0, 0.05, 0.05).pass;
  const bool one = barrier_check(sph, om, FunctionField::constant(X->size(), 1.0), 2.0, 0.05, 0.05).pass;
  const bool zero = barrier_check(sph, om, FunctionField::constant(X->size(), 0.0), 2.0, 0.05, 0.05).pass;

  o.pass = regular && fading && fitted && !one && !zero;
  o.detail = fmt("3-D trend error %.4f; 2-D influence %.4f %.4f %.4f; barrier c=%.3f %s, degenerate %s/%s", trend_err,
                 sup.size() > 0 ? sup[0] : -1.0, sup.size() > 1 ? sup[1] : -1.0, sup.size() > 2 ? sup[2] : -1.0, c,
                 fitted ? "PASS" : "FAIL", one ? "PASS" : "FAIL", zero ? "PASS" : "FAIL");
  return o;
}

Outcome perturbation() {
  Outcome o;
  const auto rows = refinement_perturbation({8, 16, 32, 64}, 2.0, 1.0);
  bool decreasing = rows.size() == 4;
  for (std::size_t k = 1; k < rows.size(); ++k)
    decreasing = decreasing && rows[k].core_difference < rows[k - 1].core_difference;
  const double last = rows.empty() ? 1.0 : rows.back().core_difference;

  const int N = 16;
  const auto X = grid(2, N);
  const auto sph = sphericalize(X, 4.0);
  PointSet disc(X->size());
  FunctionField f{std::vector<double>(X->size()), std::nullopt};
  for (Index i = 0; i < X->size(); ++i) {
    if (X->remoteness(i) < N) disc.insert(i);
    f.values[i] = X->coords(i)[0] / N;
  }
  const auto empty = resolutive_perturbation_test(sph, disc, f, 2.0, {PointSet(X->size())}, 1.0, disc);
  const bool bitwise = empty.rows.size() == 1 && empty.rows[0].sup_difference == 0.0;

  o.pass = decreasing && last < 0.05 && bitwise;
  std::string diffs;
  for (const auto& r : rows) diffs += fmt(" %.4f", r.core_difference);
  o.detail = fmt("core difference N=8..64:%s; empty perturbation %s", diffs.c_str(),
                 bitwise ? "bitwise equal" : "differs");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metric sandwich", metric_sandwich},
      {"hat ball identities and inclusions", ball_identities},
      {"doubling preservation and necessity", doubling_necessity},
      {"Ahlfors regularity after sphericalization", ahlfors},
      {"Whitney cover", whitney},
      {"energy identity at q = 2p", energy_identity},
      {"minimizer invariance", minimizer_invariance},
      {"parabolicity classifier and probe", parabolicity},
      {"Dirichlet problem at infinity", dirichlet_at_infinity},
      {"boundary perturbation under refinement", perturbation},
  };
  int failed = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s  %2d  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", k - failed, criteria.size());
  return failed ? 1 : 0;
}
