#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "spherekit/error.hpp"
#include "spherekit/potential.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;

namespace {

FunctionField field_from(const Space& X, double (*f)(const std::vector<double>&)) {
  FunctionField u{std::vector<double>(X.size()), std::nullopt};
  for (Index i = 0; i < X.size(); ++i) u.values[i] = f(X.coords(i));
  return u;
}

struct Annulus {
  PointSet domain;
  FunctionField data;
};

Annulus annulus(const Space& X, double inner, double outer) {
  Annulus a{PointSet(X.size()), {std::vector<double>(X.size(), 0.0), std::nullopt}};
  for (Index i = 0; i < X.size(); ++i) {
    const double r = X.remoteness(i);
    if (r > inner && r < outer) a.domain.insert(i);
    if (r >= outer) a.data.values[i] = 1.0;
  }
  return a;
}

PointSet set_of(const Space& X, std::initializer_list<const char*> ids) {
  PointSet s(X.size());
  for (const char* id : ids) s.insert(X.index_of(id));
  return s;
}

}  // namespace

TEST_CASE("edge gradients") {
  const Space tri({{"0", {}, 1.0}, {"1", {}, 1.0}, {"2", {}, 1.0}}, {{"0", "1", 1.0}, {"1", "2", 1.0}, {"0", "2", 1.0}},
                  "0");
  const auto g = edge_gradient(tri, {{0.0, 1.0, 1.0}, std::nullopt});
  CHECK(g.values == std::vector<double>{1.0, 0.0, 1.0});

  const Space X = generate_grid(1, 5, 0.0);
  for (double v : edge_gradient(X, FunctionField::constant(X.size(), 3.0)).values) CHECK(v == 0.0);
  for (double v : edge_gradient(X, field_from(X, [](const std::vector<double>& c) { return c[0]; })).values)
    CHECK(v == 1.0);
}

TEST_CASE("p-energy on a path") {
  const Space P = oracle::path_graph(4);
  const FunctionField u{{0.0, 1.0, 2.0, 3.0}, std::nullopt};
  CHECK(p_energy({2.0, EnergyGeometry::Base}, P, u, PointSet::all(4)) == 3.0);
  CHECK(p_energy({3.0, EnergyGeometry::Base}, P, FunctionField::constant(4, 2.0), PointSet::all(4)) == 0.0);
  CHECK_THROWS_AS(p_energy({2.0, EnergyGeometry::Base}, P, u, PointSet(4)), InvalidArgument);
}

TEST_CASE("base and spherical energies agree when q = 2p") {
  const auto X = std::make_shared<const Space>(generate_random_cloud(21, {500, 4, 0.5, 2.0}));
  Rng rng(2, 0);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto sph = sphericalize(X, 2 * p);
    for (int k = 0; k < 10; ++k) {
      FunctionField u{std::vector<double>(X->size()), std::nullopt};
      for (auto& v : u.values) v = rng.uniform(-2.0, 2.0);
      const double eb = p_energy({p, EnergyGeometry::Base}, sph, u, PointSet::all(X->size()));
      const double es = p_energy({p, EnergyGeometry::Spherical}, sph, u, PointSet::all(X->size()));
      CHECK(std::abs(eb - es) <= 1e-10 * eb);
    }
  }
}

TEST_CASE("solutions on the path 0-1-2") {
  const Space P = oracle::path_graph(3);
  const FunctionField data{{0.0, 0.0, 1.0}, std::nullopt};
  for (double p : {2.0, 3.0, 1.5}) {
    const auto sol = solve_p_harmonic({p, EnergyGeometry::Base}, P, set_of(P, {"1"}), data);
    CHECK(sol.converged);
    CHECK(sol.u.values[1] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("annulus minimizer is the same in both geometries") {
  const auto X = std::make_shared<const Space>(generate_grid(2, 10, 0.0));
  const auto sph = sphericalize(X, 4.0);
  const auto a = annulus(*X, 2.0, 8.0);
  const auto base = solve_p_harmonic({2.0, EnergyGeometry::Base}, *X, a.domain, a.data);
  const auto sphr = solve_p_harmonic({2.0, EnergyGeometry::Spherical}, sph, a.domain, a.data);
  REQUIRE(base.converged);
  REQUIRE(sphr.converged);
  double diff = 0.0;
  for (Index i = 0; i < X->size(); ++i) diff = std::max(diff, std::abs(base.u.values[i] - sphr.u.values[i]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("maximum and comparison principles") {
  const Space X = generate_grid(2, 8, 0.0);
  const auto a = annulus(X, 1.0, 6.0);
  Rng rng(6, 0);
  FunctionField f{std::vector<double>(X.size()), std::nullopt}, g = f;
  for (Index i = 0; i < X.size(); ++i) {
    f.values[i] = rng.uniform(-1.0, 1.0);
    g.values[i] = f.values[i] + rng.uniform(0.0, 0.5);
  }
  double lo = 1e300, hi = -1e300;
  for (Index i : outer_boundary(X, a.domain).members()) {
    lo = std::min(lo, f.values[i]);
    hi = std::max(hi, f.values[i]);
  }
  for (double p : {2.0, 3.0}) {
    const auto uf = solve_p_harmonic({p, EnergyGeometry::Base}, X, a.domain, f);
    const auto ug = solve_p_harmonic({p, EnergyGeometry::Base}, X, a.domain, g);
    REQUIRE(uf.converged);
    REQUIRE(ug.converged);
    for (Index i : a.domain.members()) {
      CHECK(uf.u.values[i] >= lo - 1e-9);
      CHECK(uf.u.values[i] <= hi + 1e-9);
      CHECK(uf.u.values[i] <= ug.u.values[i] + 1e-9);
    }
  }
}

TEST_CASE("solver gradient matches finite differences") {
  const Space X = generate_grid(2, 6, 0.0);
  const auto a = annulus(X, 1.0, 5.0);
  Rng rng(3, 0);
  FunctionField data{std::vector<double>(X.size()), std::nullopt};
  for (auto& v : data.values) v = rng.uniform(0.0, 1.0);
  for (double p : {2.0, 3.0}) {
    const DirichletEnergy F(X, edge_quotients(X), p, a.domain, data);
    auto x = F.local(data.values);
    for (std::size_t k = 0; k < F.unknowns(); ++k) x[k] = rng.uniform(0.0, 1.0);
    std::vector<double> g(F.vertices());
    F.gradient(kernels::Exec::Serial, x, g);
    for (std::size_t k = 0; k < F.unknowns(); k += 3) {
      const double h = 1e-6, keep = x[k];
      x[k] = keep + h;
      const double up = F.energy(kernels::Exec::Serial, x);
      x[k] = keep - h;
      const double down = F.energy(kernels::Exec::Serial, x);
      x[k] = keep;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
  }
}

TEST_CASE("components without boundary are rejected") {
  const Space P = oracle::path_graph(3);
  CHECK_THROWS_AS(solve_p_harmonic({2.0, EnergyGeometry::Base}, P, PointSet::all(3), FunctionField::constant(3, 0.0)),
                  InvalidArgument);
}

TEST_CASE("condenser capacities") {
  const Space two({{"x", {}, 2.0}, {"y", {}, 3.0}}, {{"x", "y", 1.0}}, "x");
  const auto E = PointSet::of(2, {0});
  CHECK(condenser_capacity({2.0, EnergyGeometry::Base}, two, E, E) == doctest::Approx(std::sqrt(6.0)));
  CHECK(condenser_capacity({2.0, EnergyGeometry::Base}, two, PointSet(2), E) == 0.0);

  // Three unit conductances in series: 0-1, 1-2 and the edge 2-3 leaving Ω.
  const Space P = oracle::path_graph(4);
  const auto cap = condenser_capacity({2.0, EnergyGeometry::Base}, P, PointSet::of(4, {0}), PointSet::of(4, {0, 1, 2}));
  CHECK(cap == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK_THROWS_AS(condenser_capacity({2.0, EnergyGeometry::Base}, P, PointSet::of(4, {3}), PointSet::of(4, {0, 1})),
                  InvalidArgument);
}

TEST_CASE("capacity decreases as the outer set grows") {
  const Space X = generate_grid(2, 12, 0.0);
  PointSet E(X.size()), small(X.size()), big(X.size());
  for (Index i = 0; i < X.size(); ++i) {
    if (X.remoteness(i) <= 1) E.insert(i);
    if (X.remoteness(i) <= 5) small.insert(i);
    if (X.remoteness(i) <= 10) big.insert(i);
  }
  const double cs = condenser_capacity({2.0, EnergyGeometry::Base}, X, E, small);
  const double cb = condenser_capacity({2.0, EnergyGeometry::Base}, X, E, big);
  CHECK(cb < cs);
  CHECK(cb > 0.0);
}
