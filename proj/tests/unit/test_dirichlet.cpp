#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "spherekit/dirichlet.hpp"
#include "spherekit/error.hpp"
#include "spherekit/potential.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;

namespace {

std::shared_ptr<const Space> grid(int dim, int R) { return std::make_shared<const Space>(generate_grid(dim, R, 0.0)); }

double euclid(const Space& X, Index i) {
  double s = 0.0;
  for (double c : X.coords(i)) s += c * c;
  return std::sqrt(s);
}

PointSet disc(const Space& X, double N) {
  PointSet s(X.size());
  for (Index i = 0; i < X.size(); ++i)
    if (X.remoteness(i) < N) s.insert(i);
  return s;
}

}  // namespace

TEST_CASE("exterior domains, layers and rings") {
  const auto X = grid(2, 10);
  const auto base = exterior_domain(*X, 3.0);
  const auto round = exterior_domain(*X, 3.0, Obstacle::CoordinateBall);
  for (Index i = 0; i < X->size(); ++i) {
    CHECK(base.contains(i) == (X->remoteness(i) > 3.0));
    CHECK(round.contains(i) == (euclid(*X, i) > 3.0));
  }
  const auto layer = first_layer(*X, base);
  for (Index i : layer.members()) {
    CHECK(base.contains(i));
    CHECK(X->remoteness(i) == 4.0);
  }
  CHECK(layer.size() == 16);
  const auto r = ring(*X, base, 6.0);
  for (Index i : r.members()) CHECK((X->remoteness(i) >= 6.0 && X->remoteness(i) < 7.0));

  const Space bare({{"a", {}, 1.0}, {"b", {}, 1.0}}, {{"a", "b", 1.0}}, "a");
  CHECK_THROWS_AS(exterior_domain(bare, 0.5, Obstacle::CoordinateBall), InvalidArgument);
}

TEST_CASE("Perron solution of constant data is that constant") {
  const auto sph = sphericalize(grid(3, 8), 4.0);
  const auto om = exterior_domain(sph.base(), 2.0);
  const auto res = perron_solve({&sph, om, FunctionField::constant(sph.base().size(), 0.75), 2.0, true, 0.0});
  CHECK(res.converged);
  for (Index i : om.members()) CHECK(res.u.values[i] == 0.75);
  CHECK(res.sensitivity == 0.0);
}

TEST_CASE("exterior solution lies between the data values") {
  const auto sph = sphericalize(grid(3, 8), 4.0);
  const Space& X = sph.base();
  const auto om = exterior_domain(X, 2.0);
  const auto res = perron_solve({&sph, om, {std::vector<double>(X.size(), 1.0), 0.0}, 2.0, true, 0.0});
  REQUIRE(res.converged);
  CHECK(res.connection_radius == doctest::Approx(1.0 / 9.0));
  CHECK(res.identified_with_infinity > 0);
  for (Index i : om.members()) {
    CHECK(res.u.values[i] >= -1e-9);
    CHECK(res.u.values[i] <= 1.0 + 1e-9);
  }
  // Values fall off away from the obstacle.
  CHECK(res.u.values[X.index_of("3,0,0")] > res.u.values[X.index_of("6,0,0")]);
}

TEST_CASE("minimizers agree between geometries") {
  const auto X = grid(2, 12);
  PointSet dom(X->size());
  FunctionField data{std::vector<double>(X->size()), std::nullopt};
  for (Index i = 0; i < X->size(); ++i) {
    const double r = X->remoteness(i);
    if (r > 2 && r < 10) dom.insert(i);
    data.values[i] = r >= 10 ? 1.0 + 0.1 * X->coords(i)[0] : 0.0;
  }
  const auto p2 = invariance_under_sphericalization(X, dom, data, 2.0, 1e-6);
  CHECK(p2.pass);
  CHECK(p2.sup_difference <= 1e-6);
  const auto p3 = invariance_under_sphericalization(X, dom, data, 3.0, 1e-5);
  CHECK(p3.pass);
  const auto flat = invariance_under_sphericalization(X, dom, FunctionField::constant(X->size(), 2.0), 2.0, 1e-12);
  CHECK(flat.sup_difference == 0.0);
}

TEST_CASE("barrier check rejects degenerate fields") {
  const auto sph = sphericalize(grid(3, 16), 4.0);
  const Space& X = sph.base();
  const auto om = exterior_domain(X, 2.0);
  const auto one = barrier_check(sph, om, FunctionField::constant(X.size(), 1.0), 2.0, 0.05, 0.05);
  CHECK_FALSE(one.pass);
  CHECK(one.failed_condition == 2);
  const auto zero = barrier_check(sph, om, FunctionField::constant(X.size(), 0.0), 2.0, 0.05, 0.05);
  CHECK_FALSE(zero.pass);
  CHECK(zero.failed_condition == 3);
  // A field that rises away from the obstacle is not superharmonic.
  FunctionField up{std::vector<double>(X.size()), 0.0};
  for (Index i = 0; i < X.size(); ++i) up.values[i] = 1.0 - 1.0 / (1.0 + X.remoteness(i));
  const auto rising = barrier_check(sph, om, up, 2.0, 0.001, 0.05);
  CHECK_FALSE(rising.pass);
}

TEST_CASE("inverse profile fit recovers its own coefficient") {
  const auto X = grid(3, 6);
  const auto om = exterior_domain(*X, 1.0);
  FunctionField P{std::vector<double>(X->size()), 0.0};
  for (Index i = 0; i < X->size(); ++i) P.values[i] = 1.0 - 0.4 / std::max(euclid(*X, i), 1.0);
  CHECK(fit_inverse_profile(*X, om, P) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("empty perturbation reproduces the solution bitwise") {
  const int N = 12;
  const auto X = grid(2, N);
  const auto sph = sphericalize(X, 4.0);
  const auto om = disc(*X, N);
  FunctionField f{std::vector<double>(X->size()), std::nullopt};
  for (Index i = 0; i < X->size(); ++i) f.values[i] = X->coords(i)[0] / N;
  const auto rep = resolutive_perturbation_test(sph, om, f, 2.0, {PointSet(X->size())}, 1.0, om);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].sup_difference == 0.0);
  CHECK(rep.rows[0].capacity == 0.0);

  const EnergyForm form{2.0, EnergyGeometry::Spherical};
  const auto a = solve_p_harmonic(form, sph, om, f), b = solve_p_harmonic(form, sph, om, f);
  CHECK(a.u.values == b.u.values);
}

TEST_CASE("a large boundary perturbation does not fade") {
  const int N = 12;
  const auto X = grid(2, N);
  const auto sph = sphericalize(X, 4.0);
  const auto om = disc(*X, N);
  FunctionField f{std::vector<double>(X->size()), std::nullopt};
  for (Index i = 0; i < X->size(); ++i) f.values[i] = X->coords(i)[0] / N;
  PointSet half(X->size()), quarter(X->size()), core(X->size());
  for (Index i : outer_boundary(*X, om).members()) {
    if (X->coords(i)[0] >= 0) half.insert(i);
    if (X->coords(i)[0] >= 0 && X->coords(i)[1] >= 0) quarter.insert(i);
  }
  for (Index i = 0; i < X->size(); ++i)
    if (X->remoteness(i) <= N / 2) core.insert(i);
  const auto rep = resolutive_perturbation_test(sph, om, f, 2.0, {half, quarter}, 1.0, core);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].sup_difference > 0.5);
  CHECK(rep.rows[1].capacity < rep.rows[0].capacity);
  CHECK(rep.final_difference > 0.05);
}

TEST_CASE("refinement shrinks a point perturbation") {
  const auto rows = refinement_perturbation({8, 16, 32}, 2.0, 1.0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].core_difference < rows[0].core_difference);
  CHECK(rows[2].core_difference < rows[1].core_difference);
  CHECK(rows[2].core_difference < 0.05);
}
