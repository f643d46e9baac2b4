#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "oracles.hpp"
#include "spherekit/error.hpp"
#include "spherekit/kernels.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;

namespace {

std::shared_ptr<const Space> grid(int dim, int R, double alpha = 0.0) {
  return std::make_shared<const Space>(generate_grid(dim, R, alpha));
}

std::set<std::string> ids_of(const SphericalizedSpace& sph, const PointSet& s) {
  std::set<std::string> out;
  for (Index i : s.members()) out.insert(sph.id(i));
  return out;
}

}  // namespace

TEST_CASE("quasimetric values on the 1-D grid") {
  const auto sph = sphericalize(grid(1, 8), 4.0);
  const Space& X = sph.base();
  const Index inf = sph.infinity();
  CHECK(sph.d_a(X.index_of("1"), X.index_of("3")) == 0.25);
  CHECK(sph.d_a(X.base(), inf) == 1.0);
  CHECK(sph.d_a(X.index_of("4"), inf) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(sph.d_hat(X.base(), inf) == 1.0);
  CHECK(sph.chain_metric(X.base())[inf] == 1.0);
  for (Index x = 0; x < sph.size(); ++x) CHECK(sph.chain_metric(x)[x] == 0.0);
}

TEST_CASE("hat masses") {
  const auto sph = sphericalize(grid(1, 2), 4.0);
  CHECK(sph.hat_mass(sph.base().index_of("1")) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(sph.hat_mass(sph.infinity()) == 0.0);
  const auto sph2 = sph.with_q(2.0);
  CHECK(sph2.total_hat_mass() == doctest::Approx(1.0 + 2.0 / 4.0 + 2.0 / 9.0).epsilon(1e-14));
  CHECK_THROWS_AS(sphericalize(grid(1, 2), 0.0), InvalidArgument);
}

TEST_CASE("hat balls at infinity and at the base point") {
  const auto sph = sphericalize(grid(1, 4), 4.0);
  const std::set<std::string> expect{"-4", "-3", "-2", "2", "3", "4", SphericalizedSpace::kInfinityId};
  CHECK(ids_of(sph, sph.hat_ball(sph.infinity(), 0.4)) == expect);
  CHECK(sph.hat_ball(sph.base().base(), 1.01).size() == sph.size());
  // At the truncation edge only ∞ itself remains.
  CHECK(sph.hat_ball(sph.infinity(), 1.0 / 5.0).members() == std::vector<Index>{sph.infinity()});
}

TEST_CASE("hat ball at infinity is the complement of a closed base ball") {
  for (const auto& X : {grid(1, 40), grid(2, 12)}) {
    const auto sph = sphericalize(X, 3.0);
    Rng rng(3, 0);
    for (int k = 0; k < 50; ++k) {
      const double r = rng.log_uniform(0.02, 1.2);
      const auto got = sph.hat_ball(sph.infinity(), r);
      for (Index x = 0; x < X->size(); ++x) CHECK(got.contains(x) == !(X->remoteness(x) <= 1.0 / r - 1.0));
      CHECK(got.contains(sph.infinity()));
    }
  }
}

TEST_CASE("chain metric against brute-force relay sequences") {
  const auto X = grid(1, 8);
  REQUIRE(X->size() == 17);
  const auto sph = sphericalize(X, 4.0);
  const auto q = oracle::quasimetric(oracle::floyd(*X), X->base());
  const Index one = X->index_of("1"), three = X->index_of("3");
  const double dh = sph.d_hat(one, three);
  CHECK(dh >= 0.0625);
  CHECK(dh <= 0.25);
  CHECK(dh == oracle::relay_min(q, one, three, 4));
  // Ties within the relaxation margin keep the direct chain.
  for (Index x = 0; x < sph.size(); x += 3)
    for (Index y = 0; y < sph.size(); ++y) {
      const double want = oracle::relay_min(q, x, y, 4);
      CHECK(sph.d_hat(x, y) >= want);
      CHECK(sph.d_hat(x, y) * kernels::kRelaxShrink <= want);
    }
}

TEST_CASE("sandwich, symmetry and triangle inequality on a random cloud") {
  const auto X = std::make_shared<const Space>(generate_random_cloud(8, {150, 4, 0.5, 2.0}));
  const auto sph = sphericalize(X, 2.0);
  const std::size_t m = sph.size();
  for (Index x = 0; x < m; ++x) {
    const auto row = sph.chain_metric(x);
    for (Index y = 0; y < m; ++y) {
      REQUIRE(row[y] <= sph.d_a(x, y));
      REQUIRE(row[y] >= 0.25 * sph.d_a(x, y));
      REQUIRE(sph.d_hat(x, y) == sph.d_hat(y, x));
      REQUIRE(std::abs(row[y] - sph.d_hat(x, y)) <= 8e-16 * row[y]);
      REQUIRE(sph.d_a(x, y) == sph.d_a(y, x));
    }
  }
  for (Index x = 0; x < m; x += 7)
    for (Index z = 0; z < m; z += 11)
      for (Index y = 0; y < m; ++y)
        REQUIRE(sph.d_hat(x, z) <= (sph.d_hat(x, y) + sph.d_hat(y, z)) * (1 + 1e-15));
}

TEST_CASE("hat balls around ordinary centres match chain rows") {
  const auto X = std::make_shared<const Space>(generate_random_cloud(2, {120, 4, 0.5, 2.0}));
  const auto sph = sphericalize(X, 2.0);
  Rng rng(9, 0);
  for (int k = 0; k < 20; ++k) {
    const Index c = rng.index(X->size());
    const double r = rng.uniform(0.01, 0.6);
    const auto ball = sph.hat_ball(c, r);
    const auto row = sph.chain_metric(c);
    double mass = 0.0;
    for (Index y = 0; y < sph.size(); ++y) {
      CHECK(ball.contains(y) == (row[y] < r));
      if (row[y] < r) mass += sph.hat_mass(y);
    }
    CHECK(sph.hat_ball_measure(c, r) == doctest::Approx(mass).epsilon(1e-14));
  }
}

TEST_CASE("ball inclusions hold exactly") {
  const auto sph = sphericalize(grid(2, 32), 4.0);
  const auto rep = verify_ball_inclusions(sph, 500, 1);
  CHECK(rep.samples.size() == 500);
  CHECK(rep.violations == 0);
  CHECK(rep.small_samples > 0);
  CHECK(rep.large_samples > 0);
}

TEST_CASE("small-radius inclusion worked by hand") {
  const auto sph = sphericalize(grid(1, 8), 4.0);
  const Space& X = sph.base();
  const Index x = X.index_of("2");
  CHECK(sph.remoteness_hat(x) == doctest::Approx(1.0 / 3.0));
  const auto inner = X.ball({x, 0.675, false});
  const auto outer = X.ball({x, 1.35, false});
  const auto qb = sph.quasi_ball(x, 0.1);
  CHECK(inner.members() == std::vector<Index>{x});
  CHECK(outer.size() == 3);
  for (Index i : inner.members()) CHECK(qb.contains(i));
  for (Index i : qb.members()) CHECK(outer.contains(i));
}

TEST_CASE("gradient transform") {
  const auto sph = sphericalize(grid(1, 6), 4.0);
  const Space& X = sph.base();
  EdgeGradientField g{std::vector<double>(X.edges().size(), 1.0)};
  const auto fwd = transform_gradient(sph, g, GradientDirection::Forward);
  for (std::size_t e = 0; e < X.edges().size(); ++e) {
    const auto& edge = X.edges()[e];
    if (X.remoteness(edge.u) + X.remoteness(edge.v) == 1.0) CHECK(fwd.values[e] == 2.0);
  }

  Rng rng(1, 0);
  for (auto& v : g.values) v = rng.uniform(0.0, 5.0);
  const auto round = transform_gradient(sph, transform_gradient(sph, g, GradientDirection::Forward),
                                        GradientDirection::Inverse);
  CHECK(round.values == g.values);

  // For u(x) = x the forward field measures increments in d_a.
  const auto ghat = transform_gradient(sph, EdgeGradientField{std::vector<double>(X.edges().size(), 1.0)},
                                       GradientDirection::Forward);
  for (std::size_t e = 0; e < X.edges().size(); ++e) {
    const auto& edge = X.edges()[e];
    const double du = std::abs(X.coords(edge.u)[0] - X.coords(edge.v)[0]);
    CHECK(du == doctest::Approx(ghat.values[e] * sph.d_a(edge.u, edge.v)).epsilon(1e-15));
  }
}

TEST_CASE("serialized sphericalization carries hat masses") {
  const auto sph = sphericalize(grid(1, 2), 2.0);
  const auto doc = serialize_sphericalized(sph);
  CHECK(doc.at("q") == 2.0);
  CHECK(doc.at("hat_masses").size() == 6);
}
