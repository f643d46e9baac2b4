#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "spherekit/error.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/space_io.hpp"

using namespace spherekit;

namespace {

std::string two_point_doc(double len) {
  return R"({"points":[{"id":"p","mass":1},{"id":"q","mass":1}],"edges":[{"u":"p","v":"q","len":)" +
         std::to_string(len) + R"(}],"base":"p"})";
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal document loads") {
  const Space X = load_space_text(two_point_doc(1.0));
  CHECK(X.size() == 2);
  CHECK(X.metric(0, 1) == 1.0);
  CHECK(X.id(X.base()) == "p");
}

TEST_CASE("invalid documents name the offending field") {
  CHECK(field_of([] { load_space_text(two_point_doc(0.0)); }) == "edges[0].len");
  CHECK(field_of([] {
          load_space_text(R"({"points":[{"id":"p","mass":1},{"id":"q","mass":1}],"edges":[],"base":"p"})");
        }) == "edges");
  CHECK(field_of([] {
          load_space_text(R"({"points":[{"id":"p","mass":1}],"edges":[],"base":"z"})");
        }) == "base");
  CHECK(field_of([] {
          load_space_text(R"({"points":[{"id":"p","mass":-1}],"edges":[],"base":"p"})");
        }) == "points[0].mass");
  CHECK(field_of([] {
          load_space_text(R"({"points":[{"id":"p","mass":1}],"edges":[{"u":"p","v":"x","len":1}],"base":"p"})");
        }) == "edges[0].v");
}

TEST_CASE("path graph distances") {
  const Space P5 = oracle::path_graph(5);
  CHECK(P5.metric(0, 4) == 4.0);
  const Space P3 = oracle::path_graph(3);
  CHECK(P3.metric(0, 2) == 2.0);
  for (Index i = 0; i < P5.size(); ++i) CHECK(P5.metric(i, i) == 0.0);
}

TEST_CASE("grid generator counts") {
  const Space g1 = generate_grid(1, 2, 0.0);
  CHECK(g1.size() == 5);
  CHECK(g1.edges().size() == 4);
  for (Index i = 0; i < g1.size(); ++i) CHECK(g1.mass(i) == 1.0);
  CHECK(g1.remoteness(g1.index_of("2")) == 2.0);
  CHECK(g1.remoteness(g1.base()) == 0.0);

  const Space g2 = generate_grid(2, 1, 0.0);
  CHECK(g2.size() == 9);
  CHECK(g2.edges().size() == 12);
  CHECK(g2.metric(g2.index_of("-1,-1"), g2.index_of("1,1")) == 4.0);
  CHECK(g2.remoteness(g2.index_of("1,1")) == 2.0);

  const Space g3 = generate_grid(3, 2, 1.0);
  CHECK(g3.size() == 125);
  CHECK(g3.edges().size() == 3 * 5 * 5 * 4);
  CHECK(g3.mass(g3.index_of("1,2,2")) == doctest::Approx(4.0));
}

TEST_CASE("2-D grid balls grow quadratically") {
  const Space X = generate_grid(2, 64, 0.0);
  double lo = 1e300, hi = 0.0;
  for (double r = 4; r <= 32; r += 1) {
    const double v = X.ball_measure({X.base(), r, false}) / (r * r);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo <= 8.0);
  // Open L1 ball of integer radius r holds 2r² − 2r + 1 points.
  for (int r = 1; r <= 20; ++r) CHECK(X.ball_measure({X.base(), double(r), false}) == 2.0 * r * r - 2.0 * r + 1.0);
}

TEST_CASE("small balls on the 1-D grid") {
  const Space X = generate_grid(1, 2, 0.0);
  const Index a = X.base();
  CHECK(X.ball({a, 0.5, false}).members() == std::vector<Index>{a});
  CHECK(X.ball_measure({a, 0.5, false}) == X.mass(a));
  CHECK(X.ball_measure({a, 1.5, false}) == 3.0);
  const auto closed = X.ball({a, 1.0, true});
  CHECK(closed.size() == 3);
  CHECK(closed.contains(X.index_of("-1")));
  CHECK(closed.contains(X.index_of("1")));
  CHECK(X.ball({a, 1.0, false}).size() == 1);
}

TEST_CASE("metric axioms and Floyd–Warshall agreement on random clouds") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Space X = generate_random_cloud(seed, {120, 4, 0.5, 2.0});
    const auto F = oracle::floyd(X);
    const std::size_t n = X.size();
    for (Index x = 0; x < n; ++x)
      for (Index y = 0; y < n; ++y) {
        const double d = X.metric(x, y);
        REQUIRE(d == doctest::Approx(F[x][y]).epsilon(1e-12));
        REQUIRE(d == X.metric(y, x));
        REQUIRE((d == 0.0) == (x == y));
      }
    for (Index x = 0; x < n; x += 3)
      for (Index y = 0; y < n; ++y)
        for (Index z = 0; z < n; z += 5) REQUIRE(X.metric(x, z) <= (X.metric(x, y) + X.metric(y, z)) * (1 + 1e-14));
  }
}

TEST_CASE("ball measures match brute-force summation and grow with r") {
  const Space X = generate_random_cloud(11, {150, 5, 0.5, 2.0});
  Rng rng(4, 0);
  for (int k = 0; k < 60; ++k) {
    const Index c = rng.index(X.size());
    const double r = rng.uniform(0.1, 8.0);
    double brute = 0.0, brute_closed = 0.0;
    for (Index y = 0; y < X.size(); ++y) {
      if (X.metric(c, y) < r) brute += X.mass(y);
      if (X.metric(c, y) <= r) brute_closed += X.mass(y);
    }
    CHECK(X.ball_measure({c, r, false}) == doctest::Approx(brute).epsilon(1e-14));
    CHECK(X.ball_measure({c, r, true}) == doctest::Approx(brute_closed).epsilon(1e-14));
    const auto small = X.ball({c, r, false}), big = X.ball({c, r * 1.3, false});
    for (Index i : small.members()) CHECK(big.contains(i));
    CHECK(X.ball_measure({c, r * 1.3, false}) >= X.ball_measure({c, r, false}));
  }
}

TEST_CASE("local ball search agrees with full rows") {
  const Space X = generate_random_cloud(5, {200, 4, 0.5, 2.0});
  for (Index c : {Index{0}, Index{17}, Index{101}}) {
    const auto local = X.local_ball(c, 3.5, false);
    const auto row = X.distances_from(c);
    std::size_t k = 0;
    for (Index y = 0; y < X.size(); ++y) {
      if (row[y] >= 3.5) continue;
      REQUIRE(k < local.size());
      CHECK(local[k].first == y);
      CHECK(local[k].second == doctest::Approx(row[y]).epsilon(1e-13));
      ++k;
    }
    CHECK(k == local.size());
  }
}

TEST_CASE("lattice rows equal graph shortest paths") {
  const Space X = generate_grid(2, 6, 0.5);
  const auto F = oracle::floyd(X);
  for (Index x = 0; x < X.size(); x += 7)
    for (Index y = 0; y < X.size(); ++y) CHECK(X.metric(x, y) == F[x][y]);
}

TEST_CASE("space documents round-trip exactly") {
  for (const Space& X : {generate_grid(2, 4, 1.5), generate_random_cloud(9, {80, 4, 0.5, 2.0})}) {
    const auto doc = serialize_space(X);
    const Space Y = load_space(doc);
    CHECK(serialize_space(Y) == doc);
    CHECK(Y.size() == X.size());
    for (Index i = 0; i < X.size(); ++i) {
      CHECK(Y.id(i) == X.id(i));
      CHECK(Y.mass(i) == X.mass(i));
      CHECK(Y.remoteness(i) == X.remoteness(i));
    }
    CHECK(Y.truncation_radius() == X.truncation_radius());
  }
}

TEST_CASE("random clouds are deterministic in the seed") {
  const auto a = serialize_space(generate_random_cloud(42, {})), b = serialize_space(generate_random_cloud(42, {}));
  CHECK(a == b);
  CHECK(serialize_space(generate_random_cloud(43, {})) != a);
}
