#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <limits>
#include <memory>

#include "spherekit/kernels.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;
using kernels::Exec;

namespace {

struct Threads {
  int saved = omp_get_max_threads();
  explicit Threads(int n) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
};

kernels::EdgeSystem system_of(const Space& X, std::uint64_t seed) {
  kernels::EdgeSystem sys;
  sys.vertices = X.size();
  Rng rng(seed, 0);
  for (const auto& e : X.edges()) {
    sys.u.push_back(static_cast<std::uint32_t>(e.u));
    sys.v.push_back(static_cast<std::uint32_t>(e.v));
    sys.kappa.push_back(rng.uniform(0.1, 2.0));
  }
  sys.finalize();
  return sys;
}

std::vector<double> random_field(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 1);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

std::vector<double> t_of(const Space& X) {
  std::vector<double> t(X.size());
  for (Index i = 0; i < X.size(); ++i) t[i] = 1.0 / (1.0 + X.remoteness(i));
  return t;
}

}  // namespace

TEST_CASE("energy kernels agree bitwise between backends") {
  Threads guard(4);
  const Space X = generate_grid(2, 40, 0.0);
  const auto sys = system_of(X, 5);
  const auto x = random_field(X.size(), 6);
  for (double p : {1.5, 2.0, 3.0}) {
    const double delta = 1e-3;
    CHECK(kernels::smoothed_energy(Exec::Serial, sys, x, p, delta) ==
          kernels::smoothed_energy(Exec::Parallel, sys, x, p, delta));

    std::vector<double> gs(X.size()), gp(X.size());
    kernels::smoothed_gradient(Exec::Serial, sys, x, p, delta, gs);
    kernels::smoothed_gradient(Exec::Parallel, sys, x, p, delta, gp);
    CHECK(gs == gp);

    std::vector<double> hs(sys.edges()), hp(sys.edges());
    kernels::hessian_weights(Exec::Serial, sys, x, p, delta, hs);
    kernels::hessian_weights(Exec::Parallel, sys, x, p, delta, hp);
    CHECK(hs == hp);

    std::vector<double> ys(X.size()), yp(X.size());
    kernels::laplacian_apply(Exec::Serial, sys, hs, x, ys);
    kernels::laplacian_apply(Exec::Parallel, sys, hs, x, yp);
    CHECK(ys == yp);
  }
  const auto y = random_field(X.size(), 7);
  CHECK(kernels::dot(Exec::Serial, x, y) == kernels::dot(Exec::Parallel, x, y));
}

TEST_CASE("gradient kernel is the derivative of the energy kernel") {
  const Space X = generate_grid(2, 6, 0.0);
  const auto sys = system_of(X, 1);
  auto x = random_field(X.size(), 2);
  const double p = 3.0, delta = 1e-2;
  std::vector<double> g(X.size());
  kernels::smoothed_gradient(Exec::Serial, sys, x, p, delta, g);
  for (Index i = 0; i < X.size(); i += 5) {
    const double h = 1e-6, keep = x[i];
    x[i] = keep + h;
    const double up = kernels::smoothed_energy(Exec::Serial, sys, x, p, delta);
    x[i] = keep - h;
    const double down = kernels::smoothed_energy(Exec::Serial, sys, x, p, delta);
    x[i] = keep;
    CHECK(g[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("chain shortest paths agree bitwise between backends") {
  Threads guard(4);
  for (const Space& X : {generate_grid(2, 48, 0.0), generate_random_cloud(3, {3000, 4, 0.5, 2.0})}) {
    const auto t = t_of(X);
    std::vector<double> ds, dp;
    for (Index src : {X.base(), Index{7}, X.size()}) {
      kernels::chain_sssp(Exec::Serial, X, t, src, std::numeric_limits<double>::infinity(), ds);
      kernels::chain_sssp(Exec::Parallel, X, t, src, std::numeric_limits<double>::infinity(), dp);
      CHECK(ds == dp);
      kernels::chain_sssp(Exec::Serial, X, t, src, 0.05, ds);
      kernels::chain_sssp(Exec::Parallel, X, t, src, 0.05, dp);
      CHECK(ds == dp);
    }
  }
}

TEST_CASE("bounded chain search leaves far points unset") {
  const Space X = generate_grid(1, 20, 0.0);
  const auto t = t_of(X);
  std::vector<double> full, bounded;
  kernels::chain_sssp(Exec::Serial, X, t, X.base(), std::numeric_limits<double>::infinity(), full);
  kernels::chain_sssp(Exec::Serial, X, t, X.base(), 0.5, bounded);
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full[i] < 0.5)
      CHECK(bounded[i] == full[i]);
    else
      CHECK(bounded[i] == std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("ball measure kernel agrees between backends and with the space") {
  Threads guard(4);
  const Space X = generate_random_cloud(4, {500, 4, 0.5, 2.0});
  Rng rng(8, 0);
  std::vector<BallQuery> qs;
  for (int k = 0; k < 64; ++k) qs.push_back({rng.index(X.size()), rng.uniform(0.5, 10.0), k % 2 == 0});
  std::vector<double> ms(qs.size()), mp(qs.size());
  kernels::ball_measures(Exec::Serial, X, qs, ms);
  kernels::ball_measures(Exec::Parallel, X, qs, mp);
  CHECK(ms == mp);
  for (std::size_t k = 0; k < qs.size(); ++k) CHECK(ms[k] == X.ball_measure(qs[k]));
}

TEST_CASE("sphericalized rows do not depend on the backend") {
  Threads guard(4);
  auto X = std::make_shared<const Space>(generate_grid(2, 24, 0.0));
  auto a = sphericalize(X, 4.0);
  auto b = sphericalize(std::make_shared<const Space>(generate_grid(2, 24, 0.0)), 4.0);
  a.set_exec(Exec::Serial);
  b.set_exec(Exec::Parallel);
  for (Index src : {Index{0}, Index{300}, a.infinity()}) {
    const auto ra = a.chain_metric(src), rb = b.chain_metric(src);
    CHECK(std::equal(ra.begin(), ra.end(), rb.begin(), rb.end()));
  }
}
