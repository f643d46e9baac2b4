#include "spherekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "spherekit/error.hpp"
#include "spherekit/potential.hpp"
#include "spherekit/rng.hpp"

namespace spherekit {

namespace {

void check_range(double r_min, double r_max, const char* who) {
  if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
    throw InvalidArgument(std::string(who) + ": need 0 < r_min < r_max");
}

std::vector<double> dyadic_down(double r_max, double r_min) {
  std::vector<double> out;
  for (double r = r_max; r >= r_min; r *= 0.5) out.push_back(r);
  return out;
}

struct BallPair {
  double inner = 0.0;
  double outer = 0.0;
};

// μ(B(x,r)) and μ(B(x,2r)) from one bounded search.
BallPair base_pair(const Space& X, Index x, double r) {
  BallPair b;
  for (const auto& [y, d] : X.local_ball(x, 2.0 * r, false)) {
    b.outer += X.mass(y);
    if (d < r) b.inner += X.mass(y);
  }
  return b;
}

BallPair hat_pair(const SphericalizedSpace& sph, Index x, double r) {
  BallPair b;
  for (const auto& [y, d] : sph.hat_ball_distances(x, 2.0 * r)) {
    b.outer += sph.hat_mass(y);
    if (d < r) b.inner += sph.hat_mass(y);
  }
  return b;
}

template <class Pair>
DoublingEstimate doubling_impl(std::vector<std::pair<Index, double>> anchors, std::size_t universe, double r_min,
                               double r_max, std::size_t samples, std::uint64_t seed, Pair pair) {
  check_range(r_min, r_max, "doubling_constant");
  if (samples == 0) throw InvalidArgument("doubling_constant: empty sample set");
  const std::size_t na = anchors.size();
  anchors.resize(na + samples);
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(seed, s);
    const Index c = rng.index(universe);
    anchors[na + s] = {c, rng.log_uniform(r_min, r_max)};
  }
  std::vector<BallPair> out(anchors.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(anchors.size()); ++k)
    out[k] = pair(anchors[k].first, anchors[k].second);

  DoublingEstimate est;
  est.r_min = r_min;
  est.r_max = r_max;
  est.seed = seed;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (!(out[k].inner > 0.0)) {
      ++est.skipped;
      continue;
    }
    const RatioSample row{anchors[k].first, anchors[k].second, out[k].outer / out[k].inner};
    est.evidence.push_back(row);
    if (est.samples == 0 || row.value > est.constant) {
      est.constant = row.value;
      est.argmax = row;
    }
    ++est.samples;
  }
  if (est.samples == 0) throw InvalidArgument("doubling_constant: every sampled ball was null");
  return est;
}

}  // namespace

DoublingEstimate doubling_constant(const Space& space, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed) {
  std::vector<std::pair<Index, double>> anchors;
  for (double r : dyadic_down(r_max, r_min)) anchors.push_back({space.base(), r});
  return doubling_impl(std::move(anchors), space.size(), r_min, r_max, samples, seed,
                       [&](Index x, double r) { return base_pair(space, x, r); });
}

DoublingEstimate doubling_constant(const SphericalizedSpace& sph, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed) {
  std::vector<std::pair<Index, double>> anchors;
  for (double r : dyadic_down(r_max, r_min)) {
    anchors.push_back({sph.base().base(), r});
    anchors.push_back({sph.infinity(), r});
  }
  return doubling_impl(std::move(anchors), sph.size(), r_min, r_max, samples, seed,
                       [&](Index x, double r) { return hat_pair(sph, x, r); });
}

// ---------------------------------------------------------------------------

DimensionEstimate dimension_exponents(const Space& space, double r_min, double r_max, double resolution,
                                      double s_max) {
  if (!(r_min >= 1.0)) throw InvalidArgument("dimension_exponents: r_min must be >= 1");
  if (!(r_max > r_min)) throw InvalidArgument("dimension_exponents: need r_min < r_max");
  if (r_max > space.truncation_radius() * (1.0 + 1e-12))
    throw InvalidArgument("dimension_exponents: r_max exceeds the truncation radius");
  if (!(resolution > 0.0)) throw InvalidArgument("dimension_exponents: resolution must be positive");
  DimensionEstimate est;
  est.resolution = resolution;
  for (double r = r_min; r <= r_max * (1.0 + 1e-12); r *= 2.0) {
    est.radii.push_back(r);
    est.measures.push_back(space.ball_measure({space.base(), r, false}));
  }
  if (est.radii.size() < 3) throw InvalidArgument("dimension_exponents: ladder shorter than 3 rungs");

  const std::size_t K = est.radii.size();
  const auto steps = static_cast<int>(std::floor(s_max / resolution + 1e-9));
  for (int k = 1; k <= steps; ++k) {
    const double s = k * resolution;
    double C = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < K; ++i)
      C = std::min(C, std::pow(est.radii[i + 1] / est.radii[i], s) * est.measures[i] / est.measures[i + 1]);
    bool ok = true;
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = i + 1; j < K; ++j) {
        const double ratio = est.measures[i] / est.measures[j];
        const double bound = C * std::pow(est.radii[i] / est.radii[j], s);
        if (ratio < bound * (1.0 - 1e-12)) {
          ok = false;
          est.violations.push_back({s, est.radii[i], est.radii[j], ratio, bound});
        }
      }
    est.s = s;
    est.C_s = C;
    if (ok) break;
  }
  est.q_bar_infinity = est.s;
  return est;
}

bool certifies(const DimensionEstimate& est) {
  for (std::size_t i = 0; i < est.radii.size(); ++i)
    for (std::size_t j = i + 1; j < est.radii.size(); ++j)
      if (est.measures[i] / est.measures[j] < est.C_s * std::pow(est.radii[i] / est.radii[j], est.s) * (1.0 - 1e-12))
        return false;
  return !est.radii.empty();
}

// ---------------------------------------------------------------------------

PerfectnessResult uniform_perfectness(const Space& space, double r_min, double cap, double resolution) {
  if (!(r_min > 0.0) || !(resolution > 1.0) || !(cap > 1.0))
    throw InvalidArgument("uniform_perfectness: need r_min > 0, resolution > 1, cap > 1");
  std::vector<double> D(space.remoteness());
  std::sort(D.begin(), D.end());
  D.erase(std::unique(D.begin(), D.end()), D.end());
  auto next_at_least = [&](double r) {
    auto it = std::lower_bound(D.begin(), D.end(), r);
    return it == D.end() ? std::numeric_limits<double>::infinity() : *it;
  };
  auto next_above = [&](double r) {
    auto it = std::upper_bound(D.begin(), D.end(), r);
    return it == D.end() ? std::numeric_limits<double>::infinity() : *it;
  };

  PerfectnessResult res;
  res.r_min = r_min;
  res.cap = cap;
  for (int k = 1;; ++k) {
    const double kappa = std::pow(resolution, k);
    if (kappa > cap * (1.0 + 1e-12)) break;
    const double top = space.truncation_radius() / kappa;
    res.kappa = kappa;
    res.tested_up_to = top;
    if (top < r_min) {
      res.witness_r = r_min;
      res.witness_next = next_at_least(r_min);
      continue;
    }
    // r = r_min is attained; r slightly above each remoteness value d is a
    // limit, so there the test is next ≤ κ·d.
    bool ok = next_at_least(r_min) < kappa * r_min;
    if (!ok) {
      res.witness_r = r_min;
      res.witness_next = next_at_least(r_min);
    }
    for (auto it = std::lower_bound(D.begin(), D.end(), r_min); ok && it != D.end() && *it < top; ++it) {
      const double nx = next_above(*it);
      if (nx > kappa * *it) {
        ok = false;
        res.witness_r = *it;
        res.witness_next = nx;
      }
    }
    if (ok) {
      res.ok = true;
      res.witness_r = res.witness_next = 0.0;
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

AnnularLevel check_level(const Space& X, double rho, double A, double ell) {
  AnnularLevel lvl{rho, 0, true};
  const auto& rem = X.remoteness();
  const std::size_t n = X.size();
  std::vector<Index> bin;
  for (Index i = 0; i < n; ++i)
    if (rem[i] >= rho && rem[i] < rho + ell) bin.push_back(i);
  lvl.bin_size = bin.size();
  if (bin.empty()) return lvl;
  const double lo = rho / A, hi = A * rho;
  auto inside = [&](Index i) { return rem[i] > lo && rem[i] < hi; };
  for (Index i : bin)
    if (!inside(i)) {
      lvl.passed = false;
      lvl.witness_x = bin.front();
      lvl.witness_y = i;
      return lvl;
    }
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<Index> queue{bin.front()};
  seen[bin.front()] = 1;
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    for (const auto& nb : X.neighbors(u))
      if (!seen[nb.vertex] && inside(nb.vertex)) {
        seen[nb.vertex] = 1;
        queue.push_back(nb.vertex);
      }
  }
  for (Index i : bin)
    if (!seen[i]) {
      lvl.passed = false;
      lvl.witness_x = bin.front();
      lvl.witness_y = i;
      return lvl;
    }
  return lvl;
}

}  // namespace

AnnularResult annular_connectedness(const Space& space, const std::vector<double>& A_ladder) {
  if (A_ladder.empty()) throw InvalidArgument("annular_connectedness: empty A ladder");
  std::vector<double> As(A_ladder);
  std::sort(As.begin(), As.end());
  for (double A : As)
    if (!(A > 1.0)) throw InvalidArgument("annular_connectedness: A must be > 1");
  double ell = 0.0;
  for (const auto& e : space.edges()) ell = std::max(ell, e.length);

  AnnularResult res;
  for (double A : As) {
    std::vector<AnnularLevel> levels;
    for (double rho = 1.0; A * rho <= space.truncation_radius(); rho *= 2.0)
      levels.push_back(check_level(space, rho, A, ell));
    // Longest passing suffix of nonempty levels.
    std::size_t start = levels.size(), counted = 0;
    for (std::size_t k = levels.size(); k-- > 0;) {
      if (!levels[k].passed) break;
      start = k;
      if (levels[k].bin_size) ++counted;
    }
    res.levels = levels;
    if (counted >= 2) {
      res.ok = true;
      res.A = A;
      res.R_A = levels[start].rho;
      return res;
    }
    res.A = A;
    for (std::size_t k = levels.size(); k-- > 0;)
      if (!levels[k].passed) {
        res.witness_x = levels[k].witness_x;
        res.witness_y = levels[k].witness_y;
        res.witness_rho = levels[k].rho;
        break;
      }
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

AhlforsEstimate finish_ahlfors(AhlforsEstimate est, std::vector<AhlforsSample> rows) {
  est.c_low = std::numeric_limits<double>::infinity();
  est.c_high = 0.0;
  for (const auto& row : rows) {
    if (!(row.ratio > 0.0)) continue;
    est.evidence.push_back(row);
    est.c_low = std::min(est.c_low, row.ratio);
    est.c_high = std::max(est.c_high, row.ratio);
  }
  est.samples = est.evidence.size();
  if (est.samples == 0) throw InvalidArgument("ahlfors_regularity: no admissible ball in the range");
  est.spread = est.c_high / est.c_low;
  return est;
}

}  // namespace

AhlforsEstimate ahlfors_regularity(const Space& space, double Q, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed) {
  check_range(r_min, r_max, "ahlfors_regularity");
  if (!(Q > 0.0)) throw InvalidArgument("ahlfors_regularity: Q must be positive");
  const double R = space.truncation_radius();
  std::vector<AhlforsSample> rows(samples, AhlforsSample{0, 0.0, 0.0, true});
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(samples); ++s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    const double r = rng.log_uniform(r_min, r_max);
    for (int attempt = 0; attempt < 256; ++attempt) {
      const Index x = rng.index(space.size());
      if (space.remoteness(x) + r > R) continue;
      double m = 0.0;
      for (const auto& [y, d] : space.local_ball(x, r, false)) m += space.mass(y);
      rows[s] = {x, r, m / std::pow(r, Q), true};
      break;
    }
  }
  AhlforsEstimate est;
  est.Q = Q;
  est.r_min = r_min;
  est.r_max = r_max;
  est.seed = seed;
  return finish_ahlfors(est, std::move(rows));
}

AhlforsEstimate ahlfors_regularity(const SphericalizedSpace& sph, double Q, double r_min, double r_max,
                                   std::size_t samples, std::uint64_t seed, double center_radius) {
  check_range(r_min, r_max, "ahlfors_regularity");
  if (!(Q > 0.0)) throw InvalidArgument("ahlfors_regularity: Q must be positive");
  const Space& X = sph.base();
  const double R = X.truncation_radius();
  if (center_radius < 0.0) center_radius = 0.5 * R;
  if (center_radius > 0.5 * R) throw InvalidArgument("ahlfors_regularity: centre radius exceeds R/2");
  // Eligible centres in id order, so equal seeds pick equal balls on spaces
  // that agree near a.
  std::vector<Index> centres;
  for (Index x = 0; x < X.size(); ++x)
    if (X.remoteness(x) <= center_radius) centres.push_back(x);
  std::sort(centres.begin(), centres.end(), [&](Index a, Index b) { return X.id(a) < X.id(b); });
  std::vector<AhlforsSample> rows(samples, AhlforsSample{0, 0.0, 0.0, true});
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(samples); ++s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    for (int attempt = 0; attempt < 256; ++attempt) {
      const Index x = centres[rng.index(centres.size())];
      const double t = sph.t()[x];
      // Alternate regimes. Small balls only need to clear the lattice scale;
      // large ones reach towards ∞ and also need r_min.
      const bool small = s % 2 == 0;
      const double lo = small ? 2.0 * t * t : std::max(r_min, t / 3.0);
      const double hi = small ? std::min(r_max, t / 3.0) : r_max;
      if (!(lo < hi)) continue;
      const double r = rng.log_uniform(lo, hi);
      rows[s] = {x, r, sph.hat_ball_measure(x, r) / std::pow(r, Q), r < t / 3.0};
      break;
    }
  }
  AhlforsEstimate est;
  est.Q = Q;
  est.r_min = r_min;
  est.r_max = r_max;
  est.seed = seed;
  return finish_ahlfors(est, std::move(rows));
}

// ---------------------------------------------------------------------------

int whitney_level(double r, double t) {
  int l = static_cast<int>(std::ceil(std::log2(r / t)));
  while (std::ldexp(r, -l) > t) ++l;
  while (std::ldexp(r, 1 - l) <= t) --l;
  return l;
}

WhitneyCover whitney_cover(const SphericalizedSpace& sph, double r, double lambda_hint, double annular_R) {
  if (!(lambda_hint > 0.0)) throw InvalidArgument("whitney_cover: lambda_hint must be positive");
  if (!(annular_R >= 1.0)) throw InvalidArgument("whitney_cover: annular radius must be >= 1");
  if (!(r > 0.0) || r > 1.0 / (8.0 * annular_R)) throw InvalidArgument("whitney_cover: r must lie in (0, 1/(8·R_A)]");
  const Space& X = sph.base();
  const std::size_t n = X.size();
  WhitneyCover cover;
  cover.r = r;
  cover.c0 = 1.0 / (120.0 * lambda_hint);

  std::vector<WhitneyBall> cand(n);
  for (Index z = 0; z < n; ++z) {
    const int l = whitney_level(r, sph.t()[z]);
    cand[z] = {z, l, cover.c0 * std::ldexp(r, -l)};
  }
  cover.candidates = n;
  std::vector<Index> order(n);
  for (Index z = 0; z < n; ++z) order[z] = z;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (cand[a].radius != cand[b].radius) return cand[a].radius > cand[b].radius;
    return X.id(a) < X.id(b);
  });

  // Fifth balls are small next to t_z, so they are computed up front.
  std::vector<std::vector<std::pair<Index, double>>> fifth(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t z = 0; z < static_cast<std::ptrdiff_t>(n); ++z)
    fifth[z] = sph.hat_ball_distances(static_cast<Index>(z), cand[z].radius / 5.0);

  std::vector<std::uint8_t> taken(sph.size(), 0);
  for (Index z : order) {
    bool free = true;
    for (const auto& [y, d] : fifth[z])
      if (taken[y]) {
        free = false;
        break;
      }
    if (!free) continue;
    for (const auto& [y, d] : fifth[z]) taken[y] = 1;
    cover.balls.push_back(cand[z]);
  }

  // Exact verification of the selection.
  cover.radii_law = cover.level_bounds = cover.disjoint = true;
  std::vector<std::uint32_t> owner(sph.size(), 0), overlap(sph.size(), 0);
  const std::size_t B = cover.balls.size();
  std::vector<std::vector<std::pair<Index, double>>> full(B);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(B); ++k)
    full[k] = sph.hat_ball_distances(cover.balls[k].z, cover.balls[k].radius);
  cover.l0 = std::numeric_limits<int>::max();
  for (std::size_t k = 0; k < B; ++k) {
    const auto& b = cover.balls[k];
    const double t = sph.t()[b.z];
    if (b.radius != cover.c0 * std::ldexp(r, -b.level)) cover.radii_law = false;
    if (!(std::ldexp(r, -b.level) <= t && t < std::ldexp(r, 1 - b.level))) cover.level_bounds = false;
    ++cover.per_level[b.level];
    for (const auto& [y, d] : sph.hat_ball_distances(b.z, b.radius / 5.0)) {
      if (owner[y]) cover.disjoint = false;
      owner[y] = static_cast<std::uint32_t>(k + 1);
    }
    bool meets = false;
    for (const auto& [y, d] : full[k]) {
      ++overlap[y];
      if (y < n && sph.t()[y] < r) meets = true;
    }
    if (meets) {
      ++cover.meeting_infinity_ball;
      cover.l0 = std::min(cover.l0, b.level);
    }
  }
  if (cover.meeting_infinity_ball == 0) cover.l0 = 0;
  cover.covers = true;
  for (Index y = 0; y < n; ++y) {
    if (overlap[y] == 0) cover.covers = false;
    cover.max_overlap = std::max<std::size_t>(cover.max_overlap, overlap[y]);
  }
  for (const auto& [l, c] : cover.per_level) cover.M = std::max(cover.M, c);
  return cover;
}

// ---------------------------------------------------------------------------

std::vector<TestFunction> default_battery(const Space& space, std::size_t distance_functions, std::uint64_t seed) {
  const std::size_t n = space.size();
  std::vector<TestFunction> out;
  const std::size_t dim = space.coords(0).size();
  for (std::size_t axis = 0; axis < dim; ++axis) {
    TestFunction f{"coord" + std::to_string(axis), std::vector<double>(n)};
    for (Index i = 0; i < n; ++i) f.values[i] = space.coords(i)[axis];
    out.push_back(std::move(f));
  }
  out.push_back({"remoteness", space.remoteness()});

  const double R = std::max(space.truncation_radius(), 1.0);
  std::vector<double> row;
  for (std::size_t k = 0; k < distance_functions; ++k) {
    Rng rng(seed, k);
    const Index c = rng.index(n);
    space.distance_row(c, row);
    out.push_back({"dist:" + space.id(c), row});
  }
  if (dim > 0) {
    for (std::size_t axis = 0; axis < dim; ++axis) {
      TestFunction f{"cos" + std::to_string(axis), std::vector<double>(n)};
      for (Index i = 0; i < n; ++i) f.values[i] = std::cos(std::numbers::pi * space.coords(i)[axis] / R);
      out.push_back(std::move(f));
    }
    TestFunction f{"cos-diag", std::vector<double>(n)};
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (double c : space.coords(i)) s += c;
      f.values[i] = std::cos(2.0 * std::numbers::pi * s / R);
    }
    out.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < 2; ++k) {
    Rng rng(seed ^ 0xd1b54a32d192ed03ULL, k);
    const Index c = rng.index(n), far = rng.index(n);
    PointSet dom(n);
    for (const auto& [y, d] : space.local_ball(c, 0.25 * R, false)) dom.insert(y);
    if (dom.size() == n || dom.empty()) continue;
    space.distance_row(far, row);
    FunctionField data{std::vector<double>(n), std::nullopt};
    for (Index i = 0; i < n; ++i) data.values[i] = std::cos(std::numbers::pi * row[i] / R);
    if (outer_boundary(space, dom).empty()) continue;
    auto sol = solve_p_harmonic({2.0, EnergyGeometry::Base}, space, dom, data);
    out.push_back({"dirichlet:" + space.id(c), sol.u.values});
  }
  return out;
}

namespace {

template <class Members>
PoincareEstimate poincare_impl(const Space& X, std::span<const double> mass, std::span<const double> edge_len,
                               double p, double lambda, const std::vector<BallQuery>& balls,
                               const std::vector<TestFunction>& battery, Members members) {
  if (!(p >= 1.0)) throw InvalidArgument("poincare_probe: p must be >= 1");
  if (!(lambda >= 1.0)) throw InvalidArgument("poincare_probe: lambda must be >= 1");
  if (battery.empty()) throw InvalidArgument("poincare_probe: empty battery");
  const std::size_t n = X.size();
  const auto& edges = X.edges();
  std::vector<std::vector<double>> grad(battery.size(), std::vector<double>(n, 0.0));
  for (std::size_t f = 0; f < battery.size(); ++f) {
    const auto& u = battery[f].values;
    if (u.size() != n) throw InvalidArgument("poincare_probe: test function '" + battery[f].name + "' has wrong size");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double s = std::abs(u[edges[e].u] - u[edges[e].v]) / edge_len[e];
      grad[f][edges[e].u] = std::max(grad[f][edges[e].u], s);
      grad[f][edges[e].v] = std::max(grad[f][edges[e].v], s);
    }
  }

  struct Out {
    std::vector<PoincareRow> rows;
    std::size_t skipped = 0;
  };
  std::vector<Out> per_ball(balls.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(balls.size()); ++b) {
    const auto& q = balls[b];
    const std::vector<Index> B = members(q.center, q.radius);
    const std::vector<Index> LB = members(q.center, lambda * q.radius);
    double mB = 0.0, mL = 0.0;
    for (Index i : B) mB += mass[i];
    for (Index i : LB) mL += mass[i];
    if (!(mB > 0.0) || !(mL > 0.0)) {
      per_ball[b].skipped += battery.size();
      continue;
    }
    for (std::size_t f = 0; f < battery.size(); ++f) {
      const auto& u = battery[f].values;
      double mean = 0.0;
      for (Index i : B) mean += mass[i] * u[i];
      mean /= mB;
      double dev = 0.0;
      for (Index i : B) dev += mass[i] * std::abs(u[i] - mean);
      dev /= mB;
      double G = 0.0;
      for (Index i : LB) G += mass[i] * std::pow(grad[f][i], p);
      G = std::pow(G / mL, 1.0 / p);
      if (!(G > 0.0)) {
        ++per_ball[b].skipped;
        continue;
      }
      per_ball[b].rows.push_back({q.center, q.radius, f, dev / (q.radius * G)});
    }
  }
  PoincareEstimate est;
  est.p = p;
  est.lambda = lambda;
  for (auto& o : per_ball) {
    est.skipped += o.skipped;
    for (const auto& row : o.rows) {
      ++est.evaluated;
      if (row.ratio > est.constant) {
        est.constant = row.ratio;
        est.argmax = row;
      }
      est.evidence.push_back(row);
    }
  }
  return est;
}

}  // namespace

std::vector<BallQuery> sample_balls(const Space& space, double r_min, double r_max, double lambda, std::size_t count,
                                    std::uint64_t seed) {
  check_range(r_min, r_max, "sample_balls");
  std::vector<BallQuery> out;
  const double R = space.truncation_radius();
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(seed, s);
    const double r = rng.log_uniform(r_min, r_max);
    for (int attempt = 0; attempt < 256; ++attempt) {
      const Index x = rng.index(space.size());
      if (space.remoteness(x) + lambda * r > R) continue;
      out.push_back({x, r, false});
      break;
    }
  }
  return out;
}

std::vector<BallQuery> sample_hat_balls(const SphericalizedSpace& sph, double r_min, double r_max,
                                        std::size_t count, std::uint64_t seed, bool at_infinity) {
  check_range(r_min, r_max, "sample_hat_balls");
  std::vector<BallQuery> out;
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(seed, s);
    const double r = rng.log_uniform(r_min, r_max);
    const Index c = at_infinity ? sph.infinity() : rng.index(sph.base().size());
    out.push_back({c, r, false});
  }
  return out;
}

PoincareEstimate poincare_probe(const Space& space, double p, double lambda, const std::vector<BallQuery>& balls,
                                const std::vector<TestFunction>& battery) {
  std::vector<double> len;
  for (const auto& e : space.edges()) len.push_back(e.length);
  return poincare_impl(space, space.masses(), len, p, lambda, balls, battery, [&](Index c, double r) {
    std::vector<Index> m;
    for (const auto& [y, d] : space.local_ball(c, r, false)) m.push_back(y);
    return m;
  });
}

PoincareEstimate poincare_probe(const SphericalizedSpace& sph, double p, double lambda,
                                const std::vector<BallQuery>& balls, const std::vector<TestFunction>& battery) {
  const Space& X = sph.base();
  std::vector<double> len;
  for (const auto& e : X.edges()) len.push_back(e.length * (sph.t()[e.u] * sph.t()[e.v]));
  const std::span<const double> mass(sph.hat_masses().data(), X.size());
  return poincare_impl(X, mass, len, p, lambda, balls, battery, [&](Index c, double r) {
    std::vector<Index> m;
    for (const auto& [y, d] : sph.hat_ball_distances(c, r))
      if (!sph.is_infinity(y)) m.push_back(y);
    return m;
  });
}

// ---------------------------------------------------------------------------

NecessityReport necessity_experiment(const std::vector<std::shared_ptr<const Space>>& ladder, double q,
                                     const NecessityOptions& options) {
  if (ladder.size() < 3) throw InvalidArgument("necessity_experiment: ladder needs at least 3 truncations");
  if (!(q > 0.0)) throw InvalidArgument("necessity_experiment: q must be positive");
  NecessityReport rep;
  rep.q = q;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& space : ladder) {
    const double R = space->truncation_radius();
    const auto sph = sphericalize(space, q);
    NecessityRung rung{R, doubling_constant(sph, options.r_low_factor / (1.0 + R), options.r_max, options.samples,
                                            options.seed),
                       dimension_exponents(*space, options.dim_r_min, 0.5 * R)};
    if (!rep.rungs.empty()) rep.trend.push_back(rung.doubling.constant / rep.rungs.back().doubling.constant);
    lo = std::min(lo, rung.doubling.constant);
    hi = std::max(hi, rung.doubling.constant);
    rep.rungs.push_back(std::move(rung));
  }
  rep.spread = hi / lo;
  rep.s = rep.rungs.back().dimension.s;
  rep.verdict = rep.spread <= options.stability_factor && rep.s < q ? "DOUBLING-STABLE" : "DIVERGES";
  return rep;
}

}  // namespace spherekit
