#include "spherekit/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <queue>

#include "spherekit/error.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space_io.hpp"

namespace spherekit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

struct SphericalizedSpace::ChainCache {
  explicit ChainCache(std::size_t n) : rows(n), flags(new std::once_flag[n]) {}
  std::vector<std::unique_ptr<std::vector<double>>> rows;
  std::unique_ptr<std::once_flag[]> flags;
};

SphericalizedSpace::SphericalizedSpace(std::shared_ptr<const Space> base, double q) : base_(std::move(base)), q_(q) {
  if (!base_) throw InvalidArgument("sphericalize: null base space");
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("sphericalize: q must be a positive finite number");
  const std::size_t n = base_->size();
  t_.resize(n);
  hat_masses_.resize(n + 1);
  for (Index i = 0; i < n; ++i) {
    const double one_plus = 1.0 + base_->remoteness(i);
    t_[i] = 1.0 / one_plus;
    hat_masses_[i] = base_->mass(i) / std::pow(one_plus, q);
    total_hat_mass_ += hat_masses_[i];
  }
  hat_masses_[n] = 0.0;
  by_remoteness_desc_.resize(n);
  for (Index i = 0; i < n; ++i) by_remoteness_desc_[i] = i;
  std::stable_sort(by_remoteness_desc_.begin(), by_remoteness_desc_.end(),
                   [&](Index a, Index b) { return t_[a] < t_[b]; });
  cache_ = std::make_shared<ChainCache>(n + 1);
}

SphericalizedSpace SphericalizedSpace::with_q(double q) const {
  SphericalizedSpace out(base_, q);
  out.cache_ = cache_;
  out.exec_ = exec_;
  return out;
}

SphericalizedSpace sphericalize(std::shared_ptr<const Space> base, double q) {
  return SphericalizedSpace(std::move(base), q);
}

std::string SphericalizedSpace::id(Index i) const {
  check(i);
  return is_infinity(i) ? std::string(kInfinityId) : base_->id(i);
}

void SphericalizedSpace::check(Index i) const {
  if (i > base_->size()) throw InvalidArgument("unknown point index " + std::to_string(i));
}

double SphericalizedSpace::d_a(Index x, Index y) const {
  check(x);
  check(y);
  if (x == y) return 0.0;
  if (is_infinity(x)) return t_[y];
  if (is_infinity(y)) return t_[x];
  return base_->metric(x, y) * (t_[x] * t_[y]);
}

std::span<const double> SphericalizedSpace::chain_metric(Index source) const {
  check(source);
  std::call_once(cache_->flags[source], [&] {
    auto row = std::make_unique<std::vector<double>>();
    kernels::chain_sssp(exec_, *base_, t_, source, kInf, *row);
    cache_->rows[source] = std::move(row);
  });
  return *cache_->rows[source];
}

double SphericalizedSpace::d_hat(Index x, Index y) const {
  // Evaluate from the smaller index so the accessor is symmetric bitwise.
  return x <= y ? chain_metric(x)[y] : chain_metric(y)[x];
}

std::vector<std::pair<Index, double>> SphericalizedSpace::local_search(Index center, double radius) const {
  const std::size_t n = base_->size();
  const Index inf = n;
  thread_local std::vector<double> tent;
  thread_local std::vector<std::uint8_t> done;
  thread_local std::vector<Index> touched;
  if (tent.size() < n + 1) {
    tent.assign(n + 1, kInf);
    done.assign(n + 1, 0);
  }
  auto touch = [&](Index y) {
    if (tent[y] == kInf && !done[y]) touched.push_back(y);
  };
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  auto relax = [&](Index y, double cand) {
    if (done[y] || !(cand < radius)) return;
    if (cand < tent[y] * kernels::kRelaxShrink) {
      touch(y);
      tent[y] = cand;
      heap.push({cand, y});
    }
  };
  std::vector<std::pair<Index, double>> out;
  touch(center);
  tent[center] = 0.0;
  heap.push({0.0, center});
  while (!heap.empty()) {
    auto [d, w] = heap.top();
    heap.pop();
    if (done[w] || d != tent[w]) continue;
    done[w] = 1;
    out.emplace_back(w, d);
    const double budget = radius - d;
    if (w == inf) {
      for (Index y : by_remoteness_desc_) {
        if (!(t_[y] < budget)) break;
        relax(y, d + t_[y]);
      }
      continue;
    }
    const double tw = t_[w];
    relax(inf, d + tw);
    const double grow = budget / tw;  // budget·(1+|w|)
    if (grow < 1.0) {
      // d_a(w,y) < budget forces d(w,y) < budget(1+|w|)²/(1 − budget(1+|w|)).
      const double reach = budget / (tw * tw) / (1.0 - grow) * (1.0 + 1e-12);
      for (const auto& [y, dwy] : base_->local_ball(w, reach, false)) {
        if (y != w) relax(y, d + dwy * (tw * t_[y]));
      }
    } else {
      for (Index y = 0; y < n; ++y)
        if (!done[y]) relax(y, d + base_->metric(w, y) * (tw * t_[y]));
    }
  }
  for (Index y : touched) {
    tent[y] = kInf;
    done[y] = 0;
  }
  touched.clear();
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<Index, double>> SphericalizedSpace::hat_ball_distances(Index center, double radius) const {
  check(center);
  if (!(radius > 0.0)) throw InvalidArgument("hat ball radius must be positive");
  const std::size_t n = base_->size();
  std::vector<std::pair<Index, double>> out;
  if (is_infinity(center)) {
    // B̂(∞,r) = X̂ \ B̄(a, 1/r − 1).
    const double cut = 1.0 / radius - 1.0;
    for (Index y = 0; y < n; ++y)
      if (base_->remoteness(y) > cut) out.emplace_back(y, t_[y]);
    out.emplace_back(n, 0.0);
    return out;
  }
  if (center == base_->base()) {
    for (Index y = 0; y < n; ++y) {
      const double d = base_->remoteness(y) * t_[y];
      if (d < radius) out.emplace_back(y, d);
    }
    if (1.0 < radius) out.emplace_back(n, 1.0);
    return out;
  }
  if (radius > t_[center]) {
    // Balls reaching ∞ are large; the dense kernel is the better fit.
    std::vector<double> dist;
    kernels::chain_sssp(exec_, *base_, t_, center, radius, dist);
    for (Index y = 0; y <= n; ++y)
      if (dist[y] < radius) out.emplace_back(y, dist[y]);
    return out;
  }
  return local_search(center, radius);
}

PointSet SphericalizedSpace::hat_ball(Index center, double radius) const {
  PointSet s(size());
  for (const auto& [y, d] : hat_ball_distances(center, radius)) s.insert(y);
  return s;
}

double SphericalizedSpace::hat_ball_measure(Index center, double radius) const {
  double m = 0.0;
  for (const auto& [y, d] : hat_ball_distances(center, radius)) m += hat_masses_[y];
  return m;
}

PointSet SphericalizedSpace::quasi_ball(Index center, double radius) const {
  check(center);
  if (!(radius > 0.0)) throw InvalidArgument("quasi ball radius must be positive");
  const std::size_t n = base_->size();
  PointSet s(size());
  if (is_infinity(center)) {
    for (Index y = 0; y < n; ++y)
      if (t_[y] < radius) s.insert(y);
    s.insert(n);
    return s;
  }
  thread_local std::vector<double> row;
  base_->distance_row(center, row);
  const double tc = t_[center];
  for (Index y = 0; y < n; ++y)
    if (row[y] * (tc * t_[y]) < radius) s.insert(y);
  if (tc < radius) s.insert(n);
  return s;
}

nlohmann::json serialize_sphericalized(const SphericalizedSpace& sph) {
  auto doc = serialize_space(sph.base());
  doc["q"] = sph.q();
  nlohmann::json masses = nlohmann::json::object();
  for (Index i = 0; i < sph.base().size(); ++i) masses[sph.base().id(i)] = sph.hat_mass(i);
  masses[SphericalizedSpace::kInfinityId] = 0.0;
  doc["hat_masses"] = std::move(masses);
  doc["infinity"] = SphericalizedSpace::kInfinityId;
  return doc;
}

EdgeGradientField transform_gradient(const SphericalizedSpace& sph, const EdgeGradientField& g,
                                     GradientDirection direction) {
  const auto& edges = sph.base().edges();
  if (g.values.size() != edges.size()) throw InvalidArgument("gradient field must have one value per edge");
  EdgeGradientField out;
  out.values.resize(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (!(g.values[k] >= 0.0)) throw InvalidArgument("gradient values must be nonnegative");
    const double factor = (1.0 + sph.base().remoteness(e.u)) * (1.0 + sph.base().remoteness(e.v));
    out.values[k] = direction == GradientDirection::Forward ? g.values[k] * factor : g.values[k] / factor;
  }
  return out;
}

namespace {

// Index of the first member of `a` missing from `b`, or npos.
Index first_missing(const PointSet& a, const PointSet& b) {
  for (Index i : a.members())
    if (!b.contains(i)) return i;
  return std::numeric_limits<Index>::max();
}

PointSet base_ball_in_hat(const Space& space, Index x, double radius) {
  PointSet s(space.size() + 1);
  thread_local std::vector<double> row;
  space.distance_row(x, row);
  for (Index y = 0; y < space.size(); ++y)
    if (row[y] < radius) s.insert(y);
  return s;
}

}  // namespace

InclusionReport verify_ball_inclusions(const SphericalizedSpace& sph, std::size_t sample_count, std::uint64_t seed) {
  const Space& space = sph.base();
  const std::size_t n = space.size();
  InclusionReport report;
  report.samples.resize(sample_count);

  auto run = [&](std::size_t s) {
    Rng rng(seed, s);
    const Index x = rng.index(n);
    const double t = sph.remoteness_hat(x);
    const double r = rng.log_uniform(t * t / 64.0, 1.0);
    InclusionSample out{x, r, r <= t / 3.0, {}, -1, 0};
    std::vector<PointSet> chain;
    if (out.small_regime) {
      chain.push_back(base_ball_in_hat(space, x, 3.0 * r / (4.0 * t * t)));
      chain.push_back(sph.quasi_ball(x, r));
      chain.push_back(base_ball_in_hat(space, x, 3.0 * r / (2.0 * t * t)));
    } else {
      chain.push_back(base_ball_in_hat(space, x, 1.0 / (4.0 * t)));
      chain.push_back(sph.quasi_ball(x, r));
      chain.push_back(sph.hat_ball(x, r));
      PointSet far(n + 1);
      const double cut = 1.0 / (4.0 * r) - 1.0;
      for (Index y = 0; y < n; ++y)
        if (space.remoteness(y) > cut) far.insert(y);
      far.insert(n);
      chain.push_back(std::move(far));
    }
    for (const auto& c : chain) out.chain_sizes.push_back(c.size());
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      const Index miss = first_missing(chain[k], chain[k + 1]);
      if (miss != std::numeric_limits<Index>::max()) {
        out.violated_link = static_cast<int>(k);
        out.witness = miss;
        break;
      }
    }
    report.samples[s] = std::move(out);
  };

  if (sph.exec() == kernels::Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t s = 0; s < sample_count; ++s) run(s);
  } else {
    for (std::size_t s = 0; s < sample_count; ++s) run(s);
  }
  for (const auto& s : report.samples) {
    if (s.violated_link >= 0) ++report.violations;
    (s.small_regime ? report.small_samples : report.large_samples) += 1;
  }
  return report;
}

}  // namespace spherekit
