#include "spherekit/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <queue>

#include "spherekit/error.hpp"
#include "spherekit/rng.hpp"

namespace spherekit {

PointSet PointSet::all(std::size_t universe) {
  PointSet s(universe);
  std::fill(s.mask_.begin(), s.mask_.end(), 1);
  s.count_ = universe;
  return s;
}

PointSet PointSet::of(std::size_t universe, const std::vector<Index>& members) {
  PointSet s(universe);
  for (Index i : members) s.insert(i);
  return s;
}

void PointSet::insert(Index i) {
  if (i >= mask_.size()) throw InvalidArgument("point index out of range");
  if (!mask_[i]) {
    mask_[i] = 1;
    ++count_;
  }
}

void PointSet::erase(Index i) {
  if (i < mask_.size() && mask_[i]) {
    mask_[i] = 0;
    --count_;
  }
}

std::vector<Index> PointSet::members() const {
  std::vector<Index> out;
  out.reserve(count_);
  for (Index i = 0; i < mask_.size(); ++i)
    if (mask_[i]) out.push_back(i);
  return out;
}

struct Space::DistanceCache {
  explicit DistanceCache(std::size_t n) : rows(n), flags(new std::once_flag[n]) {}
  std::vector<std::unique_ptr<std::vector<double>>> rows;
  std::unique_ptr<std::once_flag[]> flags;
};

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

Space::Space(std::vector<PointSpec> points, const std::vector<EdgeSpec>& edges,
             const std::string& base, std::optional<double> truncation) {
  if (points.empty()) throw SchemaError("points", "a space needs at least one point");
  const std::size_t n = points.size();
  ids_.reserve(n);
  masses_.reserve(n);
  coords_.reserve(n);
  lookup_.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = points[i];
    const std::string field = "points[" + std::to_string(i) + "]";
    if (p.id.empty()) throw SchemaError(field + ".id", "empty identifier");
    if (!lookup_.emplace(p.id, i).second) throw SchemaError(field + ".id", "duplicate identifier '" + p.id + "'");
    if (!finite_positive(p.mass)) throw SchemaError(field + ".mass", "mass must be a positive finite number");
    for (double c : p.coords)
      if (!std::isfinite(c)) throw SchemaError(field + ".coords", "coordinates must be finite");
    ids_.push_back(std::move(p.id));
    masses_.push_back(p.mass);
    coords_.push_back(std::move(p.coords));
  }

  edges_.reserve(edges.size());
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const std::string field = "edges[" + std::to_string(k) + "]";
    auto iu = lookup_.find(e.u);
    if (iu == lookup_.end()) throw SchemaError(field + ".u", "unknown point '" + e.u + "'");
    auto iv = lookup_.find(e.v);
    if (iv == lookup_.end()) throw SchemaError(field + ".v", "unknown point '" + e.v + "'");
    if (iu->second == iv->second) throw SchemaError(field, "self-loop on '" + e.u + "'");
    if (!finite_positive(e.length)) throw SchemaError(field + ".len", "edge length must be a positive finite number");
    edges_.push_back({iu->second, iv->second, e.length});
    ++degree[iu->second];
    ++degree[iv->second];
  }

  auto ib = lookup_.find(base);
  if (ib == lookup_.end()) throw SchemaError("base", "base point '" + base + "' is not a point of the space");
  base_ = ib->second;

  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (Index k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    adjacency_[fill[e.u]++] = {e.v, e.length, k};
    adjacency_[fill[e.v]++] = {e.u, e.length, k};
  }

  cache_ = std::make_shared<DistanceCache>(n);
  detect_lattice();

  if (lattice_) {
    remoteness_.resize(n);
    for (Index i = 0; i < n; ++i) remoteness_[i] = metric(base_, i);
  } else {
    remoteness_ = dijkstra(base_);
  }
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(remoteness_[i]))
      throw SchemaError("edges", "graph is disconnected: '" + ids_[i] + "' is unreachable from the base point");
  }
  max_remoteness_ = *std::max_element(remoteness_.begin(), remoteness_.end());

  if (truncation) {
    if (!finite_positive(*truncation)) throw SchemaError("truncation", "truncation radius must be positive");
    truncation_ = *truncation;
    declared_truncation_ = true;
  } else if (lattice_ && remoteness_[base_] == 0.0 && [&] {
               for (int k = 0; k < lattice_->dim; ++k)
                 if (lattice_coord(base_, k) != 0) return false;
               return true;
             }()) {
    truncation_ = lattice_->half_width;
  } else {
    truncation_ = max_remoteness_;
  }
}

void Space::detect_lattice() {
  const std::size_t n = size();
  const std::size_t dim = coords_[0].size();
  if (dim < 1 || dim > 3) return;
  long R = 0;
  for (const auto& c : coords_) {
    if (c.size() != dim) return;
    for (double v : c) {
      if (v != std::floor(v) || std::abs(v) > 1e6) return;
      R = std::max(R, static_cast<long>(std::abs(v)));
    }
  }
  if (R < 1) return;
  const std::size_t side = static_cast<std::size_t>(2 * R + 1);
  std::size_t expected = 1;
  for (std::size_t k = 0; k < dim; ++k) expected *= side;
  if (expected != n) return;
  std::size_t expected_edges = dim * static_cast<std::size_t>(2 * R);
  for (std::size_t k = 1; k < dim; ++k) expected_edges *= side;
  if (edges_.size() != expected_edges) return;

  std::vector<std::uint8_t> seen(n, 0);
  for (const auto& c : coords_) {
    std::size_t lin = 0;
    for (std::size_t k = dim; k-- > 0;) lin = lin * side + static_cast<std::size_t>(c[k] + R);
    if (seen[lin]) return;
    seen[lin] = 1;
  }
  for (const auto& e : edges_) {
    if (e.length != 1.0) return;
    double l1 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) l1 += std::abs(coords_[e.u][k] - coords_[e.v][k]);
    if (l1 != 1.0) return;
  }
  // A full box with all unit axis edges present: path metric is L1.
  lattice_ = LatticeBox{static_cast<int>(dim), static_cast<int>(R)};
  lattice_coords_.resize(dim * n);
  for (std::size_t k = 0; k < dim; ++k)
    for (Index i = 0; i < n; ++i) lattice_coords_[k * n + i] = static_cast<std::int32_t>(coords_[i][k]);
}

Index Space::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw InvalidArgument("unknown point '" + id + "'");
  return it->second;
}

void Space::check_index(Index i) const {
  if (i >= size()) throw InvalidArgument("unknown point index " + std::to_string(i));
}

double Space::total_mass() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }

std::vector<double> Space::dijkstra(Index source) const {
  const std::size_t n = size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const auto& nb : neighbors(v)) {
      const double cand = d + nb.length;
      if (cand < dist[nb.vertex]) {
        dist[nb.vertex] = cand;
        heap.push({cand, nb.vertex});
      }
    }
  }
  return dist;
}

double Space::metric(Index x, Index y) const {
  check_index(x);
  check_index(y);
  if (x == y) return 0.0;
  if (lattice_) {
    const std::size_t n = size();
    long s = 0;
    for (int k = 0; k < lattice_->dim; ++k)
      s += std::labs(static_cast<long>(lattice_coords_[k * n + x]) - lattice_coords_[k * n + y]);
    return static_cast<double>(s);
  }
  return distances_from(x)[y];
}

std::span<const double> Space::distances_from(Index source) const {
  check_index(source);
  std::call_once(cache_->flags[source], [&] {
    if (lattice_) {
      auto row = std::make_unique<std::vector<double>>(size());
      for (Index y = 0; y < size(); ++y) (*row)[y] = metric(source, y);
      cache_->rows[source] = std::move(row);
    } else {
      // Lower entries come from the lower rows, so the cached metric is
      // symmetric to the bit.
      auto row = std::make_unique<std::vector<double>>(dijkstra(source));
      for (Index y = 0; y < source; ++y) (*row)[y] = distances_from(y)[source];
      cache_->rows[source] = std::move(row);
    }
  });
  return *cache_->rows[source];
}

std::vector<std::pair<Index, double>> Space::local_ball(Index center, double radius, bool closed) const {
  check_index(center);
  thread_local std::vector<double> dist;
  thread_local std::vector<Index> touched;
  if (dist.size() < size()) dist.assign(size(), std::numeric_limits<double>::infinity());
  auto inside = [&](double d) { return closed ? d <= radius : d < radius; };

  std::vector<std::pair<Index, double>> out;
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[center] = 0.0;
  touched.push_back(center);
  heap.push({0.0, center});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    out.emplace_back(v, d);
    for (const auto& nb : neighbors(v)) {
      const double cand = d + nb.length;
      if (inside(cand) && cand < dist[nb.vertex]) {
        if (!std::isfinite(dist[nb.vertex])) touched.push_back(nb.vertex);
        dist[nb.vertex] = cand;
        heap.push({cand, nb.vertex});
      }
    }
  }
  for (Index t : touched) dist[t] = std::numeric_limits<double>::infinity();
  touched.clear();
  std::sort(out.begin(), out.end());
  return out;
}

void Space::distance_row(Index source, std::vector<double>& out) const {
  check_index(source);
  out.resize(size());
  if (lattice_) {
    const std::size_t n = size();
    const int dim = lattice_->dim;
    for (Index y = 0; y < n; ++y) {
      long s = 0;
      for (int k = 0; k < dim; ++k)
        s += std::labs(static_cast<long>(lattice_coords_[k * n + source]) - lattice_coords_[k * n + y]);
      out[y] = static_cast<double>(s);
    }
    return;
  }
  auto row = distances_from(source);
  out.assign(row.begin(), row.end());
}

PointSet Space::ball(const BallQuery& q) const {
  check_index(q.center);
  if (!(q.radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  PointSet s(size());
  thread_local std::vector<double> row;
  distance_row(q.center, row);
  for (Index y = 0; y < size(); ++y)
    if (q.closed ? row[y] <= q.radius : row[y] < q.radius) s.insert(y);
  return s;
}

double Space::ball_measure(const BallQuery& q) const {
  check_index(q.center);
  if (!(q.radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  thread_local std::vector<double> row;
  distance_row(q.center, row);
  double m = 0.0;
  for (Index y = 0; y < size(); ++y)
    if (q.closed ? row[y] <= q.radius : row[y] < q.radius) m += masses_[y];
  return m;
}

Space generate_grid(int dim, int half_width, double weight_exponent) {
  if (dim < 1 || dim > 3) throw InvalidArgument("grid dimension must be 1, 2 or 3");
  if (half_width < 1) throw InvalidArgument("grid half-width must be at least 1");
  if (!(weight_exponent >= 0.0) || !std::isfinite(weight_exponent))
    throw InvalidArgument("weight exponent must be a finite number >= 0");
  const int R = half_width;
  const std::size_t side = static_cast<std::size_t>(2 * R + 1);
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= side;

  std::vector<Space::PointSpec> points(n);
  std::vector<Space::EdgeSpec> edges;
  edges.reserve(static_cast<std::size_t>(dim) * n);
  std::vector<int> c(dim);
  auto coord_of = [&](std::size_t lin, std::vector<int>& out) {
    for (int k = 0; k < dim; ++k) {
      out[k] = static_cast<int>(lin % side) - R;
      lin /= side;
    }
  };
  auto id_of = [&](const std::vector<int>& cc) {
    std::string s;
    for (int k = 0; k < dim; ++k) {
      if (k) s += ',';
      s += std::to_string(cc[k]);
    }
    return s;
  };
  for (std::size_t lin = 0; lin < n; ++lin) {
    coord_of(lin, c);
    double r2 = 0.0;
    for (int v : c) r2 += static_cast<double>(v) * v;
    auto& p = points[lin];
    p.id = id_of(c);
    p.coords.assign(c.begin(), c.end());
    p.mass = weight_exponent == 0.0 ? 1.0 : std::pow(1.0 + std::sqrt(r2), weight_exponent);
  }
  std::size_t stride = 1;
  for (int k = 0; k < dim; ++k) {
    for (std::size_t lin = 0; lin < n; ++lin) {
      coord_of(lin, c);
      if (c[k] < R) edges.push_back({points[lin].id, points[lin + stride].id, 1.0});
    }
    stride *= side;
  }
  std::vector<int> origin(dim, 0);
  return Space(std::move(points), edges, id_of(origin));
}

Space generate_random_cloud(std::uint64_t seed, const RandomCloudOptions& options) {
  const std::size_t n = options.points;
  if (n < 2) throw InvalidArgument("random cloud needs at least 2 points");
  if (!(options.mass_min > 0.0) || options.mass_max < options.mass_min)
    throw InvalidArgument("invalid mass range");
  Rng rng(seed, 0);
  const double radius = std::sqrt(static_cast<double>(n) / M_PI);
  std::vector<double> xs(n), ys(n), mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(rng.uniform());
    const double th = 2.0 * M_PI * rng.uniform();
    xs[i] = r * std::cos(th);
    ys[i] = r * std::sin(th);
    mass[i] = rng.uniform(options.mass_min, options.mass_max);
  }
  auto dist = [&](std::size_t i, std::size_t j) { return std::hypot(xs[i] - xs[j], ys[i] - ys[j]); };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) order[j] = {j == i ? std::numeric_limits<double>::infinity() : dist(i, j), j};
    const std::size_t k = std::min(options.neighbors, n - 1);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    for (std::size_t t = 0; t < k; ++t) pairs.emplace_back(std::min(i, order[t].second), std::max(i, order[t].second));
  }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (auto [i, j] : pairs) parent[find(i)] = find(j);
  for (;;) {
    // Bridge the component of point 0 to its nearest outside point.
    const std::size_t root = find(0);
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> bridge{0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      if (find(i) != root) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (find(j) != root && dist(i, j) < best) {
          best = dist(i, j);
          bridge = {std::min(i, j), std::max(i, j)};
        }
    }
    if (!std::isfinite(best)) break;
    pairs.push_back(bridge);
    parent[find(bridge.first)] = find(bridge.second);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Space::PointSpec> points(n);
  std::size_t centre = 0;
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = {"p" + std::to_string(i), {xs[i], ys[i]}, mass[i]};
    if (std::hypot(xs[i], ys[i]) < std::hypot(xs[centre], ys[centre])) centre = i;
  }
  std::vector<Space::EdgeSpec> edges;
  edges.reserve(pairs.size());
  for (auto [i, j] : pairs) edges.push_back({points[i].id, points[j].id, dist(i, j)});
  const std::string base = points[centre].id;
  return Space(std::move(points), edges, base);
}

}  // namespace spherekit
