#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spherekit {

using Index = std::size_t;

/// Subset of a fixed universe of point indices, stored as a membership mask.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t universe) : mask_(universe, 0) {}
  static PointSet all(std::size_t universe);
  static PointSet of(std::size_t universe, const std::vector<Index>& members);

  void insert(Index i);
  void erase(Index i);
  bool contains(Index i) const { return i < mask_.size() && mask_[i] != 0; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t universe() const { return mask_.size(); }
  /// Members in increasing index order.
  std::vector<Index> members() const;

  bool operator==(const PointSet& other) const { return mask_ == other.mask_; }

 private:
  std::vector<std::uint8_t> mask_;
  std::size_t count_ = 0;
};

struct BallQuery {
  Index center = 0;
  double radius = 1.0;
  bool closed = false;
};

/// Integer box {-R..R}^dim with unit nearest-neighbour edges. On such a graph
/// the path metric is the L1 distance, which gives a closed-form fast path.
struct LatticeBox {
  int dim = 0;
  int half_width = 0;
};

/// Finite metric measure space: a connected weighted graph with positive
/// vertex masses, its path metric, and a base point. Immutable once built.
class Space {
 public:
  struct PointSpec {
    std::string id;
    std::vector<double> coords;
    double mass = 1.0;
  };
  struct EdgeSpec {
    std::string u;
    std::string v;
    double length = 1.0;
  };
  struct Edge {
    Index u;
    Index v;
    double length;
  };
  struct Neighbor {
    Index vertex;
    double length;
    Index edge;
  };

  /// Validates and builds. Throws SchemaError naming the offending field.
  /// `truncation` overrides the declared truncation radius.
  Space(std::vector<PointSpec> points, const std::vector<EdgeSpec>& edges,
        const std::string& base, std::optional<double> truncation = std::nullopt);

  std::size_t size() const { return ids_.size(); }
  Index base() const { return base_; }
  const std::string& id(Index i) const { return ids_.at(i); }
  Index index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return lookup_.count(id) != 0; }

  double mass(Index i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }
  double total_mass() const;
  const std::vector<double>& coords(Index i) const { return coords_[i]; }

  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(Index i) const {
    return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
  }

  double metric(Index x, Index y) const;
  /// Distances from `source` to every point. Cached per source; the fill is
  /// idempotent and safe under concurrent readers.
  std::span<const double> distances_from(Index source) const;
  /// Writes distances from `source` into `out` without touching the cache on
  /// lattice spaces, where rows are cheap to recompute.
  void distance_row(Index source, std::vector<double>& out) const;

  /// |x| = d(x, a).
  double remoteness(Index x) const { return remoteness_[x]; }
  const std::vector<double>& remoteness() const { return remoteness_; }
  double max_remoteness() const { return max_remoteness_; }

  /// Radius up to which the finite model is taken to represent the unbounded
  /// space. Defaults to the box half-width for lattice boxes centred at the
  /// base point and to the largest remoteness otherwise.
  double truncation_radius() const { return truncation_; }
  bool has_declared_truncation() const { return declared_truncation_; }

  const std::optional<LatticeBox>& lattice() const { return lattice_; }
  /// Integer coordinate of point i along `axis` (lattice spaces only).
  int lattice_coord(Index i, int axis) const { return lattice_coords_[static_cast<std::size_t>(axis) * size() + i]; }
  const std::vector<std::int32_t>& lattice_coords() const { return lattice_coords_; }

  PointSet ball(const BallQuery& q) const;
  double ball_measure(const BallQuery& q) const;

  /// Points within `radius` of `center` (strict unless `closed`) with their
  /// distances, found by a bounded search on the edge graph. Cost is local to
  /// the ball. Output is sorted by index.
  std::vector<std::pair<Index, double>> local_ball(Index center, double radius, bool closed) const;

 private:
  void detect_lattice();
  std::vector<double> dijkstra(Index source) const;
  void check_index(Index i) const;

  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> lookup_;
  std::vector<std::vector<double>> coords_;
  std::vector<double> masses_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  Index base_ = 0;
  std::vector<double> remoteness_;
  double max_remoteness_ = 0.0;
  double truncation_ = 0.0;
  bool declared_truncation_ = false;
  std::optional<LatticeBox> lattice_;
  std::vector<std::int32_t> lattice_coords_;

  struct DistanceCache;
  std::shared_ptr<DistanceCache> cache_;
};

/// Integer grid {-R..R}^dim, unit edges, mass (1+|x|_euclid)^alpha, base at 0.
Space generate_grid(int dim, int half_width, double weight_exponent);

struct RandomCloudOptions {
  std::size_t points = 200;
  std::size_t neighbors = 4;
  double mass_min = 0.5;
  double mass_max = 2.0;
};

/// Random geometric graph: points uniform in a disc of area proportional to
/// the point count, each joined to its nearest neighbours (Euclidean lengths),
/// plus bridging edges until connected. Base point is the one nearest the
/// centre of the disc.
Space generate_random_cloud(std::uint64_t seed, const RandomCloudOptions& options = {});

}  // namespace spherekit
