#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spherekit/kernels.hpp"
#include "spherekit/space.hpp"

namespace spherekit {

/// X̂ = X ∪ {∞} over a base space. Points of X keep their indices; ∞ is
/// index n = base().size(). The quasimetric is
///   d_a(x,y) = d(x,y)/((1+|x|)(1+|y|)),  d_a(x,∞) = 1/(1+|x|),
/// evaluated as d(x,y)·(t_x·t_y) with t_x = 1/(1+|x|) so it is symmetric
/// bitwise. d̂ is the chain metric of d_a and μ̂_q = μ/(1+|x|)^q.
class SphericalizedSpace {
 public:
  SphericalizedSpace(std::shared_ptr<const Space> base, double q);

  /// Same base and metric caches, different measure exponent.
  SphericalizedSpace with_q(double q) const;

  const Space& base() const { return *base_; }
  const std::shared_ptr<const Space>& base_ptr() const { return base_; }
  double q() const { return q_; }

  std::size_t size() const { return base_->size() + 1; }
  Index infinity() const { return base_->size(); }
  bool is_infinity(Index i) const { return i == base_->size(); }
  std::string id(Index i) const;
  static constexpr const char* kInfinityId = "∞";

  double hat_mass(Index i) const { return hat_masses_[i]; }
  /// Size n+1; the entry for ∞ is 0.
  const std::vector<double>& hat_masses() const { return hat_masses_; }
  double total_hat_mass() const { return total_hat_mass_; }

  /// d̂(x,∞) = 1/(1+|x|); 0 at ∞.
  double remoteness_hat(Index i) const { return is_infinity(i) ? 0.0 : t_[i]; }
  /// t_x for x in X (size n).
  std::span<const double> t() const { return t_; }

  double d_a(Index x, Index y) const;
  double d_hat(Index x, Index y) const;
  /// Single-source chain distances over X̂ (size n+1), cached per source.
  std::span<const double> chain_metric(Index source) const;

  /// Open ball {y : d̂(center,y) < radius}. Centres ∞ and a use closed forms
  /// (exact: d̂ agrees with d_a from those two points); other centres run a
  /// bounded chain search.
  PointSet hat_ball(Index center, double radius) const;
  double hat_ball_measure(Index center, double radius) const;
  /// Members of the open hat ball with their chain distances, sorted by index.
  std::vector<std::pair<Index, double>> hat_ball_distances(Index center, double radius) const;
  /// Open quasi-ball {y : d_a(center,y) < radius}.
  PointSet quasi_ball(Index center, double radius) const;

  kernels::Exec exec() const { return exec_; }
  void set_exec(kernels::Exec e) { exec_ = e; }

 private:
  void check(Index i) const;
  std::vector<std::pair<Index, double>> local_search(Index center, double radius) const;

  std::shared_ptr<const Space> base_;
  double q_;
  std::vector<double> t_;
  std::vector<double> hat_masses_;
  double total_hat_mass_ = 0.0;
  std::vector<Index> by_remoteness_desc_;

  struct ChainCache;
  std::shared_ptr<ChainCache> cache_;
  kernels::Exec exec_ = kernels::default_exec();
};

SphericalizedSpace sphericalize(std::shared_ptr<const Space> base, double q);

/// Base document plus {"q", "hat_masses", "infinity"}.
nlohmann::json serialize_sphericalized(const SphericalizedSpace& sph);

/// Per-edge nonnegative values, indexed like Space::edges().
struct EdgeGradientField {
  std::vector<double> values;
};

enum class GradientDirection { Forward, Inverse };

/// Forward: ĝ_e = g_e·(1+|x|)(1+|y|); inverse divides by the same factor.
EdgeGradientField transform_gradient(const SphericalizedSpace& sph, const EdgeGradientField& g,
                                     GradientDirection direction);

struct InclusionSample {
  Index x;
  double r;
  bool small_regime;   // r <= t_x/3
  std::vector<std::size_t> chain_sizes;  // set sizes along the inclusion chain
  int violated_link = -1;                // -1 when every inclusion holds
  Index witness = 0;                     // a point in the violated difference
};

struct InclusionReport {
  std::vector<InclusionSample> samples;
  std::size_t violations = 0;
  std::size_t small_samples = 0;
  std::size_t large_samples = 0;
};

/// Samples (x, r) and checks the ball inclusions
///   r <= t/3:     B(x, 3r/(4t²)) ⊂ B_a(x,r) ⊂ B(x, 3r/(2t²))
///   t/3 <= r <= 1: B(x, 1/(4t)) ⊂ B_a(x,r) ⊂ B̂(x,r) ⊂ X̂ \ B̄(a, 1/(4r) − 1)
/// with t = d̂(x). Radii are drawn log-uniformly from [t²/64, 1].
InclusionReport verify_ball_inclusions(const SphericalizedSpace& sph, std::size_t sample_count, std::uint64_t seed);

}  // namespace spherekit
