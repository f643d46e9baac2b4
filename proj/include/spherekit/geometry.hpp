#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

namespace spherekit {

/// One sampled ball and the ratio it produced.
struct RatioSample {
  Index center;
  double radius;
  double value;
};

struct DoublingEstimate {
  double constant = 1.0;  // max sampled μ(B(x,2r))/μ(B(x,r))
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t samples = 0;  // balls evaluated
  std::size_t skipped = 0;  // null inner balls (only possible at ∞)
  std::uint64_t seed = 0;
  RatioSample argmax{0, 0.0, 0.0};
  std::vector<RatioSample> evidence;
};

/// Anchor balls at a (and at ∞ on X̂) over the dyadic ladder r_max·2^{−k} >= r_min,
/// then `samples` random balls with log-uniform radii in [r_min, r_max].
/// Sample s draws from Rng(seed, s), so estimates are monotone in `samples`.
DoublingEstimate doubling_constant(const Space& space, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed);
DoublingEstimate doubling_constant(const SphericalizedSpace& sph, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed);

struct LadderPair {
  double s;
  double r;
  double R;
  double ratio;  // μ(B(a,r))/μ(B(a,R))
  double bound;  // C_s·(r/R)^s
};

struct DimensionEstimate {
  double s = 0.0;
  double C_s = 0.0;
  double q_bar_infinity = 0.0;
  double resolution = 0.05;
  std::vector<double> radii;
  std::vector<double> measures;
  std::vector<LadderPair> violations;  // failures recorded for every rejected s
};

/// Dyadic ladder r_min·2^k <= r_max. For each s on the resolution grid, C_s is
/// the smallest adjacent-rung constant 2^s·μ(B(a,r_k))/μ(B(a,r_{k+1})); s is
/// accepted when every pair of rungs satisfies μ(r)/μ(R) >= C_s (r/R)^s.
DimensionEstimate dimension_exponents(const Space& space, double r_min, double r_max, double resolution = 0.05,
                                      double s_max = 12.0);
/// Rechecks an estimate against its own ladder.
bool certifies(const DimensionEstimate& est);

struct PerfectnessResult {
  bool ok = false;
  double kappa = 0.0;
  double r_min = 1.0;
  double tested_up_to = 0.0;  // largest r tested (truncation/κ)
  double cap = 4.0;
  // Witness of failure: the annulus B(a, κr) \ B(a, r) is empty.
  double witness_r = 0.0;
  double witness_next = 0.0;  // the next remoteness at or above witness_r
};

/// Smallest κ = resolution^k (k >= 1) with B(a, κr) \ B(a, r) nonempty for all
/// r in [r_min, truncation/κ].
PerfectnessResult uniform_perfectness(const Space& space, double r_min = 1.0, double cap = 4.0,
                                      double resolution = 1.1);

struct AnnularLevel {
  double rho;
  std::size_t bin_size;
  bool passed;
  Index witness_x = 0;
  Index witness_y = 0;
};

struct AnnularResult {
  bool ok = false;
  double A = 0.0;
  double R_A = 0.0;
  std::vector<AnnularLevel> levels;  // for the accepted A, or for the last A tried
  Index witness_x = 0;
  Index witness_y = 0;
  double witness_rho = 0.0;
};

/// Levels ρ = 2^j with Aρ <= truncation. The bin at ρ is {ρ <= |x| < ρ + ℓ}
/// with ℓ the longest edge; each bin must be edge-connected inside the open
/// annulus ρ/A < |y| < Aρ. R_A is the smallest level from which every level
/// passes; at least two passing levels are required.
AnnularResult annular_connectedness(const Space& space, const std::vector<double>& A_ladder);

struct AhlforsSample {
  Index center;
  double radius;
  double ratio;  // μ(B)/r^Q
  bool small_regime;
};

struct AhlforsEstimate {
  double Q = 0.0;
  double c_low = 0.0;
  double c_high = 0.0;
  double spread = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<AhlforsSample> evidence;
};

/// Balls inside the truncation (|x| + r <= R), r log-uniform in [r_min, r_max].
AhlforsEstimate ahlfors_regularity(const Space& space, double Q, double r_min, double r_max, std::size_t samples,
                                   std::uint64_t seed);
/// Hat balls with centres |x| <= center_radius (R/2 when negative),
/// alternating between the regimes r in [2t_x², t_x/3) and
/// r in [max(r_min, t_x/3), r_max]. The cut 2t_x² keeps small balls above the
/// lattice scale; r_min keeps large ones clear of the truncation. Centres are
/// drawn from the eligible points in id order, so a fixed seed, centre radius
/// and r_min give the same balls on every truncation of one grid.
AhlforsEstimate ahlfors_regularity(const SphericalizedSpace& sph, double Q, double r_min, double r_max,
                                   std::size_t samples, std::uint64_t seed, double center_radius = -1.0);

struct WhitneyBall {
  Index z;
  int level;
  double radius;
};

struct WhitneyCover {
  double r = 0.0;
  double c0 = 0.0;
  std::vector<WhitneyBall> balls;
  std::map<int, std::size_t> per_level;
  std::size_t M = 0;
  std::size_t max_overlap = 0;
  std::size_t candidates = 0;
  std::size_t meeting_infinity_ball = 0;  // balls meeting B̂(∞, r)
  int l0 = 0;                             // least level among those
  bool radii_law = false;
  bool level_bounds = false;
  bool disjoint = false;
  bool covers = false;
};

/// Whitney-type cover of X adapted to B̂(∞, r): level l_z with
/// 2^{−l}r <= t_z < 2^{1−l}r, radius r_z = c0·2^{−l}·r, c0 = 1/(120·λ).
/// Greedy selection by radius (ties by identifier) keeps B̂(z, r_z/5)
/// pairwise disjoint. Requires 0 < r <= 1/(8·annular_R).
WhitneyCover whitney_cover(const SphericalizedSpace& sph, double r, double lambda_hint, double annular_R = 1.0);

/// Level from its defining inequality, computed without rounding.
int whitney_level(double r, double t);

struct TestFunction {
  std::string name;
  std::vector<double> values;  // one per base point
};

/// Coordinates, remoteness, distances from random centres, low-frequency
/// cosines and a few small Dirichlet solutions.
std::vector<TestFunction> default_battery(const Space& space, std::size_t distance_functions, std::uint64_t seed);

struct PoincareRow {
  Index center;
  double radius;
  std::size_t function;
  double ratio;
};

struct PoincareEstimate {
  double constant = 0.0;  // lower bound for C_PI
  double p = 1.0;
  double lambda = 1.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // (ball, function) pairs with u constant on λB
  PoincareRow argmax{0, 0.0, 0, 0.0};
  std::vector<PoincareRow> evidence;
};

/// Balls in the base space with |x| + λr <= truncation.
std::vector<BallQuery> sample_balls(const Space& space, double r_min, double r_max, double lambda, std::size_t count,
                                    std::uint64_t seed);
/// Hat balls; with `at_infinity` every centre is ∞.
std::vector<BallQuery> sample_hat_balls(const SphericalizedSpace& sph, double r_min, double r_max,
                                        std::size_t count, std::uint64_t seed, bool at_infinity);

/// max over (ball, u) of ⨍_B|u − u_B| / (r·(⨍_{λB} g_u^p)^{1/p}), where g_u(x)
/// is the largest slope |u(x) − u(y)|/len over edges at x.
PoincareEstimate poincare_probe(const Space& space, double p, double lambda, const std::vector<BallQuery>& balls,
                                const std::vector<TestFunction>& battery);
/// Same on X̂ with d_a edge lengths and μ̂_q.
PoincareEstimate poincare_probe(const SphericalizedSpace& sph, double p, double lambda,
                                const std::vector<BallQuery>& balls, const std::vector<TestFunction>& battery);

struct NecessityOptions {
  std::size_t samples = 40;
  std::uint64_t seed = 1;
  double r_low_factor = 4.0;  // hat radii start at r_low_factor/(1+R)
  double r_max = 0.5;
  double dim_r_min = 2.0;
  double stability_factor = 2.0;
};

struct NecessityRung {
  double truncation;
  DoublingEstimate doubling;
  DimensionEstimate dimension;
};

struct NecessityReport {
  std::string verdict;  // DOUBLING-STABLE | DIVERGES
  double q = 0.0;
  double s = 0.0;       // from the largest truncation
  double spread = 0.0;  // max/min doubling estimate over the ladder
  std::vector<double> trend;  // ratios of consecutive doubling estimates
  std::vector<NecessityRung> rungs;
};

/// `ladder` holds the same space at increasing truncations.
NecessityReport necessity_experiment(const std::vector<std::shared_ptr<const Space>>& ladder, double q,
                                     const NecessityOptions& options = {});

}  // namespace spherekit
