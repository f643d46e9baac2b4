#include "spherekit/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spherekit/error.hpp"

namespace spherekit {

namespace {

constexpr double kCriticalWindow = 0.05;
constexpr double kStableBand = 0.05;
constexpr double kMinBand = 0.02;

void check_p(double p, const char* who) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument(std::string(who) + ": p must be > 1");
}

}  // namespace

TailVerdict exponent_test(double e, double band) {
  if (e - band > -1.0) return TailVerdict::Divergent;
  if (e + band < -1.0) return TailVerdict::Convergent;
  // Straddling the critical value: a sharp estimate sitting on it diverges
  // (logarithmically); anything vaguer is left open.
  if (std::abs(e + 1.0) <= kCriticalWindow && band <= kStableBand) return TailVerdict::Divergent;
  return TailVerdict::Inconclusive;
}

ParabolicityReport classify_parabolicity(const Space& space, double p, double q,
                                         const std::vector<double>& radius_ladder) {
  check_p(p, "classify_parabolicity");
  if (!(q > 0.0)) throw InvalidArgument("classify_parabolicity: q must be > 0");
  if (radius_ladder.size() < 3) throw InvalidArgument("classify_parabolicity: ladder needs at least 3 rungs");
  for (std::size_t k = 0; k < radius_ladder.size(); ++k) {
    if (!(radius_ladder[k] > 0.0)) throw InvalidArgument("classify_parabolicity: radii must be positive");
    if (k && !(radius_ladder[k] > radius_ladder[k - 1]))
      throw InvalidArgument("classify_parabolicity: ladder must be strictly increasing");
  }

  ParabolicityReport rep;
  rep.p = p;
  rep.q = q;
  const double shift = q - 2.0 * p + 1.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < radius_ladder.size(); ++k) {
    const double r = radius_ladder[k];
    const double m = space.ball_measure({space.base(), r, false});
    double slope = 0.0;
    if (k) slope = std::log(m / rep.rows.back().measure) / std::log(r / radius_ladder[k - 1]);
    sum += r * std::pow(std::pow(r, shift) / m, 1.0 / (p - 1.0));
    rep.rows.push_back({r, m, slope, sum});
  }

  // Least squares in log-log.
  const double n = static_cast<double>(rep.rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : rep.rows) {
    const double x = std::log2(row.radius), y = std::log2(row.measure);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.sigma_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  // Local slopes approach σ with an O(1/r) bias from lattice effects; one
  // Richardson step on the last two removes its leading term for dyadic
  // ladders.
  const double s1 = rep.rows[rep.rows.size() - 1].local_slope;
  const double s0 = rep.rows[rep.rows.size() - 2].local_slope;
  rep.sigma_tail = rep.rows.size() >= 3 ? 2.0 * s1 - s0 : s1;
  rep.sigma_band = std::max(std::abs(s1 - s0), kMinBand);
  rep.exponent = (shift - rep.sigma_tail) / (p - 1.0);
  rep.exponent_band = rep.sigma_band / (p - 1.0);

  switch (exponent_test(rep.exponent, rep.exponent_band)) {
    case TailVerdict::Divergent: rep.verdict = "PARABOLIC"; break;
    case TailVerdict::Convergent: rep.verdict = "HYPERBOLIC"; break;
    case TailVerdict::Inconclusive: rep.verdict = "INCONCLUSIVE"; break;
  }
  return rep;
}

CapacityProbeReport capacity_at_infinity_probe(const SphericalizedSpace& sph, double p,
                                               const std::vector<double>& ladder, const SolveOptions& options) {
  check_p(p, "capacity_at_infinity_probe");
  if (ladder.size() < 4) throw InvalidArgument("capacity_at_infinity_probe: ladder needs at least 4 radii");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0 && ladder[k] < 1.0))
      throw InvalidArgument("capacity_at_infinity_probe: radii must lie in (0,1)");
    if (k && !(ladder[k] < ladder[k - 1]))
      throw InvalidArgument("capacity_at_infinity_probe: ladder must be strictly decreasing");
  }
  const Space& X = sph.base();
  const std::size_t n = X.size();
  auto tail = [&](double rho) {
    // B̂(∞, ρ) ∩ X = {x : |x| > 1/ρ − 1}, read off the same test the hat
    // balls use.
    PointSet s(sph.size());
    for (Index i = 0; i < n; ++i)
      if (sph.t()[i] < rho) s.insert(i);
    return s;
  };

  CapacityProbeReport rep;
  rep.p = p;
  rep.q = sph.q();
  rep.omega_radius = ladder[0];
  const PointSet omega = tail(ladder[0]);
  const EnergyForm form{p, EnergyGeometry::Spherical};
  for (std::size_t j = 1; j < ladder.size(); ++j) {
    const PointSet E = tail(ladder[j]);
    if (E.empty()) throw InvalidArgument("capacity_at_infinity_probe: ladder reaches past the truncation");
    const double cap = condenser_capacity(form, sph, E, omega, options);
    rep.rows.push_back({ladder[j], 1.0 / ladder[j] - 1.0, cap, std::pow(cap, -1.0 / (p - 1.0))});
  }

  // Resistance increments over consecutive shells grow like (outer radius)^{e+1}.
  std::vector<double> e;
  for (std::size_t j = 2; j < rep.rows.size(); ++j) {
    const double d1 = rep.rows[j].resistance - rep.rows[j - 1].resistance;
    const double d0 = rep.rows[j - 1].resistance - rep.rows[j - 2].resistance;
    const double scale = std::log(rep.rows[j].outer_radius / rep.rows[j - 1].outer_radius);
    if (!(d0 > 0.0) || !(d1 > 0.0)) {
      e.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    e.push_back(std::log(d1 / d0) / scale - 1.0);
  }
  rep.exponent = e.back();
  rep.exponent_band = e.size() >= 2 ? std::max(std::abs(e.back() - e[e.size() - 2]), kMinBand) : 2.0 * kStableBand;
  if (!std::isfinite(rep.exponent) || !std::isfinite(rep.exponent_band)) {
    rep.verdict = "INCONCLUSIVE";
    return rep;
  }
  switch (exponent_test(rep.exponent, rep.exponent_band)) {
    case TailVerdict::Divergent: rep.verdict = "VANISHING"; break;
    case TailVerdict::Convergent: rep.verdict = "POSITIVE"; break;
    case TailVerdict::Inconclusive: rep.verdict = "INCONCLUSIVE"; break;
  }
  return rep;
}

}  // namespace spherekit
