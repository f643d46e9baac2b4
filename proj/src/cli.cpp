#include "spherekit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>

#include "spherekit/classify.hpp"
#include "spherekit/config.hpp"
#include "spherekit/dirichlet.hpp"
#include "spherekit/error.hpp"
#include "spherekit/geometry.hpp"
#include "spherekit/potential.hpp"
#include "spherekit/report.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space_io.hpp"
#include "spherekit/spherical.hpp"

namespace spherekit::cli {

using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Context {
  ExperimentConfig config;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> space_file;
  std::shared_ptr<const Space> space;
  std::optional<SpaceSource> source;
  std::optional<double> q;  // set once the space has been sphericalized
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

const std::shared_ptr<const Space>& need_space(Context& ctx) {
  if (ctx.space) return ctx.space;
  if (ctx.space_file) {
    ctx.space = std::make_shared<const Space>(load_space_file(*ctx.space_file));
    ctx.source = SpaceSource{};
    ctx.source->file = *ctx.space_file;
  } else if (ctx.config.space) {
    ctx.space = std::make_shared<const Space>(ctx.config.space->build());
    ctx.source = ctx.config.space;
  } else {
    throw UsageError("no space: pass --space FILE, a config with a [space] table, or run 'gen' first");
  }
  return ctx.space;
}

// The current space regenerated at each truncation of the ladder.
std::vector<std::shared_ptr<const Space>> ladder_spaces(Context& ctx, std::vector<int> ladder,
                                                        const std::vector<int>& fallback) {
  need_space(ctx);
  if (ladder.empty()) ladder = ctx.config.truncation_ladder;
  if (ladder.empty()) ladder = fallback;
  for (std::size_t k = 1; k < ladder.size(); ++k)
    if (!(ladder[k] > ladder[k - 1])) throw UsageError("--ladder must be strictly increasing");
  if (!ctx.source || ctx.source->generator != "grid")
    throw UsageError("truncation ladders need a grid generator as the space source");
  std::vector<std::shared_ptr<const Space>> out;
  for (int R : ladder) out.push_back(std::make_shared<const Space>(ctx.source->build(R)));
  return out;
}

double need_q(const Context& ctx, const std::optional<double>& q, const char* what) {
  if (q) return *q;
  if (ctx.q) return *ctx.q;
  throw UsageError(std::string(what) + " needs --q or a preceding 'sphericalize'");
}

double need_q_or(const Context& ctx, double fallback) { return ctx.q.value_or(fallback); }

SphericalizedSpace sph_of(Context& ctx, double q) { return sphericalize(need_space(ctx), q); }

double coordinate_norm(const Space& X, Index i) {
  double r2 = 0.0;
  for (double c : X.coords(i)) r2 += c * c;
  return std::sqrt(r2);
}

Obstacle parse_obstacle(const std::string& s) {
  if (s == "base") return Obstacle::BaseBall;
  if (s == "coordinate") return Obstacle::CoordinateBall;
  throw UsageError("--obstacle must be 'base' or 'coordinate'");
}

std::vector<double> dyadic(double lo, double hi) {
  std::vector<double> out;
  for (double r = lo; r <= hi; r *= 2.0) out.push_back(r);
  return out;
}

Report new_report(const Context& ctx, const std::string& property) {
  Report r;
  r.property = property;
  r.config_hash = config_hash(ctx.config);
  return r;
}

void set_verdict(Report& r, bool pass) { r.verdict = pass ? "PASS" : "FAIL"; }

json space_summary(const Space& X) {
  return {{"points", X.size()},
          {"edges", X.edges().size()},
          {"base", X.id(X.base())},
          {"truncation", X.truncation_radius()},
          {"total_mass", X.total_mass()}};
}

// ---------------------------------------------------------------------------
// Commands. Each fills a report; the caller stamps the command echo.

struct GenArgs {
  int dim = 2, half_width = 32;
  double alpha = 0.0;
  std::size_t points = 200, neighbors = 4;
  std::optional<std::uint64_t> space_seed;
  std::string output;
};

Report cmd_gen(Context& ctx, const GenArgs& a, bool grid) {
  SpaceSource src;
  if (grid) {
    src.generator = "grid";
    src.dim = a.dim;
    src.half_width = a.half_width;
    src.weight_exponent = a.alpha;
  } else {
    src.generator = "random";
    src.points = a.points;
    src.neighbors = a.neighbors;
    src.seed = a.space_seed.value_or(ctx.seed);
  }
  ctx.space = std::make_shared<const Space>(src.build());
  ctx.source = src;
  ctx.q.reset();
  Report r = new_report(ctx, "finite model generated and validated");
  const auto id = r.add_evidence("space", space_summary(*ctx.space));
  r.claim("points", ctx.space->size(), {id});
  r.outcome = "points=" + std::to_string(ctx.space->size());
  if (!a.output.empty()) {
    std::ofstream f(a.output, std::ios::binary);
    if (!f) throw Error("cannot write '" + a.output + "'");
    f << serialize_space(*ctx.space).dump(2) << '\n';
    r.notes.push_back("space written to " + a.output);
  }
  return r;
}

Report cmd_validate(Context& ctx, const std::string& file) {
  auto X = std::make_shared<const Space>(load_space_file(file));
  const Space reread = load_space(serialize_space(*X));
  const bool round_trip = serialize_space(reread) == serialize_space(*X);
  Report r = new_report(ctx, "space document is well formed and round-trips");
  const auto id = r.add_evidence("space", space_summary(*X));
  r.claim("points", X->size(), {id});
  r.claim("round_trip", round_trip);
  set_verdict(r, round_trip);
  r.outcome = "points=" + std::to_string(X->size());
  ctx.space = X;
  ctx.source = SpaceSource{};
  ctx.source->file = file;
  ctx.q.reset();
  return r;
}

struct SphArgs {
  std::optional<double> q;
  std::string output;
  std::size_t sources = 16;
};

Report cmd_sphericalize(Context& ctx, const SphArgs& a) {
  if (!a.q) throw UsageError("sphericalize needs --q");
  const auto& X = *need_space(ctx);
  const auto sph = sph_of(ctx, *a.q);
  const std::size_t n = X.size();
  Report r = new_report(ctx, "quarter sandwich d_a/4 <= d^ <= d_a, d^(a,inf) = 1 and diameter 1");

  std::vector<Index> sources;
  const bool all = n + 1 <= 600;
  if (all) {
    for (Index i = 0; i <= n; ++i) sources.push_back(i);
  } else {
    sources = {X.base(), sph.infinity()};
    Rng rng(ctx.seed, 0);
    for (std::size_t k = 0; k < a.sources; ++k) sources.push_back(rng.index(n));
  }
  std::size_t violations = 0;
  double diam = 0.0;
  std::vector<std::string> ids;
  for (Index x : sources) {
    const auto row = sph.chain_metric(x);
    std::size_t bad = 0;
    double far = 0.0;
    for (Index y = 0; y <= n; ++y) {
      const double da = sph.d_a(x, y);
      if (!(0.25 * da <= row[y] && row[y] <= da)) ++bad;
      far = std::max(far, row[y]);
    }
    violations += bad;
    diam = std::max(diam, far);
    ids.push_back(r.add_evidence("row", {{"source", sph.id(x)}, {"violations", bad}, {"farthest", far}}));
  }
  const double a_inf = sph.d_hat(X.base(), sph.infinity());
  const auto top = r.add_evidence("ends", {{"d_hat_a_inf", a_inf}});
  r.claim("sandwich_violations", violations, ids);
  r.claim("d_hat_a_infinity", a_inf, {top});
  r.claim(all ? "diameter" : "diameter_over_sampled_rows", diam, ids);
  set_verdict(r, violations == 0 && a_inf == 1.0 && diam == 1.0);
  r.outcome = "q=" + format_double(*a.q) + " diam=" + format_double(diam);
  if (!all) r.notes.push_back("sandwich checked on " + std::to_string(sources.size()) + " source rows");
  ctx.q = *a.q;
  if (!a.output.empty()) {
    std::ofstream f(a.output, std::ios::binary);
    if (!f) throw Error("cannot write '" + a.output + "'");
    f << serialize_sphericalized(sph).dump(2) << '\n';
  }
  return r;
}

struct CheckArgs {
  std::optional<double> q, r_min, r_max, Q, center_radius;
  std::size_t samples = 0;
  double resolution = 0.05, cap = 4.0, p = 2.0, lambda = 2.0, r = 0.05, lambda_hint = 1.0, annular_R = 1.0;
  std::size_t balls = 24, distance_functions = 2;
  std::vector<double> A{1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
  std::vector<int> ladder;
  bool base = false;
};

Report cmd_doubling(Context& ctx, const CheckArgs& a) {
  const auto& X = *need_space(ctx);
  const double R = X.truncation_radius();
  const bool hat = !a.base && (a.q || ctx.q);
  DoublingEstimate est;
  Report r = new_report(ctx, "doubling: mu(B(x,2r)) <= C mu(B(x,r)) over sampled balls");
  if (hat) {
    const double q = need_q(ctx, a.q, "check doubling");
    const auto sph = sph_of(ctx, q);
    est = doubling_constant(sph, a.r_min.value_or(4.0 / (1.0 + R)), a.r_max.value_or(0.5), a.samples ? a.samples : 32,
                            ctx.seed);
    r.notes.push_back("sphericalized space, q=" + format_double(q));
  } else {
    est = doubling_constant(X, a.r_min.value_or(1.0), a.r_max.value_or(R / 4.0), a.samples ? a.samples : 64,
                            ctx.seed);
  }
  auto& s = r.add_series("doubling", "radius [metric]", "ratio mu(2B)/mu(B) [1]");
  std::string arg_id;
  for (const auto& e : est.evidence) {
    const auto id = r.add_evidence("ball", {{"center", X.size() == e.center ? std::string(SphericalizedSpace::kInfinityId)
                                                                             : X.id(e.center)},
                                            {"radius", e.radius},
                                            {"ratio", e.value}});
    if (e.center == est.argmax.center && e.radius == est.argmax.radius && e.value == est.argmax.value) arg_id = id;
    s.points.emplace_back(e.radius, e.value);
  }
  r.claim("constant", est.constant, {arg_id});
  r.claim("samples", est.samples, {arg_id});
  const double limit = ctx.config.tolerance("doubling", std::numeric_limits<double>::infinity());
  set_verdict(r, std::isfinite(est.constant) && est.constant <= limit);
  r.outcome = "C=" + format_double(est.constant);
  return r;
}

Report cmd_dim(Context& ctx, const CheckArgs& a) {
  const auto& X = *need_space(ctx);
  const auto est = dimension_exponents(X, a.r_min.value_or(2.0), a.r_max.value_or(X.truncation_radius() / 2.0),
                                       a.resolution);
  Report r = new_report(ctx, "relative volume lower bound mu(B(a,r))/mu(B(a,R)) >= C_s (r/R)^s");
  auto& s = r.add_series("dimension", "log2 radius [log2 metric]", "log2 measure [log2 mass]");
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < est.radii.size(); ++k) {
    ids.push_back(r.add_evidence("rung", {{"radius", est.radii[k]}, {"measure", est.measures[k]}}));
    s.points.emplace_back(std::log2(est.radii[k]), std::log2(est.measures[k]));
  }
  r.claim("s", est.s, ids);
  r.claim("C_s", est.C_s, ids);
  r.claim("q_bar_infinity", est.q_bar_infinity, ids);
  for (const auto& v : est.violations)
    r.add_evidence("violation", {{"s", v.s}, {"r", v.r}, {"R", v.R}, {"ratio", v.ratio}, {"bound", v.bound}});
  set_verdict(r, certifies(est));
  r.outcome = "s=" + format_double(est.s);
  return r;
}

Report cmd_perfect(Context& ctx, const CheckArgs& a) {
  const auto& X = *need_space(ctx);
  const auto res = uniform_perfectness(X, a.r_min.value_or(1.0), a.cap);
  Report r = new_report(ctx, "uniform perfectness at a: B(a,kr) \\ B(a,r) nonempty");
  const auto id = r.add_evidence("range", {{"r_min", res.r_min},
                                           {"tested_up_to", res.tested_up_to},
                                           {"witness_r", res.witness_r},
                                           {"witness_next", res.witness_next}});
  r.claim("kappa", res.kappa, {id});
  set_verdict(r, res.ok);
  r.outcome = res.ok ? "kappa=" + format_double(res.kappa) : "no kappa <= " + format_double(a.cap);
  return r;
}

Report cmd_annular(Context& ctx, const CheckArgs& a) {
  const auto& X = *need_space(ctx);
  const auto res = annular_connectedness(X, a.A);
  Report r = new_report(ctx, "annular connectedness: far points joined inside a fixed annulus");
  std::vector<std::string> ids;
  for (const auto& l : res.levels)
    ids.push_back(r.add_evidence("level", {{"rho", l.rho},
                                           {"bin_size", l.bin_size},
                                           {"passed", l.passed},
                                           {"witness_x", X.id(l.witness_x)},
                                           {"witness_y", X.id(l.witness_y)}}));
  if (res.ok) {
    r.claim("A", res.A, ids);
    r.claim("R_A", res.R_A, ids);
  } else {
    r.claim("witness", {{"x", X.id(res.witness_x)}, {"y", X.id(res.witness_y)}, {"rho", res.witness_rho}}, ids);
  }
  set_verdict(r, res.ok);
  r.outcome = res.ok ? "A=" + format_double(res.A) : "disconnected";
  return r;
}

Report cmd_ahlfors(Context& ctx, const CheckArgs& a) {
  if (!a.Q) throw UsageError("check ahlfors needs --Q");
  const auto& X = *need_space(ctx);
  const double R = X.truncation_radius();
  const bool hat = !a.base && (a.q || ctx.q);
  AhlforsEstimate est;
  if (hat) {
    const auto sph = sph_of(ctx, need_q(ctx, a.q, "check ahlfors"));
    est = ahlfors_regularity(sph, *a.Q, a.r_min.value_or(4.0 / (1.0 + R)), a.r_max.value_or(1.0),
                             a.samples ? a.samples : 24, ctx.seed, a.center_radius.value_or(-1.0));
  } else {
    est = ahlfors_regularity(X, *a.Q, a.r_min.value_or(4.0), a.r_max.value_or(R / 2.0), a.samples ? a.samples : 48,
                             ctx.seed);
  }
  Report r = new_report(ctx, "Ahlfors regularity: mu(B(x,r))/r^Q within fixed bounds");
  auto& s = r.add_series("ahlfors", "radius [metric]", "mu(B)/r^Q [mass/metric^Q]");
  std::vector<std::string> ids;
  std::size_t small = 0;
  for (const auto& e : est.evidence) {
    ids.push_back(r.add_evidence(
        "ball", {{"center", X.id(e.center)}, {"radius", e.radius}, {"ratio", e.ratio}, {"small_regime", e.small_regime}}));
    s.points.emplace_back(e.radius, e.ratio);
    small += e.small_regime;
  }
  r.claim("spread", est.spread, ids);
  r.claim("c_low", est.c_low, ids);
  r.claim("c_high", est.c_high, ids);
  r.claim("small_regime_samples", small, ids);
  set_verdict(r, est.spread <= ctx.config.tolerance("ahlfors_spread", 64.0));
  r.outcome = "spread=" + format_double(est.spread);
  return r;
}

Report cmd_poincare(Context& ctx, const CheckArgs& a) {
  const auto& X = *need_space(ctx);
  const double R = X.truncation_radius();
  const bool hat = !a.base && (a.q || ctx.q);
  const auto battery = default_battery(X, a.distance_functions, ctx.seed);
  PoincareEstimate est;
  if (hat) {
    const auto sph = sph_of(ctx, need_q(ctx, a.q, "check poincare"));
    const auto balls =
        sample_hat_balls(sph, a.r_min.value_or(4.0 / (1.0 + R)), a.r_max.value_or(0.25), a.balls, ctx.seed, false);
    est = poincare_probe(sph, a.p, a.lambda, balls, battery);
  } else {
    const auto balls =
        sample_balls(X, a.r_min.value_or(2.0), a.r_max.value_or(R / (4.0 * a.lambda)), a.lambda, a.balls, ctx.seed);
    est = poincare_probe(X, a.p, a.lambda, balls, battery);
  }
  Report r = new_report(ctx, "(1,p)-Poincare ratio over sampled balls and a test battery");
  auto& s = r.add_series("poincare", "radius [metric]", "Poincare ratio [1]");
  std::string arg_id;
  for (const auto& e : est.evidence) {
    const auto id = r.add_evidence("pair", {{"center", e.center < X.size() ? X.id(e.center) : "∞"},
                                            {"radius", e.radius},
                                            {"function", battery[e.function].name},
                                            {"ratio", e.ratio}});
    if (e.center == est.argmax.center && e.radius == est.argmax.radius && e.function == est.argmax.function) arg_id = id;
    s.points.emplace_back(e.radius, e.ratio);
  }
  if (arg_id.empty()) arg_id = r.add_evidence("summary", {{"evaluated", est.evaluated}, {"skipped", est.skipped}});
  r.claim("constant", est.constant, {arg_id});
  r.claim("evaluated", est.evaluated, {arg_id});
  const double limit = ctx.config.tolerance("poincare", std::numeric_limits<double>::infinity());
  set_verdict(r, est.evaluated > 0 && std::isfinite(est.constant) && est.constant <= limit);
  r.outcome = "C_PI>=" + format_double(est.constant);
  return r;
}

Report cmd_necessity(Context& ctx, const CheckArgs& a) {
  const double q = need_q(ctx, a.q, "check necessity");
  const auto ladder = ladder_spaces(ctx, a.ladder, {32, 64, 128});
  NecessityOptions o;
  o.samples = a.samples ? a.samples : 16;
  o.seed = ctx.seed;
  if (a.r_min) o.dim_r_min = *a.r_min;
  const auto rep = necessity_experiment(ladder, q, o);
  Report r = new_report(ctx, "sphericalized doubling is stable across truncations iff q exceeds the dimension s");
  auto& s = r.add_series("necessity", "truncation R [metric]", "doubling estimate [1]");
  std::vector<std::string> ids;
  for (const auto& rung : rep.rungs) {
    ids.push_back(r.add_evidence("rung", {{"truncation", rung.truncation},
                                          {"doubling", rung.doubling.constant},
                                          {"s", rung.dimension.s},
                                          {"argmax_radius", rung.doubling.argmax.radius}}));
    s.points.emplace_back(rung.truncation, rung.doubling.constant);
  }
  r.claim("spread", rep.spread, ids);
  r.claim("s", rep.s, ids);
  r.claim("trend", rep.trend, ids);
  const std::string expected = q > rep.s ? "DOUBLING-STABLE" : "DIVERGES";
  set_verdict(r, rep.verdict == expected);
  r.outcome = rep.verdict;
  if (rep.verdict != expected) r.notes.push_back("expected " + expected + " for q=" + format_double(q));
  return r;
}

Report cmd_whitney(Context& ctx, const CheckArgs& a) {
  const auto sph = sph_of(ctx, need_q(ctx, a.q, "check whitney"));
  const auto cover = whitney_cover(sph, a.r, a.lambda_hint, a.annular_R);
  Report r = new_report(ctx, "Whitney cover adapted to the ball at infinity");
  auto& s = r.add_series("whitney-levels", "level [1]", "balls [count]");
  std::vector<std::string> ids;
  for (const auto& [l, count] : cover.per_level) {
    ids.push_back(r.add_evidence("level", {{"level", l}, {"balls", count}}));
    s.points.emplace_back(l, static_cast<double>(count));
  }
  const auto sid = r.add_evidence("checks", {{"radii_law", cover.radii_law},
                                             {"level_bounds", cover.level_bounds},
                                             {"disjoint", cover.disjoint},
                                             {"covers", cover.covers},
                                             {"candidates", cover.candidates},
                                             {"meeting_infinity_ball", cover.meeting_infinity_ball},
                                             {"l0", cover.l0}});
  ids.push_back(sid);
  r.claim("balls", cover.balls.size(), {sid});
  r.claim("M", cover.M, ids);
  r.claim("max_overlap", cover.max_overlap, {sid});
  const bool ok = cover.radii_law && cover.level_bounds && cover.disjoint && cover.covers &&
                  cover.max_overlap <= 3 * cover.M;
  set_verdict(r, ok);
  r.outcome = "balls=" + std::to_string(cover.balls.size()) + " M=" + std::to_string(cover.M) +
              " overlap=" + std::to_string(cover.max_overlap);
  return r;
}

struct SolveArgs {
  double p = 2.0;
  std::optional<double> q;
  std::string form = "base";
  double inner = 2.0;
  std::optional<double> outer;
  double e_radius = 1.0;
  std::optional<double> omega_radius;
  double f_inf = 1.0, f_finite = 0.0;
  std::string obstacle = "base";
  double tol = 0.05, margin = 0.05, probe_tol = 0.1, influence_tol = 0.05, h = 1.0;
  std::vector<int> ladder, Ns{8, 16, 32, 64};
  bool no_probe = false;
  std::optional<double> probe_max;
};

EnergyGeometry parse_form(const std::string& s) {
  if (s == "base") return EnergyGeometry::Base;
  if (s == "spherical") return EnergyGeometry::Spherical;
  throw UsageError("--form must be 'base' or 'spherical'");
}

void radial_series(Report& r, const Space& X, const PointSet& dom, const FunctionField& u, const std::string& name) {
  auto& s = r.add_series(name, "radius |x| [metric]", "mean u on ring [data]");
  for (double rho = 1.0; rho + 1.0 <= X.truncation_radius(); rho *= 2.0) {
    const PointSet rg = ring(X, dom, rho);
    if (rg.empty()) continue;
    double m = 0.0;
    for (Index i : rg.members()) m += u.values[i];
    s.points.emplace_back(rho, m / static_cast<double>(rg.size()));
  }
}

Report cmd_solve(Context& ctx, const SolveArgs& a) {
  const auto& X = *need_space(ctx);
  const double R = X.truncation_radius();
  const double outer = a.outer.value_or(R - 1.0);
  const std::size_t n = X.size();
  PointSet dom(n);
  FunctionField data{std::vector<double>(n), std::nullopt};
  for (Index i = 0; i < n; ++i) {
    const double r = X.remoteness(i);
    if (r > a.inner && r < outer) dom.insert(i);
    data.values[i] = (X.coords(i).empty() ? r : X.coords(i)[0]) / R;
  }
  const EnergyForm form{a.p, parse_form(a.form)};
  SolveResult sol;
  double energy = 0.0;
  if (form.geometry == EnergyGeometry::Base) {
    sol = solve_p_harmonic(form, X, dom, data);
    energy = p_energy(form, X, sol.u, PointSet::all(n));
  } else {
    const auto sph = sph_of(ctx, a.q.value_or(need_q_or(ctx, 2.0 * a.p)));
    sol = solve_p_harmonic(form, sph, dom, data);
    energy = p_energy(form, sph, sol.u, PointSet::all(n));
  }
  Report r = new_report(ctx, "p-harmonic extension of boundary data on an annulus");
  const auto id = r.add_evidence("solve", {{"unknowns", dom.size()},
                                           {"iterations", sol.iterations},
                                           {"cg_iterations", sol.cg_iterations},
                                           {"residual", sol.residual},
                                           {"converged", sol.converged}});
  r.claim("energy", energy, {id});
  r.claim("residual", sol.residual, {id});
  radial_series(r, X, dom, sol.u, "radial-profile");
  set_verdict(r, sol.converged);
  r.outcome = sol.converged ? "converged" : "not converged";
  return r;
}

Report cmd_capacity(Context& ctx, const SolveArgs& a) {
  const auto& X = *need_space(ctx);
  const double omega_r = a.omega_radius.value_or(X.truncation_radius() / 2.0);
  const PointSet E = X.ball({X.base(), a.e_radius, true});
  const PointSet Om = X.ball({X.base(), omega_r, false});
  const EnergyForm form{a.p, parse_form(a.form)};
  double cap;
  if (form.geometry == EnergyGeometry::Base) {
    cap = condenser_capacity(form, X, E, Om);
  } else {
    cap = condenser_capacity(form, sph_of(ctx, a.q.value_or(need_q_or(ctx, 2.0 * a.p))), E, Om);
  }
  Report r = new_report(ctx, "condenser capacity of (closed ball, open ball) about a");
  const auto id = r.add_evidence(
      "condenser", {{"E_radius", a.e_radius}, {"omega_radius", omega_r}, {"E_size", E.size()}, {"omega_size", Om.size()}});
  r.claim("capacity", cap, {id});
  set_verdict(r, std::isfinite(cap) && cap > 0.0);
  r.outcome = "cap=" + format_double(cap);
  return r;
}

Report cmd_classify(Context& ctx, const SolveArgs& a) {
  const auto& X = *need_space(ctx);
  const double R = X.truncation_radius();
  const double q = a.q.value_or(2.0 * a.p);
  const auto rep = classify_parabolicity(X, a.p, q, dyadic(2.0, R / 2.0));
  Report r = new_report(ctx, "p-parabolicity from volume growth; capacity of infinity cross-check");
  auto& s = r.add_series("parabolicity", "log2 radius [log2 metric]", "log2 partial sum [log2 1]");
  std::vector<std::string> ids;
  for (const auto& row : rep.rows) {
    ids.push_back(r.add_evidence("rung", {{"radius", row.radius},
                                          {"measure", row.measure},
                                          {"local_slope", row.local_slope},
                                          {"partial_sum", row.partial_sum}}));
    s.points.emplace_back(std::log2(row.radius), std::log2(row.partial_sum));
  }
  r.claim("verdict", rep.verdict);
  r.claim("sigma_tail", rep.sigma_tail, ids);
  r.claim("exponent", rep.exponent, ids);
  r.claim("exponent_band", rep.exponent_band, ids);
  bool ok = rep.verdict != "INCONCLUSIVE";
  r.outcome = rep.verdict;
  if (!a.no_probe) {
    const auto sph = sph_of(ctx, q);
    std::vector<double> hat;
    for (double rho : dyadic(1.0, a.probe_max.value_or(R / 2.0))) hat.push_back(1.0 / (1.0 + rho));
    const auto probe = capacity_at_infinity_probe(sph, a.p, hat);
    auto& ps = r.add_series("capacity-probe", "outer radius [metric]", "resistance [energy^(-1/(p-1))]");
    std::vector<std::string> pids;
    for (const auto& row : probe.rows) {
      pids.push_back(r.add_evidence("probe", {{"hat_radius", row.hat_radius},
                                              {"outer_radius", row.outer_radius},
                                              {"capacity", row.capacity},
                                              {"resistance", row.resistance}}));
      ps.points.emplace_back(row.outer_radius, row.resistance);
    }
    r.claim("probe_verdict", probe.verdict);
    r.claim("probe_exponent", probe.exponent, pids);
    const bool agree = (rep.verdict == "PARABOLIC" && probe.verdict == "VANISHING") ||
                       (rep.verdict == "HYPERBOLIC" && probe.verdict == "POSITIVE");
    ok = ok && agree;
    r.outcome += " / " + probe.verdict;
  }
  set_verdict(r, ok);
  return r;
}

Report cmd_dirichlet_solve(Context& ctx, const SolveArgs& a) {
  const auto& X = *need_space(ctx);
  const auto sph = sph_of(ctx, a.q.value_or(need_q_or(ctx, 2.0 * a.p)));
  const PointSet om = exterior_domain(X, a.inner, parse_obstacle(a.obstacle));
  FunctionField data{std::vector<double>(X.size(), a.f_finite), a.f_inf};
  const auto res = perron_solve({&sph, om, data, a.p, true, 0.0});
  Report r = new_report(ctx, "exterior problem with data at infinity");
  const auto id = r.add_evidence("solve", {{"unknowns", om.size()},
                                           {"residual", res.residual},
                                           {"iterations", res.iterations},
                                           {"connection_radius", res.connection_radius},
                                           {"identified_with_infinity", res.identified_with_infinity},
                                           {"sensitivity_radius", res.sensitivity_radius}});
  r.claim("sensitivity", res.sensitivity, {id});
  r.claim("residual", res.residual, {id});
  radial_series(r, X, om, res.u, "radial-profile");
  set_verdict(r, res.converged);
  r.outcome = res.converged ? "converged" : "not converged";
  return r;
}

Report cmd_probe_infinity(Context& ctx, const SolveArgs& a) {
  const auto ladder = ladder_spaces(ctx, a.ladder, {16, 32, 64});
  const double q = a.q.value_or(2.0 * a.p);
  const std::vector<BoundaryData> battery = {
      {"zero, f(inf)=0", 0.0, [](const Space&, Index) { return 0.0; }},
      {"zero, f(inf)=1", 1.0, [](const Space&, Index) { return 0.0; }},
      {"one, f(inf)=0", 0.0, [](const Space&, Index) { return 1.0; }},
  };
  RegularityOptions o;
  o.inner_radius = a.inner;
  o.obstacle = parse_obstacle(a.obstacle);
  o.tolerance = a.probe_tol;
  o.influence_tolerance = a.influence_tol;
  const auto rep = regularity_probe(ladder, a.p, q, battery, o);
  Report r = new_report(ctx, "behaviour of exterior solutions at infinity");
  auto& s = r.add_series("regularity", "truncation R [metric]", "outer-ring mean [data]");
  auto& si = r.add_series("influence", "truncation R [metric]", "first-layer sup-difference [data]");
  std::vector<std::string> ids, iids;
  for (const auto& row : rep.rows) {
    ids.push_back(r.add_evidence("ring", {{"truncation", row.truncation},
                                          {"member", battery[row.member].name},
                                          {"mean", row.ring_mean},
                                          {"min", row.ring_min},
                                          {"max", row.ring_max},
                                          {"residual", row.residual}}));
    if (row.member == 1) s.points.emplace_back(row.truncation, row.ring_mean);
  }
  for (const auto& row : rep.influence) {
    iids.push_back(r.add_evidence("influence", {{"truncation", row.truncation},
                                                {"a", battery[row.member_a].name},
                                                {"b", battery[row.member_b].name},
                                                {"sup_difference", row.sup_difference}}));
    si.points.emplace_back(row.truncation, row.sup_difference);
  }
  r.claim("classification", rep.classification);
  r.claim("trend", rep.trend, ids);
  r.claim("trend_error", rep.trend_error, ids);
  r.claim("limit_independent_of_infinity", rep.limit_independent_of_infinity);
  if (!iids.empty()) r.claim("final_influence", rep.influence.back().sup_difference, {iids.back()});
  r.notes = rep.notes;
  set_verdict(r, rep.classification != "UNRESOLVED");
  r.outcome = rep.classification;
  return r;
}

Report cmd_barrier(Context& ctx, const SolveArgs& a) {
  const auto& X = *need_space(ctx);
  if (X.coords(X.base()).empty()) throw UsageError("dirichlet barrier needs a space with coordinates");
  const auto sph = sph_of(ctx, 2.0 * a.p);
  const PointSet om = exterior_domain(X, a.inner, parse_obstacle(a.obstacle));
  const auto P = perron_solve({&sph, om, {std::vector<double>(X.size(), 0.0), 1.0}, a.p, true, 0.0}, {}, false);
  const double c = fit_inverse_profile(X, om, P.u);
  FunctionField b{std::vector<double>(X.size()), 0.0};
  for (Index i = 0; i < X.size(); ++i) {
    const double r = coordinate_norm(X, i);
    b.values[i] = r > 0.0 ? c / r : c;
  }
  const auto fitted = barrier_check(sph, om, b, a.p, a.tol, a.margin);
  const auto one = barrier_check(sph, om, FunctionField::constant(X.size(), 1.0), a.p, a.tol, a.margin);
  const auto zero = barrier_check(sph, om, FunctionField::constant(X.size(), 0.0), a.p, a.tol, a.margin);
  Report r = new_report(ctx, "barrier at infinity: superharmonic, decaying, positive near the boundary");
  std::vector<std::string> ids;
  const std::pair<const char*, const BarrierReport*> cases[] = {{"c/|x|", &fitted}, {"u=1", &one}, {"u=0", &zero}};
  for (const auto& [name, br] : cases) {
    json rings = json::array();
    for (const auto& [rho, m] : br->ring_maxima) rings.push_back({rho, m});
    ids.push_back(r.add_evidence("field", {{"field", name},
                                           {"pass", br->pass},
                                           {"failed_condition", br->failed_condition},
                                           {"witness", X.id(br->witness)},
                                           {"witness_value", br->witness_value},
                                           {"worst_excess", br->worst_excess},
                                           {"ring_maxima", rings}}));
  }
  r.claim("c", c, {ids[0]});
  r.claim("fitted_pass", fitted.pass);
  r.claim("degenerate_fail", !one.pass && !zero.pass);
  set_verdict(r, fitted.pass && !one.pass && !zero.pass);
  r.outcome = std::string(fitted.pass ? "barrier accepted" : "barrier rejected") +
              (!one.pass && !zero.pass ? ", degenerate fields rejected" : ", a degenerate field was accepted");
  return r;
}

Report cmd_perturb(Context& ctx, const SolveArgs& a) {
  const auto rows = refinement_perturbation(a.Ns, a.p, a.h);
  Report r = new_report(ctx, "a single boundary vertex perturbation fades under refinement");
  auto& s = r.add_series("perturbation", "disc size N [lattice units]", "core sup-difference [data]");
  std::vector<std::string> ids;
  bool decreasing = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ids.push_back(r.add_evidence("disc", {{"N", rows[k].N},
                                          {"capacity", rows[k].capacity},
                                          {"core_difference", rows[k].core_difference},
                                          {"sup_difference", rows[k].sup_difference}}));
    s.points.emplace_back(rows[k].N, rows[k].core_difference);
    if (k && !(rows[k].core_difference < rows[k - 1].core_difference)) decreasing = false;
  }
  // The empty perturbation must reproduce the solution exactly.
  const int N = a.Ns.empty() ? 8 : a.Ns.back();
  auto space = std::make_shared<const Space>(generate_grid(2, N, 0.0));
  const auto sph = sphericalize(space, 2.0 * a.p);
  PointSet omega(space->size());
  FunctionField f{std::vector<double>(space->size()), std::nullopt};
  for (Index i = 0; i < space->size(); ++i) {
    if (space->remoteness(i) < N) omega.insert(i);
    f.values[i] = space->coords(i)[0] / N;
  }
  const EnergyForm form{a.p, EnergyGeometry::Spherical};
  const auto u1 = solve_p_harmonic(form, sph, omega, f), u2 = solve_p_harmonic(form, sph, omega, f);
  const bool bitwise = u1.u.values == u2.u.values;
  const auto eid = r.add_evidence("empty", {{"N", N}, {"bitwise_equal", bitwise}});
  const double final_diff = rows.empty() ? 0.0 : rows.back().core_difference;
  r.claim("final_core_difference", final_diff, {ids.empty() ? eid : ids.back()});
  r.claim("decreasing", decreasing);
  r.claim("empty_perturbation_bitwise_equal", bitwise);
  set_verdict(r, decreasing && final_diff < a.tol && bitwise);
  r.outcome = "final=" + format_double(final_diff);
  return r;
}

// ---------------------------------------------------------------------------

std::string slug(const std::string& command) {
  std::string s;
  for (char c : command) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!s.empty() && s.back() != '-')
      s += '-';
    if (s.size() >= 40) break;
  }
  while (!s.empty() && s.back() == '-') s.pop_back();
  return s.empty() ? "report" : s;
}

std::vector<std::string> normalize(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    const auto eq = t.find('=');
    const bool keyed = eq != std::string::npos && eq > 0 && t[0] != '-' &&
                       std::all_of(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(eq), [](char c) {
                         return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
                       });
    if (!keyed) {
      out.push_back(t);
      continue;
    }
    std::string key = t.substr(0, eq);
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + t.substr(eq));
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

// The echo leaves out where reports go, so bundles written to different
// directories stay byte-identical.
std::vector<std::string> without_out(const std::vector<std::string>& tokens) {
  std::vector<std::string> kept;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] == "--out") {
      ++k;
      continue;
    }
    if (tokens[k].rfind("--out=", 0) == 0 || tokens[k].rfind("out=", 0) == 0) continue;
    kept.push_back(tokens[k]);
  }
  return kept;
}

struct Outcome {
  std::optional<Report> report;
  bool pass = true;
  std::string path;  // subcommand chain, e.g. "check-doubling"
};

Outcome run_pipeline(Context& ctx, const std::optional<std::string>& file);

// Parses one invocation and runs it against `ctx`.
Outcome execute(const std::vector<std::string>& raw, Context& ctx, bool top_level) {
  const auto tokens = normalize(raw);
  CLI::App app{"spherekit: sphericalization of unbounded metric measure spaces", "spherekit"};
  app.fallthrough();
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_file, out_dir, space_file;
  app.add_option("--seed", seed, "root seed");
  app.add_option("--config", config_file, "TOML or JSON experiment config");
  app.add_option("--out", out_dir, "directory for reports");
  app.add_option("--space", space_file, "space document to load");

  std::function<Outcome()> action;
  GenArgs g;
  SphArgs sa;
  CheckArgs ca;
  SolveArgs so;
  std::string file, series, output;
  std::optional<std::string> pipeline_file;

  auto report_action = [&](std::function<Report()> f) {
    return [&, f] {
      action = [f] {
        Outcome o;
        o.report = f();
        o.pass = o.report->passed();
        return o;
      };
    };
  };

  auto* gen = app.add_subcommand("gen", "generate a space");
  gen->require_subcommand(1);
  auto* grid = gen->add_subcommand("grid", "integer grid {-R..R}^dim");
  grid->add_option("dim", g.dim)->required();
  grid->add_option("R", g.half_width)->required();
  grid->add_option("alpha", g.alpha, "mass exponent: mu(x) = (1+|x|)^alpha");
  grid->add_option("-o,--output", g.output);
  grid->callback(report_action([&] { return cmd_gen(ctx, g, true); }));
  auto* rnd = gen->add_subcommand("random", "random geometric graph");
  rnd->add_option("--points", g.points);
  rnd->add_option("--neighbors", g.neighbors);
  rnd->add_option("--space-seed", g.space_seed);
  rnd->add_option("-o,--output", g.output);
  rnd->callback(report_action([&] { return cmd_gen(ctx, g, false); }));

  auto* val = app.add_subcommand("validate", "load and validate a space document");
  val->add_option("file", file)->required();
  val->callback(report_action([&] { return cmd_validate(ctx, file); }));

  auto* sph = app.add_subcommand("sphericalize", "attach infinity and check the metric sandwich");
  sph->add_option("--q", sa.q)->required();
  sph->add_option("-o,--output", sa.output);
  sph->add_option("--sources", sa.sources, "source rows checked on large spaces");
  sph->callback(report_action([&] { return cmd_sphericalize(ctx, sa); }));

  auto* check = app.add_subcommand("check", "geometric estimators");
  check->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--q", ca.q);
    c->add_option("--r-min", ca.r_min);
    c->add_option("--r-max", ca.r_max);
    c->add_option("--samples", ca.samples);
    c->add_flag("--base", ca.base, "use the base space even after sphericalize");
  };
  auto* cd = check->add_subcommand("doubling");
  common(cd);
  cd->callback(report_action([&] { return cmd_doubling(ctx, ca); }));
  auto* cdim = check->add_subcommand("dim");
  common(cdim);
  cdim->add_option("--resolution", ca.resolution);
  cdim->callback(report_action([&] { return cmd_dim(ctx, ca); }));
  auto* cp = check->add_subcommand("perfect");
  common(cp);
  cp->add_option("--cap", ca.cap);
  cp->callback(report_action([&] { return cmd_perfect(ctx, ca); }));
  auto* can = check->add_subcommand("annular");
  can->add_option("--A", ca.A)->delimiter(',');
  can->callback(report_action([&] { return cmd_annular(ctx, ca); }));
  auto* cah = check->add_subcommand("ahlfors");
  common(cah);
  cah->add_option("--Q", ca.Q)->required();
  cah->add_option("--center-radius", ca.center_radius);
  cah->callback(report_action([&] { return cmd_ahlfors(ctx, ca); }));
  auto* cpo = check->add_subcommand("poincare");
  common(cpo);
  cpo->add_option("--p", ca.p);
  cpo->add_option("--lambda", ca.lambda);
  cpo->add_option("--balls", ca.balls);
  cpo->add_option("--distance-functions", ca.distance_functions);
  cpo->callback(report_action([&] { return cmd_poincare(ctx, ca); }));
  auto* cn = check->add_subcommand("necessity");
  common(cn);
  cn->add_option("--ladder", ca.ladder)->delimiter(',');
  cn->callback(report_action([&] { return cmd_necessity(ctx, ca); }));
  auto* cw = check->add_subcommand("whitney");
  cw->add_option("--q", ca.q);
  cw->add_option("--r", ca.r);
  cw->add_option("--lambda-hint", ca.lambda_hint);
  cw->add_option("--annular-R", ca.annular_R);
  cw->callback(report_action([&] { return cmd_whitney(ctx, ca); }));

  auto solve_common = [&](CLI::App* c) {
    c->add_option("--p", so.p);
    c->add_option("--q", so.q);
  };
  auto* sv = app.add_subcommand("solve", "p-harmonic extension on an annulus about a");
  solve_common(sv);
  sv->add_option("--form", so.form, "base | spherical");
  sv->add_option("--inner", so.inner);
  sv->add_option("--outer", so.outer);
  sv->callback(report_action([&] { return cmd_solve(ctx, so); }));
  auto* cap = app.add_subcommand("capacity", "condenser capacity about a");
  solve_common(cap);
  cap->add_option("--form", so.form, "base | spherical");
  cap->add_option("--e-radius", so.e_radius);
  cap->add_option("--omega-radius", so.omega_radius);
  cap->callback(report_action([&] { return cmd_capacity(ctx, so); }));
  auto* cls = app.add_subcommand("classify", "parabolic or hyperbolic");
  solve_common(cls);
  cls->add_flag("--no-probe", so.no_probe);
  cls->add_option("--probe-max", so.probe_max, "largest outer radius of the capacity probe");
  cls->callback(report_action([&] { return cmd_classify(ctx, so); }));

  auto* dir = app.add_subcommand("dirichlet", "problems with data at infinity");
  dir->require_subcommand(1);
  auto dir_common = [&](CLI::App* c) {
    solve_common(c);
    c->add_option("--inner", so.inner);
    c->add_option("--obstacle", so.obstacle, "base | coordinate");
  };
  auto* ds = dir->add_subcommand("solve");
  dir_common(ds);
  ds->add_option("--f-inf", so.f_inf);
  ds->add_option("--f-finite", so.f_finite);
  ds->callback(report_action([&] { return cmd_dirichlet_solve(ctx, so); }));
  auto* dp = dir->add_subcommand("probe-infinity");
  dir_common(dp);
  dp->add_option("--ladder", so.ladder)->delimiter(',');
  dp->add_option("--tol", so.probe_tol);
  dp->add_option("--influence-tol", so.influence_tol);
  dp->callback(report_action([&] { return cmd_probe_infinity(ctx, so); }));
  auto* db = dir->add_subcommand("barrier");
  dir_common(db);
  db->add_option("--tol", so.tol);
  db->add_option("--margin", so.margin);
  db->callback(report_action([&] { return cmd_barrier(ctx, so); }));
  auto* dpt = dir->add_subcommand("perturb");
  solve_common(dpt);
  dpt->add_option("--N", so.Ns)->delimiter(',');
  dpt->add_option("--amount", so.h, "size of the boundary perturbation");
  dpt->add_option("--tol", so.tol);
  dpt->callback(report_action([&] { return cmd_perturb(ctx, so); }));

  auto* pipe = app.add_subcommand("pipeline", "run the pipeline of a config");
  pipe->add_option("file", pipeline_file, "config holding the pipeline (defaults to --config)");
  pipe->callback([&] { action = [&] { return run_pipeline(ctx, pipeline_file); }; });

  auto* plot = app.add_subcommand("plot", "CSV of one report series");
  plot->add_option("report", file)->required();
  plot->add_option("--series", series)->required();
  plot->add_option("-o,--output", output);
  plot->callback([&] {
    action = [&] {
      const std::string csv = emit_plot_data(read_report(file), series);
      if (output.empty()) {
        *ctx.out << csv;
      } else {
        std::ofstream f(output, std::ios::binary);
        if (!f) throw Error("cannot write '" + output + "'");
        f << csv;
      }
      return Outcome{};
    };
  });

  if (!top_level) pipe->group("");  // hidden inside pipelines

  std::vector<std::string> rev(tokens.rbegin(), tokens.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    *ctx.out << app.help();
    return {};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (config_file) {
    ctx.config = load_config(*config_file);
    if (!seed && !ctx.seed_given) ctx.seed = ctx.config.seed;
  }
  if (seed) {
    ctx.seed = *seed;
    ctx.seed_given = true;
  }
  if (out_dir) ctx.out_dir = *out_dir;
  if (space_file) {
    ctx.space_file = *space_file;
    ctx.space.reset();
    ctx.q.reset();
  }
  if (!top_level && pipe->parsed()) throw UsageError("pipelines cannot nest");
  std::string path;
  for (const CLI::App* c = &app; !c->get_subcommands().empty();) {
    c = c->get_subcommands().front();
    path += (path.empty() ? "" : "-") + c->get_name();
  }
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = action();
  o.path = path;
  if (o.report) {
    o.report->command = join(without_out(raw));
    o.report->wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.report->validate();
  }
  return o;
}

Outcome run_pipeline(Context& ctx, const std::optional<std::string>& file) {
  if (file) {
    ctx.config = load_config(*file);
    if (!ctx.seed_given) ctx.seed = ctx.config.seed;
  }
  const auto dir = ctx.out_dir.value_or(ctx.config.output_dir);
  std::filesystem::create_directories(dir);
  json index = {{"schema", kReportSchema}, {"config_hash", config_hash(ctx.config)}, {"seed", ctx.seed}};
  json steps = json::array();
  Outcome total;
  auto write_index = [&](const std::string& verdict) {
    index["steps"] = steps;
    index["verdict"] = verdict;
    std::ofstream f(dir / "index.json", std::ios::binary);
    if (!f) throw Error("cannot write '" + (dir / "index.json").string() + "'");
    f << index.dump(2) << '\n';
  };
  const std::uint64_t root = ctx.seed;
  for (std::size_t k = 0; k < ctx.config.pipeline.size(); ++k) {
    const auto& command = ctx.config.pipeline[k];
    Context step = ctx;
    step.seed = step_seed(root, k);
    step.out_dir.reset();
    Outcome o;
    try {
      o = execute(tokenize(command), step, false);
    } catch (const std::exception& e) {
      steps.push_back({{"index", k}, {"command", command}, {"error", e.what()}});
      index["error"] = e.what();
      write_index("ERROR");
      throw;
    }
    ctx.space = step.space;
    ctx.source = step.source;
    ctx.q = step.q;
    ctx.space_file = step.space_file;
    char stem[16];
    std::snprintf(stem, sizeof stem, "%02zu-", k);
    json entry = {{"index", k}, {"command", command}, {"seed", step.seed}};
    if (o.report) {
      const auto name = std::string(stem) + slug(command);
      write_report(*o.report, dir, name);
      entry["report"] = name + ".json";
      entry["verdict"] = o.report->verdict;
      *ctx.out << o.report->verdict << "  " << command << ": " << o.report->outcome << '\n';
    }
    total.pass = total.pass && o.pass;
    steps.push_back(entry);
  }
  write_index(total.pass ? "PASS" : "FAIL");
  *ctx.out << (total.pass ? "PASS" : "FAIL") << "  pipeline: " << ctx.config.pipeline.size() << " steps, bundle in "
           << dir.string() << '\n';
  return total;
}

}  // namespace

std::uint64_t step_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(0x9e3779b97f4a7c15ULL + index));
}

std::vector<std::string> tokenize(const std::string& command) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, any = false;
  for (char c : command) {
    if (c == '"') {
      quoted = !quoted;
      any = true;
    } else if (!quoted && std::isspace(static_cast<unsigned char>(c))) {
      if (any) out.push_back(cur);
      cur.clear();
      any = false;
    } else {
      cur += c;
      any = true;
    }
  }
  if (quoted) throw UsageError("unbalanced quote in '" + command + "'");
  if (any) out.push_back(cur);
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  try {
    Outcome o = execute(args, ctx, true);
    if (o.report) {
      out << o.report->verdict << "  " << o.report->command << ": " << o.report->outcome << '\n';
      if (ctx.out_dir) {
        const auto path = write_report(*o.report, *ctx.out_dir, o.path);
        out << "report: " << path.string() << '\n';
      }
    }
    return o.pass ? kPass : kVerdictFailure;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kVerdictFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerdictFailure;
  }
}

}  // namespace spherekit::cli
