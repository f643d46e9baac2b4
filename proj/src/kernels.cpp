#include "spherekit/kernels.hpp"

#include <omp.h>

#ifdef __SSE2__
#include <emmintrin.h>
#endif

#include <cmath>
#include <cstdlib>
#include <limits>

#include "spherekit/error.hpp"

namespace spherekit::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 2048;
constexpr std::size_t kParallelMin = 2048;

struct Candidate {
  double value = kInf;
  Index index = std::numeric_limits<Index>::max();
  std::size_t pos = 0;
};

inline bool better(double v, Index i, const Candidate& c) {
  return v < c.value || (v == c.value && i < c.index);
}

// Search state shared by both backends. Active nodes are stored by position
// (structure of arrays, swap-remove on settle) so the relax-and-argmin sweep
// reads memory contiguously. The sweep is the only part that differs.
struct ChainState {
  std::size_t n;
  const double* t;
  double bound;
  std::vector<double>& dist;
  int dim = 0;              // lattice dimension, 0 for generic spaces
  const Space* space;
  std::vector<std::uint32_t> idx;
  std::vector<double> tent, tv;
  std::vector<double> c[3];  // lattice coordinates, exact in double
  double tent_inf = kInf;
  bool inf_settled = false;
  Index cur;
  double dcur = 0.0;

  ChainState(const Space& sp, const double* t_, Index source, double bound_, std::vector<double>& dist_)
      : n(sp.size()), t(t_), bound(bound_), dist(dist_), space(&sp), cur(source) {
    dist.assign(n + 1, kInf);
    if (sp.lattice()) dim = sp.lattice()->dim;
    idx.reserve(n);
    tv.reserve(n);
    for (Index i = 0; i < n; ++i) {
      if (i == source) continue;
      idx.push_back(static_cast<std::uint32_t>(i));
      tv.push_back(t[i]);
      for (int k = 0; k < dim; ++k) c[k].push_back(sp.lattice_coord(i, k));
    }
    tent.assign(idx.size(), kInf);
    if (source == n) inf_settled = true;
  }

  std::size_t size() const { return idx.size(); }

  static inline void relax(double& slot, double cand) {
    if (cand < slot * kRelaxShrink) slot = cand;
  }

  template <int Dim>
  void sweep(std::size_t lo, std::size_t hi, Candidate& best) {
    const std::uint32_t* __restrict id = idx.data();
    double* __restrict te = tent.data();
    const double* __restrict tt = tv.data();
    const double d0 = dcur;
    if (cur == n) {
      for (std::size_t pos = lo; pos < hi; ++pos) {
        const double cand = d0 + tt[pos];
        const double old = te[pos];
        te[pos] = cand < old * kRelaxShrink ? cand : old;
      }
      argmin(lo, hi, best);
      return;
    }
    const double tc = t[cur];
    if constexpr (Dim == 0) {
      const double* row = space->distances_from(cur).data();
      for (std::size_t pos = lo; pos < hi; ++pos) {
        relax(te[pos], d0 + row[id[pos]] * (tc * tt[pos]));
        if (better(te[pos], id[pos], best)) best = {te[pos], id[pos], pos};
      }
    } else {
      const double* __restrict c0 = c[0].data();
      const double* __restrict c1 = c[1].data();
      const double* __restrict c2 = c[2].data();
      const double w0 = space->lattice_coord(cur, 0);
      const double w1 = Dim > 1 ? space->lattice_coord(cur, 1) : 0;
      const double w2 = Dim > 2 ? space->lattice_coord(cur, 2) : 0;
      std::size_t pos = lo;
      double bv = best.value;
#ifdef __SSE2__
      // Same operations as the scalar loop below, two lanes at a time, with
      // the running minimum folded in.
      const __m128d sign = _mm_set1_pd(-0.0), shrink = _mm_set1_pd(kRelaxShrink);
      const __m128d vd0 = _mm_set1_pd(d0), vtc = _mm_set1_pd(tc);
      const __m128d vw0 = _mm_set1_pd(w0), vw1 = _mm_set1_pd(w1), vw2 = _mm_set1_pd(w2);
      __m128d m = _mm_set1_pd(bv);
      for (; pos + 2 <= hi; pos += 2) {
        __m128d sv = _mm_andnot_pd(sign, _mm_sub_pd(_mm_loadu_pd(c0 + pos), vw0));
        if constexpr (Dim > 1) sv = _mm_add_pd(sv, _mm_andnot_pd(sign, _mm_sub_pd(_mm_loadu_pd(c1 + pos), vw1)));
        if constexpr (Dim > 2) sv = _mm_add_pd(sv, _mm_andnot_pd(sign, _mm_sub_pd(_mm_loadu_pd(c2 + pos), vw2)));
        const __m128d cand = _mm_add_pd(vd0, _mm_mul_pd(sv, _mm_mul_pd(vtc, _mm_loadu_pd(tt + pos))));
        const __m128d old = _mm_loadu_pd(te + pos);
        const __m128d keep = _mm_cmplt_pd(cand, _mm_mul_pd(old, shrink));
        const __m128d v = _mm_or_pd(_mm_and_pd(keep, cand), _mm_andnot_pd(keep, old));
        _mm_storeu_pd(te + pos, v);
        m = _mm_min_pd(m, v);
      }
      alignas(16) double lanes[2];
      _mm_store_pd(lanes, m);
      bv = std::min(lanes[0], lanes[1]);
#endif
      for (; pos < hi; ++pos) {
        // Integer-valued, so the sum is exact.
        double s = std::abs(c0[pos] - w0);
        if constexpr (Dim > 1) s += std::abs(c1[pos] - w1);
        if constexpr (Dim > 2) s += std::abs(c2[pos] - w2);
        const double cand = d0 + s * (tc * tt[pos]);
        const double old = te[pos];
        te[pos] = cand < old * kRelaxShrink ? cand : old;
        bv = te[pos] < bv ? te[pos] : bv;
      }
      pick(lo, hi, bv, best);
    }
  }

  // Smallest tentative value, ties to the smaller index. The value pass is a
  // plain min (exact in any order); only positions holding the minimum are
  // then compared by index.
  void argmin(std::size_t lo, std::size_t hi, Candidate& best) const {
    const double* __restrict te = tent.data();
    double bv = best.value;
    std::size_t pos = lo;
#ifdef __SSE2__
    __m128d m = _mm_set1_pd(bv);
    for (; pos + 2 <= hi; pos += 2) m = _mm_min_pd(m, _mm_loadu_pd(te + pos));
    alignas(16) double lanes[2];
    _mm_store_pd(lanes, m);
    bv = std::min(lanes[0], lanes[1]);
#endif
    for (; pos < hi; ++pos) bv = te[pos] < bv ? te[pos] : bv;
    pick(lo, hi, bv, best);
  }

  // Among positions holding the minimum bv, the smallest index wins.
  void pick(std::size_t lo, std::size_t hi, double bv, Candidate& best) const {
    const double* __restrict te = tent.data();
    if (!(bv < best.value) && !(bv == best.value)) return;
    std::size_t pos = lo;
#ifdef __SSE2__
    const __m128d target = _mm_set1_pd(bv);
    for (; pos + 2 <= hi; pos += 2) {
      const int hit = _mm_movemask_pd(_mm_cmpeq_pd(_mm_loadu_pd(te + pos), target));
      if (!hit) continue;
      for (int k = 0; k < 2; ++k)
        if ((hit >> k) & 1) consider(bv, pos + k, best);
    }
#endif
    for (; pos < hi; ++pos)
      if (te[pos] == bv) consider(bv, pos, best);
  }

  void consider(double v, std::size_t pos, Candidate& best) const {
    if (better(v, idx[pos], best)) best = {v, idx[pos], pos};
  }

  void remove(std::size_t pos) {
    const std::size_t last = idx.size() - 1;
    idx[pos] = idx[last];
    tent[pos] = tent[last];
    tv[pos] = tv[last];
    idx.pop_back();
    tent.pop_back();
    tv.pop_back();
    for (int k = 0; k < dim; ++k) {
      c[k][pos] = c[k][last];
      c[k].pop_back();
    }
  }

  // Relaxes ∞ from the current node, picks the next node, settles it.
  // Returns false when the search is finished.
  bool settle_next(Candidate best) {
    if (!inf_settled && cur != n) relax(tent_inf, dcur + t[cur]);
    bool pick_inf = false;
    if (!inf_settled && better(tent_inf, n, best)) {
      best = {tent_inf, n, 0};
      pick_inf = true;
    }
    if (!(best.value < bound)) return false;
    if (pick_inf)
      inf_settled = true;
    else
      remove(best.pos);
    cur = best.index;
    dcur = best.value;
    dist[cur] = dcur;
    return true;
  }
};

template <int Dim>
void chain_serial_impl(ChainState& st) {
  st.dist[st.cur] = 0.0;
  for (;;) {
    Candidate best;
    st.sweep<Dim>(0, st.size(), best);
    if (!st.settle_next(best)) break;
  }
}

template <int Dim>
void chain_parallel_impl(ChainState& st) {
  st.dist[st.cur] = 0.0;
  const int threads = omp_get_max_threads();
  std::vector<Candidate> partial(static_cast<std::size_t>(threads));
  bool done = false;
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    const int nt = omp_get_num_threads();
    while (!done) {
      // Static contiguous split so each thread's candidate is well defined.
      const std::size_t m = st.size();
      const std::size_t lo = m * static_cast<std::size_t>(tid) / static_cast<std::size_t>(nt);
      const std::size_t hi = m * static_cast<std::size_t>(tid + 1) / static_cast<std::size_t>(nt);
      Candidate best;
      st.sweep<Dim>(lo, hi, best);
      partial[static_cast<std::size_t>(tid)] = best;
#pragma omp barrier
#pragma omp single
      {
        Candidate all;
        for (int k = 0; k < nt; ++k) {
          const auto& c = partial[static_cast<std::size_t>(k)];
          if (better(c.value, c.index, all)) all = c;
        }
        if (!st.settle_next(all)) done = true;
      }
    }
  }
}

template <bool Parallel>
void chain_dispatch(const Space& space, std::span<const double> t, Index source, double bound,
                    std::vector<double>& dist) {
  const std::size_t n = space.size();
  if (t.size() != n) throw InvalidArgument("chain_sssp: t must have one entry per point");
  if (source > n) throw InvalidArgument("chain_sssp: unknown source");
  ChainState st(space, t.data(), source, bound, dist);
  auto run = [&]<int Dim>() {
    if constexpr (Parallel) {
      if (n >= kParallelMin) {
        chain_parallel_impl<Dim>(st);
        return;
      }
    }
    chain_serial_impl<Dim>(st);
  };
  switch (st.dim) {
    case 1: run.template operator()<1>(); return;
    case 2: run.template operator()<2>(); return;
    case 3: run.template operator()<3>(); return;
    default: run.template operator()<0>(); return;
  }
}

inline double power_half(double s, double p) {
  // s^{p/2} with the common exponents special-cased.
  if (p == 2.0) return s;
  if (p == 4.0) return s * s;
  return std::pow(s, 0.5 * p);
}

}  // namespace

Exec default_exec() {
  static const Exec e = std::getenv("SPHEREKIT_SERIAL") ? Exec::Serial : Exec::Parallel;
  return e;
}

namespace serial {
void chain_sssp(const Space& space, std::span<const double> t, Index source, double bound, std::vector<double>& dist) {
  chain_dispatch<false>(space, t, source, bound, dist);
}
}  // namespace serial

namespace parallel {
void chain_sssp(const Space& space, std::span<const double> t, Index source, double bound, std::vector<double>& dist) {
  chain_dispatch<true>(space, t, source, bound, dist);
}
}  // namespace parallel

void chain_sssp(Exec exec, const Space& space, std::span<const double> t, Index source, double bound,
                std::vector<double>& dist) {
  if (exec == Exec::Parallel)
    parallel::chain_sssp(space, t, source, bound, dist);
  else
    serial::chain_sssp(space, t, source, bound, dist);
}

void EdgeSystem::finalize() {
  offsets.assign(vertices + 1, 0);
  for (std::size_t e = 0; e < u.size(); ++e) {
    ++offsets[u[e] + 1];
    ++offsets[v[e] + 1];
  }
  for (std::size_t i = 0; i < vertices; ++i) offsets[i + 1] += offsets[i];
  incident.resize(offsets[vertices]);
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t e = 0; e < u.size(); ++e) {
    incident[fill[u[e]]++] = static_cast<std::uint32_t>(e);
    incident[fill[v[e]]++] = static_cast<std::uint32_t>(e);
  }
}

double smoothed_energy(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta) {
  const std::size_t m = sys.edges();
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  const double d2 = delta * delta;
  auto chunk_sum = [&](std::size_t c) {
    double s = 0.0;
    const std::size_t hi = std::min(m, (c + 1) * kChunk);
    for (std::size_t e = c * kChunk; e < hi; ++e) {
      const double g = x[sys.u[e]] - x[sys.v[e]];
      s += sys.kappa[e] * power_half(g * g + d2, p);
    }
    partial[c] = s;
  };
  if (exec == Exec::Parallel && chunks > 1) {
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) chunk_sum(c);
  } else {
    for (std::size_t c = 0; c < chunks; ++c) chunk_sum(c);
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

namespace {

// Per-edge derivative of kappa·(g²+δ²)^{p/2} with respect to g, times g's sign.
void edge_flux(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta,
               std::vector<double>& flux) {
  const std::size_t m = sys.edges();
  flux.resize(m);
  const double d2 = delta * delta;
  auto body = [&](std::size_t e) {
    const double g = x[sys.u[e]] - x[sys.v[e]];
    const double s = g * g + d2;
    const double f = p == 2.0 ? 1.0 : std::pow(s, 0.5 * p - 1.0);
    flux[e] = sys.kappa[e] * p * f * g;
  };
  if (exec == Exec::Parallel && m >= kParallelMin) {
#pragma omp parallel for schedule(static)
    for (std::size_t e = 0; e < m; ++e) body(e);
  } else {
    for (std::size_t e = 0; e < m; ++e) body(e);
  }
}

}  // namespace

void smoothed_gradient(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta,
                       std::span<double> grad) {
  thread_local std::vector<double> scratch;
  // Workers must see the caller's buffer, not their own thread_local copy.
  std::vector<double>& flux = scratch;
  edge_flux(exec, sys, x, p, delta, flux);
  auto body = [&](std::size_t i) {
    double g = 0.0;
    for (std::size_t k = sys.offsets[i]; k < sys.offsets[i + 1]; ++k) {
      const std::uint32_t e = sys.incident[k];
      g += sys.u[e] == i ? flux[e] : -flux[e];
    }
    grad[i] = g;
  };
  if (exec == Exec::Parallel && sys.vertices >= kParallelMin) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < sys.vertices; ++i) body(i);
  } else {
    for (std::size_t i = 0; i < sys.vertices; ++i) body(i);
  }
}

void hessian_weights(Exec exec, const EdgeSystem& sys, std::span<const double> x, double p, double delta,
                     std::span<double> h) {
  const std::size_t m = sys.edges();
  const double d2 = delta * delta;
  auto body = [&](std::size_t e) {
    const double g = x[sys.u[e]] - x[sys.v[e]];
    if (p == 2.0) {
      h[e] = 2.0 * sys.kappa[e];
      return;
    }
    const double s = g * g + d2;
    h[e] = sys.kappa[e] * p * std::pow(s, 0.5 * p - 2.0) * ((p - 1.0) * g * g + d2);
  };
  if (exec == Exec::Parallel && m >= kParallelMin) {
#pragma omp parallel for schedule(static)
    for (std::size_t e = 0; e < m; ++e) body(e);
  } else {
    for (std::size_t e = 0; e < m; ++e) body(e);
  }
}

void laplacian_apply(Exec exec, const EdgeSystem& sys, std::span<const double> h, std::span<const double> x,
                     std::span<double> y) {
  auto body = [&](std::size_t i) {
    double acc = 0.0;
    const double xi = x[i];
    for (std::size_t k = sys.offsets[i]; k < sys.offsets[i + 1]; ++k) {
      const std::uint32_t e = sys.incident[k];
      const std::uint32_t j = sys.u[e] == i ? sys.v[e] : sys.u[e];
      acc += h[e] * (xi - x[j]);
    }
    y[i] = acc;
  };
  if (exec == Exec::Parallel && sys.vertices >= kParallelMin) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < sys.vertices; ++i) body(i);
  } else {
    for (std::size_t i = 0; i < sys.vertices; ++i) body(i);
  }
}

double dot(Exec exec, std::span<const double> a, std::span<const double> b) {
  const std::size_t m = a.size();
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  auto chunk_sum = [&](std::size_t c) {
    double s = 0.0;
    const std::size_t hi = std::min(m, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < hi; ++i) s += a[i] * b[i];
    partial[c] = s;
  };
  if (exec == Exec::Parallel && chunks > 1) {
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) chunk_sum(c);
  } else {
    for (std::size_t c = 0; c < chunks; ++c) chunk_sum(c);
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

void ball_measures(Exec exec, const Space& space, std::span<const BallQuery> queries, std::span<double> out) {
  const std::size_t m = queries.size();
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t k = 0; k < m; ++k) out[k] = space.ball_measure(queries[k]);
  } else {
    for (std::size_t k = 0; k < m; ++k) out[k] = space.ball_measure(queries[k]);
  }
}

}  // namespace spherekit::kernels
