#include "ksplit/thermo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace ksplit {

namespace {

long ipow(long b, int e) {
  long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// interval tables per level: ivl[d][u] = affine preimage (or direct endpoints
// for oracle systems) of the depth-d cylinder u.
struct LevelTables {
  std::vector<std::vector<Real>> lo, hi;    // affine preimage / direct
  std::vector<std::vector<Rat>> lo_q, hi_q;  // exact systems
  bool exact;

  void build(const BranchSystem& sys, int max_depth) {
    const int m = sys.size();
    exact = sys.exact();
    lo.resize(static_cast<size_t>(max_depth) + 1);
    hi.resize(static_cast<size_t>(max_depth) + 1);
    lo[0] = {Real(0)};
    hi[0] = {Real(1)};
    if (exact) {
      lo_q.resize(static_cast<size_t>(max_depth) + 1);
      hi_q.resize(static_cast<size_t>(max_depth) + 1);
      lo_q[0] = {Rat(0)};
      hi_q[0] = {Rat(1)};
    }
    for (int d = 1; d <= max_depth; ++d) {
      long n = ipow(m, d - 1);
      lo[static_cast<size_t>(d)].resize(static_cast<size_t>(n * m));
      hi[static_cast<size_t>(d)].resize(static_cast<size_t>(n * m));
      if (exact) {
        lo_q[static_cast<size_t>(d)].resize(static_cast<size_t>(n * m));
        hi_q[static_cast<size_t>(d)].resize(static_cast<size_t>(n * m));
      }
      for (int i = 1; i <= m; ++i) {
        for (long u = 0; u < n; ++u) {
          long idx = (i - 1) * n + u;  // word i+u
          if (exact) {
            lo_q[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.offset_q(i) + sys.ratio_q(i) * lo_q[static_cast<size_t>(d - 1)][static_cast<size_t>(u)];
            hi_q[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.offset_q(i) + sys.ratio_q(i) * hi_q[static_cast<size_t>(d - 1)][static_cast<size_t>(u)];
          } else if (sys.has_affine_model()) {
            lo[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.offset(i) + sys.ratio(i) * lo[static_cast<size_t>(d - 1)][static_cast<size_t>(u)];
            hi[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.offset(i) + sys.ratio(i) * hi[static_cast<size_t>(d - 1)][static_cast<size_t>(u)];
          } else {
            lo[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.apply(i, lo[static_cast<size_t>(d - 1)][static_cast<size_t>(u)]);
            hi[static_cast<size_t>(d)][static_cast<size_t>(idx)] =
                sys.apply(i, hi[static_cast<size_t>(d - 1)][static_cast<size_t>(u)]);
          }
        }
      }
    }
  }

  // cylinder length of word index u at depth d
  Real alpha(const BranchSystem& sys, int d, long u) const {
    if (exact)
      return Real(hi_q[static_cast<size_t>(d)][static_cast<size_t>(u)] -
                  lo_q[static_cast<size_t>(d)][static_cast<size_t>(u)]);
    if (sys.kind() == SystemKind::Conjugated)
      return sys.conjugacy().g(hi[static_cast<size_t>(d)][static_cast<size_t>(u)]) -
             sys.conjugacy().g(lo[static_cast<size_t>(d)][static_cast<size_t>(u)]);
    return hi[static_cast<size_t>(d)][static_cast<size_t>(u)] -
           lo[static_cast<size_t>(d)][static_cast<size_t>(u)];
  }

  Rat alpha_q(int d, long u) const {
    return hi_q[static_cast<size_t>(d)][static_cast<size_t>(u)] -
           lo_q[static_cast<size_t>(d)][static_cast<size_t>(u)];
  }
};

}  // namespace

long word_index(const Word& w, int m) {
  long idx = 0;
  for (int j = 0; j < w.size(); ++j) idx = idx * m + (w.at(j) - 1);
  return idx;
}

Word word_from_index(long idx, int depth, int m) {
  std::vector<int> s(static_cast<size_t>(depth));
  for (int j = depth - 1; j >= 0; --j) {
    s[static_cast<size_t>(j)] = static_cast<int>(idx % m) + 1;
    idx /= m;
  }
  return Word(std::move(s));
}

GibbsData leading_eigendata(const BranchSystem& sys, int depth, int max_iters,
                            std::optional<Real> tol_opt) {
  if (depth < 1) fail(Errc::ConfigInvalid, "operator depth must be >= 1");
  const int m = sys.size();
  if (m < 1) fail(Errc::ConfigInvalid, "empty system");
  double size_est = std::pow(static_cast<double>(m), depth + 1);
  if (size_est > 4e6) fail(Errc::BudgetExceeded, "operator dimension too large");
  const long N = ipow(m, depth);
  const long NP = N * m;
  const Real tol = tol_opt ? *tol_opt : (sys.exact() ? Real("1e-10") : Real("1e-6"));

  LevelTables tab;
  tab.build(sys, depth + 1);

  // e^{-gamma(u)} = alpha_u / alpha_{sigma_* u} on (k+1)-words; sigma_* drops
  // the most significant symbol, the depth-k prefix drops the least.
  std::vector<Real> wgt(static_cast<size_t>(NP));
  for (long u = 0; u < NP; ++u)
    wgt[static_cast<size_t>(u)] = tab.alpha(sys, depth + 1, u) / tab.alpha(sys, depth, u % N);

  auto apply_primal = [&](const std::vector<Real>& in, std::vector<Real>& out) {
    for (long w = 0; w < N; ++w) {
      Real acc = 0;
      for (int i = 0; i < m; ++i) {
        long u = static_cast<long>(i) * N + w;
        acc += wgt[static_cast<size_t>(u)] * in[static_cast<size_t>(u / m)];
      }
      out[static_cast<size_t>(w)] = acc;
    }
  };
  auto apply_dual = [&](const std::vector<Real>& in, std::vector<Real>& out) {
    for (long v = 0; v < N; ++v) {
      Real acc = 0;
      for (int j = 0; j < m; ++j) {
        long u = v * m + j;  // (k+1)-word v+j
        acc += wgt[static_cast<size_t>(u)] * in[static_cast<size_t>(u % N)];
      }
      out[static_cast<size_t>(v)] = acc;
    }
  };

  GibbsData out;
  out.depth = depth;

  // primal power iteration, sup-norm normalization
  std::vector<Real> h(static_cast<size_t>(N), Real(1)), hn(static_cast<size_t>(N));
  Real lambda = 0;
  int it = 0, settled = 0;
  for (; it < max_iters; ++it) {
    apply_primal(h, hn);
    Real nrm = 0;
    for (const auto& x : hn) {
      if (!(x > 0)) fail(Errc::NonPositiveVector, "operator produced a nonpositive entry");
      nrm = std::max(nrm, x);
    }
    for (auto& x : hn) x /= nrm;
    std::swap(h, hn);
    // two consecutive sub-tolerance increments, so a flat spot on the
    // convergence curve cannot stop the iteration early
    settled = (it > 0 && abs(nrm - lambda) <= tol) ? settled + 1 : 0;
    lambda = nrm;
    if (settled >= 2) break;
  }
  if (it >= max_iters) fail(Errc::NoConvergence, "power iteration did not converge");
  out.iterations = it + 1;
  out.lambda = lambda;

  // residual ||L h - lambda h||_inf
  apply_primal(h, hn);
  Real resid = 0;
  for (long w = 0; w < N; ++w)
    resid = std::max(resid, abs(hn[static_cast<size_t>(w)] - lambda * h[static_cast<size_t>(w)]));
  out.eig_residual = resid;

  // dual iteration for nu
  std::vector<Real> nu(static_cast<size_t>(N), Real(1) / N), nun(static_cast<size_t>(N));
  if (sys.exact()) {
    // algebraic eigendata: L 1 = 1 and L* alpha = alpha, verified exactly
    bool ones_ok = true, alpha_ok = true;
    for (long w = 0; w < N && ones_ok; ++w) {
      Rat acc = 0;
      for (int i = 0; i < m; ++i) {
        long u = static_cast<long>(i) * N + w;
        acc += tab.alpha_q(depth + 1, u) / tab.alpha_q(depth, u % N);
      }
      ones_ok = (acc == 1);
    }
    for (long v = 0; v < N && alpha_ok; ++v) {
      Rat acc = 0;
      for (int j = 0; j < m; ++j) {
        long u = v * m + j;
        acc += (tab.alpha_q(depth + 1, u) / tab.alpha_q(depth, u % N)) * tab.alpha_q(depth, u % N);
      }
      alpha_ok = (acc == tab.alpha_q(depth, v));
    }
    if (ones_ok && alpha_ok) {
      out.exact_affine = true;
      for (long v = 0; v < N; ++v) nu[static_cast<size_t>(v)] = Real(tab.alpha_q(depth, v));
      out.dual_residual = 0;
    }
  }
  if (!out.exact_affine) {
    int jt = 0, settled = 0;
    for (; jt < max_iters; ++jt) {
      apply_dual(nu, nun);
      Real s = 0;
      for (const auto& x : nun) s += x;
      for (auto& x : nun) x /= s;
      Real diff = 0;
      for (long v = 0; v < N; ++v)
        diff = std::max(diff, abs(nun[static_cast<size_t>(v)] - nu[static_cast<size_t>(v)]));
      std::swap(nu, nun);
      settled = diff <= tol ? settled + 1 : 0;
      if (settled >= 2) break;
    }
    if (jt >= max_iters) fail(Errc::NoConvergence, "dual iteration did not converge");
    apply_dual(nu, nun);
    Real s = 0;
    for (const auto& x : nun) s += x;
    Real dresid = 0;
    for (long v = 0; v < N; ++v)
      dresid = std::max(dresid, abs(nun[static_cast<size_t>(v)] / s - nu[static_cast<size_t>(v)]));
    out.dual_residual = dresid;
  }

  // normalize: sum nu = 1 (already), int h dnu = 1
  Real hn_scale = 0;
  for (long v = 0; v < N; ++v) hn_scale += h[static_cast<size_t>(v)] * nu[static_cast<size_t>(v)];
  for (auto& x : h) x /= hn_scale;

  out.h = GridFunction{depth, std::move(h)};
  out.nu = std::move(nu);
  out.lyapunov = lyapunov_integral(out, sys);
  return out;
}

Real lyapunov_integral(const GibbsData& g, const BranchSystem& sys) {
  const int m = sys.size();
  const int k = g.depth;
  const long N = ipow(m, k);
  LevelTables tab;
  tab.build(sys, k + 1);
  // mu on (k+1)-cylinders: h(prefix) * e^{-gamma(u)} nu(sigma_* u) / lambda
  Real lyap = 0, mass = 0;
  for (long u = 0; u < N * m; ++u) {
    Real w = tab.alpha(sys, k + 1, u) / tab.alpha(sys, k, u % N);
    Real nu_u = w * g.nu[static_cast<size_t>(u % N)] / g.lambda;
    Real mu_u = g.h.values[static_cast<size_t>(u / m)] * nu_u;
    lyap += mu_u * (-log(w));
    mass += mu_u;
  }
  return lyap / mass;
}

const Real& HStarTable::at(const Word& w) const {
  if (w.size() >= static_cast<int>(levels.size()))
    fail(Errc::DepthExceeded, "word deeper than the h_* table");
  // levels[d] has size m^d; recover m from level 1
  int m = static_cast<int>(levels.size() > 1 ? levels[1].size() : 1);
  return levels[static_cast<size_t>(w.size())][static_cast<size_t>(word_index(w, m))];
}

HStarTable hstar_extend(const BranchSystem& sys, const GibbsData& g, int depth) {
  if (depth < g.depth) fail(Errc::DepthTooShallow, "seed depth below operator depth");
  const int m = sys.size();
  double size_est = std::pow(static_cast<double>(m), depth + 1);
  if (size_est > 4e6) fail(Errc::BudgetExceeded, "h_* table too large");
  LevelTables tab;
  tab.build(sys, depth + 1);

  HStarTable out;
  out.seed_depth = depth;
  out.levels.resize(static_cast<size_t>(depth) + 1);

  // seed at `depth` from the depth-k prefix of each word
  const long Nd = ipow(m, depth);
  const long drop = ipow(m, depth - g.depth);
  out.levels[static_cast<size_t>(depth)].resize(static_cast<size_t>(Nd));
  for (long u = 0; u < Nd; ++u)
    out.levels[static_cast<size_t>(depth)][static_cast<size_t>(u)] =
        g.h.values[static_cast<size_t>(u / drop)];

  // back-fill: h_*(x) = sum_i e^{-gamma(ix)} h_*(ix), gamma by word chords
  for (int d = depth - 1; d >= 0; --d) {
    const long N = ipow(m, d);
    out.levels[static_cast<size_t>(d)].resize(static_cast<size_t>(N));
    for (long x = 0; x < N; ++x) {
      Real acc = 0;
      for (int i = 0; i < m; ++i) {
        long ix = static_cast<long>(i) * N + x;
        Real w = tab.alpha(sys, d + 1, ix) / tab.alpha(sys, d, x);
        acc += w * out.levels[static_cast<size_t>(d + 1)][static_cast<size_t>(ix)];
      }
      out.levels[static_cast<size_t>(d)][static_cast<size_t>(x)] = acc;
    }
  }

  // residual of the relation at the seed depth, one level beyond the table
  Real resid = 0;
  const long drop1 = ipow(m, depth + 1 - g.depth);
  for (long x = 0; x < Nd; ++x) {
    Real acc = 0;
    for (int i = 0; i < m; ++i) {
      long ix = static_cast<long>(i) * Nd + x;
      Real w = tab.alpha(sys, depth + 1, ix) / tab.alpha(sys, depth, x);
      acc += w * g.h.values[static_cast<size_t>(ix / drop1)];
    }
    resid = std::max(resid, abs(acc - out.levels[static_cast<size_t>(depth)][static_cast<size_t>(x)]));
  }
  out.max_residual = resid;
  return out;
}

std::string gibbs_to_json_text(const GibbsData& g, const BranchSystem& sys) {
  nlohmann::json j;
  j["depth"] = g.depth;
  j["lambda"] = g.exact_affine ? nlohmann::json("1") : nlohmann::json(to_double(g.lambda));
  j["lyapunov"] = to_double(g.lyapunov);
  j["iterations"] = g.iterations;
  j["eig_residual"] = to_double(g.eig_residual);
  nlohmann::json h = nlohmann::json::array(), nu = nlohmann::json::array();
  for (const auto& x : g.h.values) h.push_back(to_double(x));
  if (g.exact_affine && sys.exact()) {
    LevelTables tab;
    tab.build(sys, g.depth);
    const long N = ipow(sys.size(), g.depth);
    for (long v = 0; v < N; ++v) nu.push_back(fraction_str(tab.alpha_q(g.depth, v)));
  } else {
    for (const auto& x : g.nu) nu.push_back(to_double(x));
  }
  j["h"] = h;
  j["nu"] = nu;
  return j.dump(2);
}

}  // namespace ksplit
