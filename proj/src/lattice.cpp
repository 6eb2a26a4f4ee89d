#include "ksplit/lattice.hpp"

#include "ksplit/thermo.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <cmath>
#include <map>
#include <set>

namespace ksplit {

namespace {

Real tight_eps() { return pow(Real(10), -(KSPLIT_REAL_DIGITS - 6)); }

Real round_real(const Real& x) { return floor(x + Real(1) / 2); }

// fixed point of T_w by safeguarded Newton on T_w(x) - x
Real fixed_point(const BranchSystem& sys, const Word& w) {
  auto Tw = [&](const Real& x) {
    Real z = x;
    for (int j = w.size() - 1; j >= 0; --j) z = sys.apply(w.at(j), z);
    return z;
  };
  auto dTw = [&](const Real& x) {
    Real z = x, d = 1;
    for (int j = w.size() - 1; j >= 0; --j) {
      d *= sys.deriv(w.at(j), z);
      z = sys.apply(w.at(j), z);
    }
    return d;
  };
  Real lo = 0, hi = 1, x = Real(1) / 2;
  const Real tol = tight_eps();
  for (int it = 0; it < 300; ++it) {
    Real f = Tw(x) - x;
    if (abs(f) <= tol) return x;
    (f > 0 ? lo : hi) = x;  // T_w(x) > x left of the fixed point
    Real nx = x - f / (dTw(x) - 1);
    if (!(nx > lo && nx < hi)) nx = (lo + hi) / 2;
    if (nx == x) return x;
    x = nx;
  }
  return x;
}

// all words of length 1..p, budgeted
std::vector<Word> periodic_words(const BranchSystem& sys, int p, long long cap) {
  long long total = 0, layer = 1;
  for (int q = 1; q <= p; ++q) {
    layer *= sys.size();
    total += layer;
    if (total > cap) fail(Errc::PeriodBudgetExceeded, "too many periodic words at period " + std::to_string(p));
  }
  std::vector<Word> out;
  std::vector<Word> cur{Word{}};
  for (int q = 1; q <= p; ++q) {
    std::vector<Word> next;
    for (const auto& w : cur)
      for (int i = 1; i <= sys.size(); ++i) next.push_back(w.appended(i));
    out.insert(out.end(), next.begin(), next.end());
    cur = std::move(next);
  }
  return out;
}

// --- exact multiplicative certificate for rational ratios -------------------

using Int = mp::mpz_int;

std::optional<std::map<Int, long>> factorize(Int n) {
  std::map<Int, long> f;
  if (n <= 0) return std::nullopt;
  for (Int d = 2; d * d <= n && d < 1000000; d += (d == 2 ? 1 : 2)) {
    while (n % d == 0) {
      f[d] += 1;
      n /= d;
    }
  }
  if (n > 1) {
    if (mpz_probab_prime_p(n.backend().data(), 32) == 0) return std::nullopt;  // composite leftover
    f[n] += 1;
  }
  return f;
}

struct ExactVerdict {
  bool decided = false;
  bool lattice = false;
  Rat base;  // a = -log(base)
};

ExactVerdict exact_multiplicative_check(const BranchSystem& sys) {
  ExactVerdict out;
  std::map<Int, std::vector<long>> expo;  // prime -> exponent per branch
  const int m = sys.size();
  for (int i = 1; i <= m; ++i) {
    Rat r = sys.ratio_q(i);
    auto fn = factorize(numerator(r));
    auto fd = factorize(denominator(r));
    if (!fn || !fd) return out;
    for (auto& [p, e] : *fn) {
      auto& v = expo[p];
      v.resize(static_cast<size_t>(m), 0);
      v[static_cast<size_t>(i - 1)] += e;
    }
    for (auto& [p, e] : *fd) {
      auto& v = expo[p];
      v.resize(static_cast<size_t>(m), 0);
      v[static_cast<size_t>(i - 1)] -= e;
    }
  }
  for (auto& [p, v] : expo) v.resize(static_cast<size_t>(m), 0);

  // exponent vectors e_i over the primes; lattice iff all are parallel
  std::vector<std::vector<long>> e(static_cast<size_t>(m));
  std::vector<Int> primes;
  for (auto& [p, v] : expo) primes.push_back(p);
  for (int i = 0; i < m; ++i) {
    e[static_cast<size_t>(i)].resize(primes.size());
    size_t k = 0;
    for (auto& [p, v] : expo) e[static_cast<size_t>(i)][k++] = v[static_cast<size_t>(i)];
  }
  // primitive direction from e_0
  long content = 0;
  for (long x : e[0]) content = std::gcd(content, std::labs(x));
  if (content == 0) return out;  // ratio 1, degenerate
  std::vector<long> dir;
  for (long x : e[0]) dir.push_back(x / content);
  std::vector<long> coeff(static_cast<size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    // e_i must be an integer multiple of dir
    long c = 0;
    for (size_t k = 0; k < dir.size(); ++k) {
      if (dir[k] != 0) {
        if (e[static_cast<size_t>(i)][k] % dir[k] != 0) { out.decided = true; return out; }
        c = e[static_cast<size_t>(i)][k] / dir[k];
        break;
      }
    }
    for (size_t k = 0; k < dir.size(); ++k)
      if (e[static_cast<size_t>(i)][k] != c * dir[k]) { out.decided = true; return out; }
    coeff[static_cast<size_t>(i)] = c;
  }
  // orient so that prod p^dir < 1 and all coefficients positive
  Rat rho0 = 1;
  for (size_t k = 0; k < dir.size(); ++k) {
    Int p = primes[k];
    for (long j = 0; j < std::labs(dir[k]); ++j) {
      if (dir[k] > 0) rho0 *= Rat(p);
      else rho0 /= Rat(p);
    }
  }
  if (rho0 > 1) {
    rho0 = 1 / rho0;
    for (auto& c : coeff) c = -c;
  }
  long g = 0;
  for (long c : coeff) {
    if (c <= 0) { out.decided = true; return out; }  // mixed directions: not contracting data
    g = std::gcd(g, c);
  }
  Rat base = 1;
  for (long j = 0; j < g; ++j) base *= rho0;
  out.decided = true;
  out.lattice = true;
  out.base = base;
  return out;
}

}  // namespace

Real periodic_birkhoff_sum(const BranchSystem& sys, const Word& w) {
  if (w.empty()) fail(Errc::EmptyWord, "periodic sum needs a nonempty word");
  Real z = fixed_point(sys, w), d = 1;
  for (int j = w.size() - 1; j >= 0; --j) {
    d *= sys.deriv(w.at(j), z);
    z = sys.apply(w.at(j), z);
  }
  return -log(d);
}

LatticeVerdict detect_lattice(const BranchSystem& sys, int max_period, const Real& tol,
                              long long denominator_cap) {
  if (max_period < 2) fail(Errc::ConfigInvalid, "max period must be >= 2");
  LatticeVerdict out;
  out.tol = tol;
  out.denominator_cap = denominator_cap;
  out.max_period = max_period;

  auto words = periodic_words(sys, max_period, 200000);
  std::vector<Real> sums;
  for (const auto& w : words) sums.push_back(periodic_birkhoff_sum(sys, w));

  // integer-relation detection: iterated gcd through CF convergents
  bool relation_ok = true;
  Real a = sums[0];
  for (const auto& s : sums) a = std::min(a, s);
  for (const auto& s : sums) {
    Real r = s / a;
    auto pq = rationalize(r, tol, denominator_cap);
    if (!pq) {
      relation_ok = false;
      break;
    }
    Int q = denominator(*pq);
    if (q > 1) a = a / Real(q);
  }

  // exact multiplicative certificate when rational ratios are available
  if (sys.has_exact_ratios()) {
    auto ex = exact_multiplicative_check(sys);
    if (ex.decided) {
      out.exact_certificate = true;
      if (ex.lattice) {
        out.log_base = ex.base;
        a = -log(Real(ex.base));
        relation_ok = true;
        out.note = "exact multiplicative certificate on branch ratios";
      } else {
        relation_ok = false;
        out.note = "branch ratios proven multiplicatively independent";
      }
    }
  }
  if (out.note.empty())
    out.note = relation_ok ? "continued-fraction relations accepted at |q r - p| <= tol"
                           : "no rational relation within the denominator cap";

  out.is_lattice = relation_ok;
  out.a = relation_ok ? a : Real(0);

  for (size_t i = 0; i < words.size(); ++i) {
    PeriodicEvidence ev;
    ev.word = words[i];
    ev.sum = sums[i];
    if (relation_ok) {
      Real mult = round_real(sums[i] / a);
      ev.multiple = static_cast<long>(to_double(mult));
      ev.residual = abs(sums[i] - mult * a);
      if (ev.residual > tol * (1 + abs(sums[i]))) {
        out.is_lattice = false;
        out.note = "residual above tolerance at word " + words[i].str();
      }
    } else {
      ev.multiple = 0;
      ev.residual = 0;
    }
    out.evidence.push_back(std::move(ev));
  }
  if (!out.is_lattice) out.a = 0;
  return out;
}

// ---------------------------------------------------------------------------
// reduction to the affine model

BranchSystem CohomologyData::affine_model() const {
  if (alpha_exact) return BranchSystem::affine(alpha_ell_q);
  return BranchSystem::affine_real(alpha_ell);
}

Real CohomologyData::psi_at(const Real& t) const {
  const int m = static_cast<int>(alpha_ell.size());
  // cumulative model offsets
  std::vector<Real> cum(static_cast<size_t>(m) + 1, Real(0));
  for (int i = 1; i <= m; ++i) cum[static_cast<size_t>(i)] = cum[static_cast<size_t>(i - 1)] + alpha_ell[static_cast<size_t>(i - 1)];

  // affine coding of t, deep enough that the tail is negligible
  const Real floor_len = pow(Real(10), -(KSPLIT_REAL_DIGITS - 4));
  std::vector<int> w;
  Real s = t;
  if (s < 0) s = 0;
  if (s > 1) s = 1;
  Real len = 1;
  for (int step = 0; step < 400 && len > floor_len; ++step) {
    int sym = m;
    for (int i = 1; i <= m; ++i) {
      if (s < cum[static_cast<size_t>(i)] || i == m) {
        sym = i;
        break;
      }
    }
    w.push_back(sym);
    Real al = alpha_ell[static_cast<size_t>(sym - 1)];
    s = (s - cum[static_cast<size_t>(sym - 1)]) / al;
    if (s < 0) s = 0;
    if (s > 1) s = 1;
    len *= al;
  }

  // Psi(w 111...) = -log (T_w)'(0) + log alpha^l_w, with Psi(111...) = 0
  Real log_alpha_ell_w = 0;
  for (int sym : w) log_alpha_ell_w += -a * gamma_ell_multiples[static_cast<size_t>(sym - 1)];

  Real log_d = 0;
  if (source.kind() == SystemKind::Conjugated) {
    // chain through the affine preimage; avoids g^{-1}
    const auto& conj = source.conjugacy();
    Real u = 0;
    for (size_t j = w.size(); j-- > 0;) {
      int i = w[j];
      Real v = source.offset(i) + source.ratio(i) * u;
      log_d += log(conj.dg(v) * source.ratio(i) / conj.dg(u));
      u = v;
    }
  } else {
    Real z = 0;
    for (size_t j = w.size(); j-- > 0;) {
      int i = w[j];
      log_d += log(source.deriv(i, z));
      z = source.apply(i, z);
    }
  }
  return -log_d + log_alpha_ell_w;
}

Real CohomologyData::g_at(const Real& t) const {
  if (grid.size() < 2) fail(Errc::ConfigInvalid, "reduction carries no g samples");
  if (t <= 0) return Real(0);
  if (t >= 1) return Real(1);
  Real pos = t * (static_cast<long>(grid.size()) - 1);
  long j = static_cast<long>(to_double(floor(pos)));
  j = std::min<long>(j, static_cast<long>(grid.size()) - 2);
  Real u = pos - j;
  return g_samples[static_cast<size_t>(j)] * (1 - u) + g_samples[static_cast<size_t>(j + 1)] * u;
}

CohomologyData reduce_to_affine(const BranchSystem& sys, const LatticeVerdict& verdict,
                                const ReduceOptions& opts) {
  if (!verdict.is_lattice) fail(Errc::NotLattice, "reduction needs a lattice verdict");
  const int m = sys.size();
  CohomologyData out;
  out.a = verdict.a;
  out.log_base = verdict.log_base;
  out.source = sys;

  const Real a = verdict.a;

  // gamma at the periodic point of (u)^infty: -log T'_{u_1}(fix T_{rot u})
  auto gamma_periodic = [&](const Word& u) {
    Real fx = fixed_point(sys, u.rotated());
    return -log(sys.deriv(u.at(0), fx));
  };

  // adaptive depth: rounded periodic data must reproduce every periodic
  // Birkhoff sum up to depth M + validate_extra (integer identities).
  int M = 0;
  std::map<long, long> zeta;  // word index at depth M -> multiple of a
  for (int d = std::max(1, opts.min_depth); d <= opts.max_depth && M == 0; ++d) {
    long nd = 1;
    for (int j = 0; j < d; ++j) nd *= m;
    std::map<long, long> cand;
    bool margins_ok = true;
    for (long idx = 0; idx < nd; ++idx) {
      Word u = word_from_index(idx, d, m);
      Real gp = gamma_periodic(u);
      Real mult = round_real(gp / a);
      if (abs(gp / a - mult) > Real(1) / 4) { margins_ok = false; break; }
      cand[idx] = static_cast<long>(to_double(mult));
    }
    if (!margins_ok) continue;

    bool sums_ok = true;
    int vmax = std::min(d + opts.validate_extra, std::max(opts.max_depth, d));
    for (int q = 1; q <= vmax && sums_ok; ++q) {
      long nq = 1;
      for (int j = 0; j < q; ++j) nq *= m;
      for (long wi = 0; wi < nq && sums_ok; ++wi) {
        Word w = word_from_index(wi, q, m);
        Real sq = periodic_birkhoff_sum(sys, w);
        Real multr = round_real(sq / a);
        if (abs(sq / a - multr) > Real(1) / 4) { sums_ok = false; break; }
        long target = static_cast<long>(to_double(multr));
        long acc = 0;
        Word rot = w;
        for (int j = 0; j < q; ++j) {
          // first d symbols of (rot)^infty
          std::vector<int> win(static_cast<size_t>(d));
          for (int k = 0; k < d; ++k) win[static_cast<size_t>(k)] = rot.at(k % q);
          acc += cand[word_index(Word(win), m)];
          rot = rot.rotated();
        }
        if (acc != target) sums_ok = false;
      }
    }
    if (sums_ok) {
      M = d;
      zeta = std::move(cand);
    }
  }
  if (M == 0) fail(Errc::ReductionUnstable, "periodic cylinder sums did not stabilize by the depth cap");
  out.depth_M = M;

  // Phi-reduction from depth M down to 1 (integer arithmetic in units of a):
  // Phi([u'j]) = zeta([1 u' j]) - zeta([1 u' 1]),
  // zeta_{d-1}([v]) = zeta_d([v k]) + Phi([v]) - Phi([sigma_* v, k])  (any k).
  std::map<long, long> cur = zeta;
  for (int d = M; d >= 2; --d) {
    long nd1 = 1;
    for (int j = 0; j < d - 1; ++j) nd1 *= m;
    std::vector<long> phi(static_cast<size_t>(nd1));
    for (long wi = 0; wi < nd1; ++wi) {
      Word w = word_from_index(wi, d - 1, m);
      Word w1 = w;
      {
        std::vector<int> t = w.symbols();
        t.back() = 1;
        w1 = Word(std::move(t));
      }
      phi[static_cast<size_t>(wi)] =
          cur[word_index(w.prepended(1), m)] - cur[word_index(w1.prepended(1), m)];
    }
    std::map<long, long> nxt;
    for (long vi = 0; vi < nd1; ++vi) {
      Word v = word_from_index(vi, d - 1, m);
      std::optional<long> val;
      for (int k = 1; k <= m; ++k) {
        long cand_val = cur[word_index(v.appended(k), m)] + phi[static_cast<size_t>(vi)] -
                        phi[static_cast<size_t>(word_index(v.shifted().appended(k), m))];
        if (!val)
          val = cand_val;
        else if (*val != cand_val)
          fail(Errc::ReductionUnstable, "Phi reduction not independent of the trailing symbol");
      }
      nxt[vi] = *val;
    }
    out.phi_tables.push_back(std::move(phi));
    cur = std::move(nxt);
  }

  out.gamma_ell_multiples.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) out.gamma_ell_multiples[static_cast<size_t>(i)] = cur[i];

  // alpha^l_i = exp(-n_i a); exact when the span has a certified log base
  out.alpha_ell.resize(static_cast<size_t>(m));
  Real sum_ell = 0;
  for (int i = 0; i < m; ++i) {
    out.alpha_ell[static_cast<size_t>(i)] = exp(-a * out.gamma_ell_multiples[static_cast<size_t>(i)]);
    sum_ell += out.alpha_ell[static_cast<size_t>(i)];
  }
  out.sum_defect = abs(1 - sum_ell);
  if (out.log_base) {
    out.alpha_ell_q.resize(static_cast<size_t>(m));
    Rat s = 0;
    for (int i = 0; i < m; ++i) {
      Rat v = 1;
      for (long j = 0; j < out.gamma_ell_multiples[static_cast<size_t>(i)]; ++j) v *= *out.log_base;
      out.alpha_ell_q[static_cast<size_t>(i)] = v;
      s += v;
    }
    out.alpha_exact = (s == 1);
    if (out.alpha_exact)
      for (int i = 0; i < m; ++i) out.alpha_ell[static_cast<size_t>(i)] = Real(out.alpha_ell_q[static_cast<size_t>(i)]);
  }
  if (!out.alpha_exact) {
    // small-denominator reconstruction, accepted only on an exact unit sum
    std::vector<Rat> cands;
    bool all = true;
    Rat s = 0;
    for (int i = 0; i < m && all; ++i) {
      auto r = rationalize(out.alpha_ell[static_cast<size_t>(i)], pow(Real(10), -(KSPLIT_REAL_DIGITS - 10)),
                           1'000'000);
      if (!r) all = false;
      else {
        cands.push_back(*r);
        s += *r;
      }
    }
    if (all && s == 1) {
      out.alpha_ell_q = cands;
      out.alpha_exact = true;
      for (int i = 0; i < m; ++i) out.alpha_ell[static_cast<size_t>(i)] = Real(out.alpha_ell_q[static_cast<size_t>(i)]);
    }
  }
  if (out.sum_defect > Real("1e-10"))
    fail(Errc::ReductionUnstable, "affine ratios from the reduction do not sum to 1");

  // psi samples on the uniform grid, g by cumulative Simpson
  const int N = std::max(64, opts.grid_size);
  const int NN = N + (N % 2);  // even panel count
  out.grid.resize(static_cast<size_t>(NN) + 1);
  out.psi_samples.resize(static_cast<size_t>(NN) + 1);
  for (int j = 0; j <= NN; ++j) {
    out.grid[static_cast<size_t>(j)] = Real(j) / NN;
    out.psi_samples[static_cast<size_t>(j)] = out.psi_at(out.grid[static_cast<size_t>(j)]);
  }
  std::vector<Real> f(static_cast<size_t>(NN) + 1);
  for (int j = 0; j <= NN; ++j) f[static_cast<size_t>(j)] = exp(-out.psi_samples[static_cast<size_t>(j)]);
  std::vector<Real> G(static_cast<size_t>(NN) + 1, Real(0));
  const Real h = Real(1) / NN;
  for (int j = 0; j + 2 <= NN; j += 2) {
    G[static_cast<size_t>(j + 1)] = G[static_cast<size_t>(j)] +
        h / 12 * (5 * f[static_cast<size_t>(j)] + 8 * f[static_cast<size_t>(j + 1)] - f[static_cast<size_t>(j + 2)]);
    G[static_cast<size_t>(j + 2)] = G[static_cast<size_t>(j)] +
        h / 3 * (f[static_cast<size_t>(j)] + 4 * f[static_cast<size_t>(j + 1)] + f[static_cast<size_t>(j + 2)]);
  }
  out.psi_norm = G[static_cast<size_t>(NN)];
  out.g_samples.resize(static_cast<size_t>(NN) + 1);
  for (int j = 0; j <= NN; ++j) out.g_samples[static_cast<size_t>(j)] = G[static_cast<size_t>(j)] / out.psi_norm;

  // conjugacy residual on a coarse grid
  {
    Real worst = 0;
    const int C = 256;
    for (int i = 1; i <= m; ++i) {
      Real off = 0;
      for (int k = 1; k < i; ++k) off += out.alpha_ell[static_cast<size_t>(k - 1)];
      for (int j = 0; j <= C; ++j) {
        Real x = Real(j) / C;
        Real lhs = sys.apply(i, out.g_at(x));
        Real rhs = out.g_at(off + out.alpha_ell[static_cast<size_t>(i - 1)] * x);
        worst = std::max(worst, abs(lhs - rhs));
      }
    }
    out.conj_residual = worst;
  }

  // coboundary residual over periodic words
  {
    Real worst = 0;
    int vmax = std::min(M + opts.validate_extra, opts.max_depth);
    vmax = std::max(vmax, 2);
    std::vector<Word> stackw{Word{}};
    for (int q = 1; q <= vmax; ++q) {
      std::vector<Word> next;
      for (const auto& w : stackw)
        for (int i = 1; i <= m; ++i) next.push_back(w.appended(i));
      for (const auto& w : next) {
        Real sq = periodic_birkhoff_sum(sys, w);
        long acc = 0;
        for (int j = 0; j < q; ++j) acc += out.gamma_ell_multiples[static_cast<size_t>(w.at(j) - 1)];
        worst = std::max(worst, abs(sq - a * acc));
      }
      stackw = std::move(next);
    }
    out.coboundary_residual = worst;
  }
  return out;
}

// ---------------------------------------------------------------------------
// profile integrals

namespace {

// adaptive Simpson on [lo,hi]
Real adaptive_simpson(const std::function<Real(const Real&)>& f, const Real& lo, const Real& hi,
                      const Real& tol, int depth, const Real& whole, const Real& flo,
                      const Real& fmid, const Real& fhi) {
  Real mid = (lo + hi) / 2;
  Real lm = (lo + mid) / 2, rm = (mid + hi) / 2;
  Real flm = f(lm), frm = f(rm);
  Real left = (mid - lo) / 6 * (flo + 4 * flm + fmid);
  Real right = (hi - mid) / 6 * (fmid + 4 * frm + fhi);
  if (depth <= 0) return left + right;
  if (abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, lo, mid, tol / 2, depth - 1, left, flo, flm, fmid) +
         adaptive_simpson(f, mid, hi, tol / 2, depth - 1, right, fmid, frm, fhi);
}

Real integrate(const std::function<Real(const Real&)>& f, const Real& lo, const Real& hi,
               const Real& tol) {
  if (!(hi > lo)) return Real(0);
  Real mid = (lo + hi) / 2;
  Real flo = f(lo + (hi - lo) / 1000000), fmid = f(mid), fhi = f(hi - (hi - lo) / 1000000);
  Real whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi);
  return adaptive_simpson(f, lo, hi, tol, 40, whole, flo, fmid, fhi);
}

}  // namespace

ProfileIntegrals lattice_profile_integrals(const CohomologyData& model, const std::vector<Word>& vs,
                                           const ProfileOptions& opts) {
  if (!(model.a > 0)) fail(Errc::ConfigInvalid, "profile needs a positive span");
  ProfileIntegrals out;
  const Real a = model.a;
  out.a = a;
  out.theta1 = -a * model.gamma_ell_multiples[0];  // log alpha_1^l
  const Real one_minus = 1 - exp(out.theta1);

  auto log_gprime = [&](const Real& t) { return -model.psi_at(t) - log(model.psi_norm); };

  // F(t) = g'(t) e^{-a {log g'(t)/a}} (1 - e^{theta1}) = e^{a floor(log g'(t)/a)} (...)
  const Real snap = pow(Real(10), -(KSPLIT_REAL_DIGITS - 15));
  auto F = [&](const Real& t) {
    Real z = log_gprime(t) / a;
    Real r = round_real(z);
    Real fl = (abs(z - r) < snap) ? r : floor(z);
    return exp(a * fl) * one_minus;
  };

  // breakpoints: crossings of log g'(t) through a*Z
  Real lg_min = 0, lg_max = 0;
  std::vector<Real> lg(static_cast<size_t>(opts.scan_points) + 1);
  for (int j = 0; j <= opts.scan_points; ++j) {
    Real t = Real(j) / opts.scan_points;
    lg[static_cast<size_t>(j)] = log_gprime(t);
    if (j == 0) { lg_min = lg[0]; lg_max = lg[0]; }
    lg_min = std::min(lg_min, lg[static_cast<size_t>(j)]);
    lg_max = std::max(lg_max, lg[static_cast<size_t>(j)]);
  }
  long k_lo = static_cast<long>(to_double(floor(lg_min / a))) - 1;
  long k_hi = static_cast<long>(to_double(ceil(lg_max / a))) + 1;
  const Real noise_floor = pow(Real(10), -(KSPLIT_REAL_DIGITS - 20));
  std::vector<Real> bps;
  for (long k = k_lo; k <= k_hi; ++k) {
    Real target = a * k;
    for (int j = 0; j < opts.scan_points; ++j) {
      Real d0 = lg[static_cast<size_t>(j)] - target;
      Real d1 = lg[static_cast<size_t>(j + 1)] - target;
      if ((d0 > 0) == (d1 > 0)) continue;
      if (std::max(abs(d0), abs(d1)) <= noise_floor) continue;  // flat-at-level noise
      Real lo = Real(j) / opts.scan_points, hi = Real(j + 1) / opts.scan_points;
      for (int it = 0; it < 200 && hi - lo > opts.bisect_tol; ++it) {
        Real mid = (lo + hi) / 2;
        Real dm = log_gprime(mid) - target;
        if ((dm > 0) == (d0 > 0)) lo = mid; else hi = mid;
      }
      Real b = (lo + hi) / 2;
      if (b > opts.bisect_tol && b < 1 - opts.bisect_tol) bps.push_back(b);
    }
  }
  std::sort(bps.begin(), bps.end());
  std::vector<Real> uniq;
  for (const auto& b : bps)
    if (uniq.empty() || b - uniq.back() > 2 * opts.bisect_tol) uniq.push_back(b);
  out.breakpoints = uniq;

  // piecewise integration of F over [lo,hi]
  auto integrate_F = [&](const Real& lo, const Real& hi, Real& err) {
    std::vector<Real> cuts{lo};
    for (const auto& b : uniq)
      if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    Real total = 0;
    err = 0;
    const Real tol = pow(Real(10), -25);
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
      Real coarse_mid = (cuts[j] + cuts[j + 1]) / 2;
      Real piece = integrate(F, cuts[j], cuts[j + 1], tol);
      // error estimate: compare with the midpoint rule on the piece
      Real mid_rule = F(coarse_mid) * (cuts[j + 1] - cuts[j]);
      err += abs(piece - mid_rule);
      total += piece;
    }
    return total;
  };

  Real errI = 0;
  out.I = integrate_F(Real(0), Real(1), errI);
  out.err_I = errI;
  if (!(out.I > 0)) fail(Errc::QuadratureFailure, "profile integral I is not positive");

  const int m = static_cast<int>(model.alpha_ell.size());
  for (const auto& v : vs) {
    Real lo = 0, len = 1;
    for (int j = 0; j < v.size(); ++j) {
      int i = v.at(j);
      if (i < 1 || i > m) fail(Errc::BadSymbol, "profile word uses an invalid symbol");
      Real off = 0;
      for (int k = 1; k < i; ++k) off += model.alpha_ell[static_cast<size_t>(k - 1)];
      lo = lo + len * off;
      len = len * model.alpha_ell[static_cast<size_t>(i - 1)];
    }
    Real errv = 0;
    Real Iv = integrate_F(lo, lo + len, errv) / len;
    out.Iv.emplace_back(v, Iv);
    out.err_Iv.push_back(errv / len);
  }
  return out;
}

std::string verdict_to_json_text(const LatticeVerdict& v) {
  nlohmann::json j;
  j["is_lattice"] = v.is_lattice;
  j["a"] = to_double(v.a);
  if (v.log_base) j["log_base"] = fraction_str(*v.log_base);
  j["tol"] = to_double(v.tol);
  j["denominator_cap"] = v.denominator_cap;
  j["max_period"] = v.max_period;
  j["exact_certificate"] = v.exact_certificate;
  j["note"] = v.note;
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : v.evidence) {
    nlohmann::json je;
    je["word"] = e.word.str();
    je["sum"] = to_double(e.sum);
    je["multiple"] = e.multiple;
    je["residual"] = to_double(e.residual);
    ev.push_back(je);
  }
  j["evidence"] = ev;
  return j.dump(2);
}

std::string profile_to_json_text(const ProfileIntegrals& p) {
  nlohmann::json j;
  j["a"] = to_double(p.a);
  j["theta1"] = to_double(p.theta1);
  j["I"] = to_double(p.I);
  j["err_I"] = to_double(p.err_I);
  nlohmann::json iv = nlohmann::json::object();
  for (size_t k = 0; k < p.Iv.size(); ++k) {
    std::string key = p.Iv[k].first.str();
    iv[key.empty() ? "(empty)" : key] = to_double(p.Iv[k].second);
  }
  j["Iv"] = iv;
  nlohmann::json bp = nlohmann::json::array();
  for (const auto& b : p.breakpoints) bp.push_back(to_double(b));
  j["breakpoints"] = bp;
  return j.dump(2);
}

}  // namespace ksplit
