#pragma once

// Internal prepend-tree walkers shared by enumeration and renewal counting.
//
// Every finite word u is reached once by prepending symbols (node u has
// children i+u). Cylinder lengths are monotone under prepending
// (|T_i(J)| <= c_M |J|), so a subtree can be pruned as soon as its value bound
// drops below the smallest threshold of interest.

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/symbolic.hpp"
#include "ksplit/words.hpp"

#include <vector>

namespace ksplit::detail {

// sup of (T_v)' over [0,1], certified.
inline Real prefix_sup_deriv(const BranchSystem& sys, const Word& v) {
  if (v.empty()) return Real(1);
  if (sys.kind() == SystemKind::Conjugated) {
    Real r = 1;
    for (int j = 0; j < v.size(); ++j) r *= sys.ratio(v.at(j));
    return r * sys.conjugacy().dg_max() / sys.conjugacy().dg_min();
  }
  Real r = 1;
  for (int j = 0; j < v.size(); ++j) r *= sys.branch_sup_deriv(v.at(j));
  return r;
}

// --- policies --------------------------------------------------------------

// exact affine systems; values are exact rationals
struct ExactPolicy {
  using Value = Rat;
  struct State { Rat a, b; };

  const BranchSystem& sys;
  Rat alpha_v = 1;  // affine: alpha_{v+u+x} = alpha_v * alpha_{u+x}

  ExactPolicy(const BranchSystem& s, const Word& v) : sys(s) {
    for (int j = 0; j < v.size(); ++j) alpha_v *= s.ratio_q(v.at(j));
  }
  State root(const Word& base) const {
    auto rec = map_word(sys, base);
    return {*rec.left_q, *rec.right_q};
  }
  State child(int i, const State& s) const {
    return {sys.offset_q(i) + sys.ratio_q(i) * s.a, sys.offset_q(i) + sys.ratio_q(i) * s.b};
  }
  Value value(const State& s) const { return alpha_v * (s.b - s.a); }     // alpha_{v+u+x}
  Value prune_bound(const State& s) const { return value(s); }            // exact for affine
};

// high-precision systems with an affine model (affine or conjugated): the
// state is the affine preimage interval, lengths go through g.
struct RealAffinePolicy {
  using Value = Real;
  struct State { Real a, b; };

  const BranchSystem& sys;
  Real v_slope = 1, v_offset = 0;  // affine form of T_v^l
  Real prune_factor = 1;           // sup(T_v') * dg_max
  bool identity;

  RealAffinePolicy(const BranchSystem& s, const Word& v)
      : sys(s), identity(s.conjugacy().is_identity()) {
    for (int j = v.size() - 1; j >= 0; --j) {
      int i = v.at(j);
      v_offset = s.offset(i) + s.ratio(i) * v_offset;
      v_slope *= s.ratio(i);
    }
    // alpha_{v+w+x} <= dg_max * alpha^l_v * |affine preimage of w+x|
    prune_factor = v_slope * s.conjugacy().dg_max();
  }
  State root(const Word& base) const {
    Real a = 0, b = 1;
    for (int j = base.size() - 1; j >= 0; --j) {
      int i = base.at(j);
      a = sys.offset(i) + sys.ratio(i) * a;
      b = sys.offset(i) + sys.ratio(i) * b;
    }
    return {a, b};
  }
  State child(int i, const State& s) const {
    return {sys.offset(i) + sys.ratio(i) * s.a, sys.offset(i) + sys.ratio(i) * s.b};
  }
  Value value(const State& s) const {
    Real pa = v_offset + v_slope * s.a, pb = v_offset + v_slope * s.b;
    if (identity) return pb - pa;
    return sys.conjugacy().g(pb) - sys.conjugacy().g(pa);
  }
  Value prune_bound(const State& s) const { return prune_factor * (s.b - s.a); }
};

// oracle systems: state is the actual cylinder of u+base
struct OraclePolicy {
  using Value = Real;
  struct State { Real a, b; };

  const BranchSystem& sys;
  Word v;
  Real prune_factor;

  OraclePolicy(const BranchSystem& s, Word prefix)
      : sys(s), v(std::move(prefix)), prune_factor(prefix_sup_deriv(s, v)) {}
  State root(const Word& base) const {
    auto rec = map_word(sys, base);
    return {rec.left, rec.right};
  }
  State child(int i, const State& s) const { return {sys.apply(i, s.a), sys.apply(i, s.b)}; }
  Value value(const State& s) const {
    Real a = s.a, b = s.b;
    for (int j = v.size() - 1; j >= 0; --j) {
      a = sys.apply(v.at(j), a);
      b = sys.apply(v.at(j), b);
    }
    return b - a;
  }
  Value prune_bound(const State& s) const { return prune_factor * (s.b - s.a); }
};

// coded-point base: value is the derivative chain (T_{v+u})'(pi(x))
struct ChainPolicy {
  using Value = Real;
  struct State { Real p, d; };

  const BranchSystem& sys;
  Word v;
  Real prune_factor;
  Real root_point;

  ChainPolicy(const BranchSystem& s, Word prefix, const Real& pi_x)
      : sys(s), v(std::move(prefix)), prune_factor(prefix_sup_deriv(s, v)), root_point(pi_x) {}
  State root(const Word&) const { return {root_point, Real(1)}; }
  State child(int i, const State& s) const { return {sys.apply(i, s.p), sys.deriv(i, s.p) * s.d}; }
  Value value(const State& s) const {
    Real d = s.d, z = s.p;
    for (int j = v.size() - 1; j >= 0; --j) {
      d *= sys.deriv(v.at(j), z);
      z = sys.apply(v.at(j), z);
    }
    return d;
  }
  Value prune_bound(const State& s) const { return prune_factor * s.d; }
};

// --- generic count walk -----------------------------------------------------
//
// thresholds must be strictly descending; returns counts[j] = #{u : value(u) >= thr[j]}.
template <class Policy>
std::vector<long long> count_by_thresholds(const Policy& pol, const Word& base,
                                           const std::vector<typename Policy::Value>& thr,
                                           long long max_nodes) {
  std::vector<long long> hist(thr.size() + 1, 0);
  if (thr.empty()) return {};
  const auto& tmin = thr.back();
  std::vector<typename Policy::State> stack;
  stack.push_back(pol.root(base));
  long long nodes = 0;
  const int m = pol.sys.size();
  while (!stack.empty()) {
    auto st = stack.back();
    stack.pop_back();
    if (pol.prune_bound(st) < tmin) continue;
    if (++nodes > max_nodes) fail(Errc::BudgetExceeded, "renewal tree exceeded node budget");
    auto val = pol.value(st);
    if (val >= tmin) {
      // first threshold index this value clears (thr descending)
      size_t lo = 0, hi = thr.size() - 1;
      while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (val >= thr[mid]) hi = mid; else lo = mid + 1;
      }
      hist[lo] += 1;
    }
    for (int i = m; i >= 1; --i) stack.push_back(pol.child(i, st));
  }
  std::vector<long long> counts(thr.size(), 0);
  long long run = 0;
  for (size_t j = 0; j < thr.size(); ++j) {
    run += hist[j];
    counts[j] = run;
  }
  return counts;
}

// enumerate words with value >= lambda, collecting the words themselves.
template <class Policy>
void enumerate_by_scale(const Policy& pol, const Word& base,
                        const typename Policy::Value& lambda, long long max_words,
                        std::vector<Word>& out) {
  struct Item { typename Policy::State st; Word w; };
  std::vector<Item> stack;
  stack.push_back({pol.root(base), Word{}});
  const int m = pol.sys.size();
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    if (pol.prune_bound(it.st) < lambda) continue;
    if (pol.value(it.st) >= lambda) {
      out.push_back(it.w);
      if (static_cast<long long>(out.size()) > max_words)
        fail(Errc::BudgetExceeded, "word enumeration exceeded budget");
    }
    for (int i = m; i >= 1; --i) stack.push_back({pol.child(i, it.st), it.w.prepended(i)});
  }
}

}  // namespace ksplit::detail
