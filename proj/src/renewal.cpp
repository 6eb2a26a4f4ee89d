#include "ksplit/renewal.hpp"

#include "walkers.hpp"

#include <algorithm>
#include <cstdio>

namespace ksplit {

namespace {

Real default_pi_tol() { return pow(Real(10), -(KSPLIT_REAL_DIGITS - 6)); }

template <class V>
void require_descending(const std::vector<V>& thr) {
  for (size_t j = 1; j < thr.size(); ++j)
    if (!(thr[j] < thr[j - 1])) fail(Errc::ConfigInvalid, "thresholds must be strictly descending");
}

// (T_v)'(p) and T_v(p) chained right-to-left
Real chain_deriv_at(const BranchSystem& sys, const Word& v, const Real& p) {
  Real d = 1, z = p;
  for (int j = v.size() - 1; j >= 0; --j) {
    d *= sys.deriv(v.at(j), z);
    z = sys.apply(v.at(j), z);
  }
  return d;
}

}  // namespace

std::string RenewalBase::str() const {
  if (is_word()) return word().str();
  return coded().str();
}

std::vector<long long> scale_counts(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                    const std::vector<Rat>& thr_desc, CountBudget budget) {
  if (thr_desc.empty()) return {};
  require_descending(thr_desc);
  if (!sys.exact()) fail(Errc::ConfigInvalid, "exact thresholds need an exact system");
  if (!base.is_word()) fail(Errc::ConfigInvalid, "exact thresholds need a word base");
  detail::ExactPolicy pol(sys, v);
  return detail::count_by_thresholds(pol, base.word(), thr_desc, budget.max_nodes);
}

std::vector<long long> scale_counts(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                    const std::vector<Real>& thr_desc, CountBudget budget) {
  if (thr_desc.empty()) return {};
  require_descending(thr_desc);
  if (base.is_word()) {
    if (sys.has_affine_model()) {
      detail::RealAffinePolicy pol(sys, v);
      return detail::count_by_thresholds(pol, base.word(), thr_desc, budget.max_nodes);
    }
    detail::OraclePolicy pol(sys, v);
    return detail::count_by_thresholds(pol, base.word(), thr_desc, budget.max_nodes);
  }
  Real p = coding_point(sys, base.coded(), default_pi_tol());
  detail::ChainPolicy pol(sys, v, p);
  return detail::count_by_thresholds(pol, Word{}, thr_desc, budget.max_nodes);
}

long long renewal_count(const BranchSystem& sys, const RenewalQuery& q, CountBudget budget) {
  const Word& v = q.subtree;
  if (q.base.is_word()) {
    if (sys.exact() && q.threshold.exact) {
      Rat av = *map_word(sys, v.concat(q.base.word())).alpha_q;
      std::vector<Rat> thr{*q.threshold.exact * av};
      return scale_counts(sys, v, q.base, thr, budget)[0];
    }
    Real av = map_word(sys, v.concat(q.base.word())).alpha;
    std::vector<Real> thr{q.threshold.value * av};
    return scale_counts(sys, v, q.base, thr, budget)[0];
  }
  Real p = coding_point(sys, q.base.coded(), default_pi_tol());
  Real dv = chain_deriv_at(sys, v, p);
  std::vector<Real> thr{q.threshold.value * dv};
  return scale_counts(sys, v, q.base, thr, budget)[0];
}

long long subtree_count_via_potential(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                      const ScaleThreshold& thr, int max_depth, CountBudget budget) {
  if (!base.is_word()) fail(Errc::ConfigInvalid, "potential-form N_v needs a word base");
  const Word& x = base.word();
  const Real t = thr.t();
  // phi_v(w) = alpha_{v+w} / alpha_w  (phi_v(empty) = alpha_v)
  auto log_phi_v = [&](const Word& w) {
    return log(map_word(sys, v.concat(w)).alpha) - log(map_word(sys, w).alpha);
  };
  // gamma(w) = -log(alpha_w / alpha_{sigma_* w})
  auto gamma = [&](const Word& w) {
    return -(log(map_word(sys, w).alpha) - log(map_word(sys, w.shifted()).alpha));
  };

  long long count = t >= 0 ? 1 : 0;  // u = empty
  // A descendant's alpha_{v+u'+x} can exceed a pruned ancestor's value by at
  // most the distortion of T_v, so a margin of twice that is safe. Oracle
  // systems carry no distortion certificate and prune on depth alone.
  Real dist = 1;
  if (sys.kind() == SystemKind::Conjugated)
    dist = sys.conjugacy().dg_max() / sys.conjugacy().dg_min();
  const bool value_prune = sys.kind() != SystemKind::Oracle;
  const Real telescoped_floor = exp(-t) * map_word(sys, v.concat(x)).alpha / (2 * dist);
  const Real check_tol = pow(Real(10), -(KSPLIT_REAL_DIGITS - 12));

  struct Item { Word u; };
  std::vector<Item> stack{{Word{}}};
  long long nodes = 0;
  while (!stack.empty()) {
    Word u = std::move(stack.back().u);
    stack.pop_back();
    if (!u.empty()) {
      // S_n gamma_v(u+x) summed from the twisted-potential definition
      Word y = u.concat(x);
      Real s = 0;
      Word w = y;
      for (int j = 0; j < u.size(); ++j) {
        Real gv = gamma(w) + log_phi_v(w.shifted()) - log_phi_v(w);
        s += gv;
        w = w.shifted();
      }
      // cross-check against the telescoped cylinder form
      Real telescoped = log(map_word(sys, v.concat(x)).alpha) - log(map_word(sys, v.concat(y)).alpha);
      if (abs(s - telescoped) > check_tol)
        fail(Errc::TaskFailed, "gamma_v forms disagree beyond roundoff");
      if (s <= t) ++count;
      if (value_prune && map_word(sys, v.concat(y)).alpha < telescoped_floor) continue;
    }
    if (u.size() >= max_depth) continue;
    if (++nodes > budget.max_nodes) fail(Errc::BudgetExceeded, "potential-form N_v budget");
    for (int i = sys.size(); i >= 1; --i) stack.push_back({u.prepended(i)});
  }
  return count;
}

RenewalSeries renewal_asymptotic_series(const BranchSystem& sys, const RenewalBase& base,
                                        const std::vector<Real>& t_grid, CountBudget budget) {
  if (t_grid.empty()) fail(Errc::ConfigInvalid, "empty t grid");
  for (size_t j = 1; j < t_grid.size(); ++j)
    if (!(t_grid[j] > t_grid[j - 1])) fail(Errc::ConfigInvalid, "t grid must be increasing");

  std::vector<long long> counts;
  Real a0;
  if (base.is_word())
    a0 = map_word(sys, base.word()).alpha;
  else
    a0 = 1;

  if (sys.exact() && base.is_word()) {
    std::vector<Rat> thr;
    Rat aq = *map_word(sys, base.word()).alpha_q;
    for (const auto& t : t_grid) thr.push_back(rat_from_real(exp(-t)) * aq);
    counts = scale_counts(sys, Word{}, base, thr, budget);
  } else {
    std::vector<Real> thr;
    for (const auto& t : t_grid) thr.push_back(exp(-t) * a0);
    counts = scale_counts(sys, Word{}, base, thr, budget);
  }

  RenewalSeries out;
  for (size_t j = 0; j < t_grid.size(); ++j) {
    RenewalSeriesPoint p;
    p.t = t_grid[j];
    p.count = counts[j];
    p.scaled = exp(-t_grid[j]) * Real(counts[j]);
    out.points.push_back(std::move(p));
  }
  out.window = std::max<int>(5, static_cast<int>(t_grid.size() / 4));
  out.window = std::min<int>(out.window, static_cast<int>(t_grid.size()));
  Real sum = 0, lo = out.points.back().scaled, hi = lo;
  for (size_t j = t_grid.size() - static_cast<size_t>(out.window); j < t_grid.size(); ++j) {
    sum += out.points[j].scaled;
    lo = std::min(lo, out.points[j].scaled);
    hi = std::max(hi, out.points[j].scaled);
  }
  out.fitted_limit = sum / out.window;
  out.band_lo = lo;
  out.band_hi = hi;
  return out;
}

std::vector<RatioPoint> cylinder_ratio(const BranchSystem& sys, const Word& v,
                                       const std::vector<Real>& t_grid, CountBudget budget) {
  if (t_grid.empty()) fail(Errc::ConfigInvalid, "empty t grid");
  for (size_t j = 1; j < t_grid.size(); ++j)
    if (!(t_grid[j] > t_grid[j - 1])) fail(Errc::ConfigInvalid, "t grid must be increasing");
  for (int j = 0; j < v.size(); ++j) sys.check_symbol(v.at(j));

  const Word one{1};
  std::vector<long long> A, B, C, D;
  if (sys.exact()) {
    std::vector<Rat> thr;
    for (const auto& t : t_grid) thr.push_back(rat_from_real(exp(-t)));
    A = scale_counts(sys, v, RenewalBase::empty(), thr, budget);
    B = scale_counts(sys, v, RenewalBase(one), thr, budget);
    C = scale_counts(sys, Word{}, RenewalBase::empty(), thr, budget);
    D = scale_counts(sys, Word{}, RenewalBase(one), thr, budget);
  } else {
    std::vector<Real> thr;
    for (const auto& t : t_grid) thr.push_back(exp(-t));
    A = scale_counts(sys, v, RenewalBase::empty(), thr, budget);
    B = scale_counts(sys, v, RenewalBase(one), thr, budget);
    C = scale_counts(sys, Word{}, RenewalBase::empty(), thr, budget);
    D = scale_counts(sys, Word{}, RenewalBase(one), thr, budget);
  }

  std::vector<RatioPoint> out;
  for (size_t j = 0; j < t_grid.size(); ++j) {
    RatioPoint p;
    p.t = t_grid[j];
    p.numerator = A[j] - B[j];
    p.denominator = C[j] - D[j];
    if (p.denominator != 0) p.ratio = Real(p.numerator) / Real(p.denominator);
    out.push_back(std::move(p));
  }
  return out;
}

std::string renewal_csv(const RenewalSeries& series, const std::string& variant,
                        const std::string& base, const std::string& v,
                        std::optional<Real> lattice_a) {
  std::string out = "t,count,scaled,variant,base,v,residue_mod_a\n";
  char buf[128];
  for (const auto& p : series.points) {
    std::string residue;
    if (lattice_a) {
      Real r = p.t - *lattice_a * floor(p.t / *lattice_a);
      std::snprintf(buf, sizeof buf, "%.12g", to_double(r));
      residue = buf;
    }
    std::snprintf(buf, sizeof buf, "%.12g,%lld,%.17g,", to_double(p.t), p.count, to_double(p.scaled));
    out += buf;
    out += variant + "," + base + "," + v + "," + residue + "\n";
  }
  return out;
}

}  // namespace ksplit
