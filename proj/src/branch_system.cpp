#include "ksplit/branch_system.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ksplit {

// ---------------------------------------------------------------------------
// Conjugacy

Conjugacy Conjugacy::identity() { return Conjugacy(); }

Conjugacy Conjugacy::g_epsilon(const Real& eps) {
  if (!(eps > 0 && eps < 1)) fail(Errc::ConfigInvalid, "g_epsilon needs eps in (0,1)");
  Conjugacy c;
  c.kind_ = Kind::GEpsilon;
  c.eps_ = eps;
  c.dg_min_ = 1 - eps;
  c.dg_max_ = 1 + eps;
  return c;
}

Conjugacy Conjugacy::from_psi(std::vector<Real> grid, std::vector<Real> psi) {
  if (grid.size() < 2 || grid.size() != psi.size())
    fail(Errc::ConfigInvalid, "psi table needs matching grids with >= 2 nodes");
  if (grid.front() != 0 || grid.back() != 1)
    fail(Errc::ConfigInvalid, "psi table grid must span [0,1]");
  Conjugacy c;
  c.kind_ = Kind::PsiTable;
  c.grid_ = std::move(grid);
  c.psi_ = std::move(psi);
  c.cum_.assign(c.grid_.size(), Real(0));
  Real mn = exp(-c.psi_[0]), mx = mn;
  for (size_t j = 1; j < c.grid_.size(); ++j) {
    if (c.grid_[j] <= c.grid_[j - 1]) fail(Errc::ConfigInvalid, "psi table grid not increasing");
    Real f0 = exp(-c.psi_[j - 1]), f1 = exp(-c.psi_[j]);
    c.cum_[j] = c.cum_[j - 1] + (c.grid_[j] - c.grid_[j - 1]) * (f0 + f1) / 2;
    mn = std::min(mn, f1);
    mx = std::max(mx, f1);
  }
  c.norm_ = c.cum_.back();
  c.dg_min_ = mn / c.norm_;
  c.dg_max_ = mx / c.norm_;
  return c;
}

Real Conjugacy::g(const Real& x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::GEpsilon: {
      static const Real two_pi = 2 * real_pi();
      return x + eps_ / two_pi * (1 - cos(two_pi * x));
    }
    case Kind::PsiTable: {
      auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
      size_t j = it == grid_.begin() ? 0 : static_cast<size_t>(it - grid_.begin()) - 1;
      j = std::min(j, grid_.size() - 2);
      Real t0 = grid_[j], t1 = grid_[j + 1];
      Real f0 = exp(-psi_[j]), f1 = exp(-psi_[j + 1]);
      Real u = (x - t0) / (t1 - t0);
      Real fx = f0 + (f1 - f0) * u;
      return (cum_[j] + (x - t0) * (f0 + fx) / 2) / norm_;
    }
  }
  return x;
}

Real Conjugacy::dg(const Real& x) const {
  switch (kind_) {
    case Kind::Identity: return Real(1);
    case Kind::GEpsilon: {
      static const Real two_pi = 2 * real_pi();
      return 1 + eps_ * sin(two_pi * x);
    }
    case Kind::PsiTable: {
      auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
      size_t j = it == grid_.begin() ? 0 : static_cast<size_t>(it - grid_.begin()) - 1;
      j = std::min(j, grid_.size() - 2);
      Real u = (x - grid_[j]) / (grid_[j + 1] - grid_[j]);
      Real f0 = exp(-psi_[j]), f1 = exp(-psi_[j + 1]);
      return (f0 + (f1 - f0) * u) / norm_;
    }
  }
  return Real(1);
}

Real Conjugacy::inverse(const Real& y) const {
  if (is_identity()) return y;
  if (y <= 0) return Real(0);
  if (y >= 1) return Real(1);
  Real lo = 0, hi = 1, x = y;
  const Real tol = pow(Real(10), -(KSPLIT_REAL_DIGITS - 4));
  for (int it = 0; it < 400; ++it) {
    Real fx = g(x) - y;
    if (abs(fx) <= tol) return x;
    (fx > 0 ? hi : lo) = x;
    Real step = fx / dg(x);
    Real nx = x - step;
    if (!(nx > lo && nx < hi)) nx = (lo + hi) / 2;  // bisection fallback
    if (nx == x) return x;
    x = nx;
  }
  return x;
}

// ---------------------------------------------------------------------------
// BranchSystem construction

static Real max_ratio(const std::vector<Real>& r) {
  Real m = 0;
  for (const auto& x : r) m = std::max(m, x);
  return m;
}

BranchSystem BranchSystem::affine(std::vector<Rat> ratios, Rat tail_mass) {
  if (ratios.empty()) fail(Errc::ConfigInvalid, "affine system needs at least one branch");
  BranchSystem s;
  s.kind_ = SystemKind::Affine;
  s.mode_ = Arithmetic::ExactRational;
  s.symbols_ = {static_cast<int>(ratios.size()), tail_mass > 0};
  s.ratio_q_ = std::move(ratios);
  Rat off = 0;
  for (const auto& r : s.ratio_q_) {
    s.offset_q_.push_back(off);
    off += r;
    s.ratio_.push_back(Real(r));
  }
  Rat o2 = 0;
  for (const auto& r : s.ratio_q_) {
    s.offset_.push_back(Real(o2));
    o2 += r;
  }
  s.tail_q_ = tail_mass;
  s.tail_ = Real(tail_mass);
  s.c_M_ = max_ratio(s.ratio_);
  return s;
}

BranchSystem BranchSystem::affine_real(std::vector<Real> ratios, const Real& tail_mass) {
  if (ratios.empty()) fail(Errc::ConfigInvalid, "affine system needs at least one branch");
  BranchSystem s;
  s.kind_ = SystemKind::Affine;
  s.mode_ = Arithmetic::HighPrecision;
  s.symbols_ = {static_cast<int>(ratios.size()), tail_mass > 0};
  s.ratio_ = std::move(ratios);
  Real off = 0;
  for (const auto& r : s.ratio_) {
    s.offset_.push_back(off);
    off += r;
  }
  s.tail_ = tail_mass;
  s.c_M_ = max_ratio(s.ratio_);
  return s;
}

BranchSystem BranchSystem::oracle(std::vector<OracleBranch> branches, const Real& c_M) {
  if (branches.empty()) fail(Errc::ConfigInvalid, "oracle system needs at least one branch");
  BranchSystem s;
  s.kind_ = SystemKind::Oracle;
  s.mode_ = Arithmetic::HighPrecision;
  s.symbols_ = {static_cast<int>(branches.size()), false};
  s.oracle_ = std::move(branches);
  s.c_M_ = c_M;
  return s;
}

BranchSystem BranchSystem::dyadic() { return affine({Rat(1, 2), Rat(1, 2)}); }

BranchSystem BranchSystem::kakutani(const Rat& a) {
  if (!(a > 0 && a < 1)) fail(Errc::ConfigInvalid, "kakutani ratio must lie in (0,1)");
  return affine({a, 1 - a});
}

BranchSystem BranchSystem::golden() {
  Real a = (sqrt(Real(5)) - 1) / 2;
  return affine_real({a, a * a});
}

BranchSystem BranchSystem::conjugated_doubling(const Real& eps) {
  return build_conjugated_system(dyadic(), Conjugacy::g_epsilon(eps));
}

void BranchSystem::check_symbol(int i) const {
  if (i < 1 || i > symbols_.count)
    fail(Errc::BadSymbol, "symbol " + std::to_string(i) + " outside 1.." + std::to_string(symbols_.count));
}

Real BranchSystem::apply(int i, const Real& x) const {
  check_symbol(i);
  switch (kind_) {
    case SystemKind::Affine: return offset(i) + ratio(i) * x;
    case SystemKind::Conjugated: {
      Real u = conj_.inverse(x);
      return conj_.g(offset(i) + ratio(i) * u);
    }
    case SystemKind::Oracle: return oracle_[static_cast<size_t>(i - 1)].f(x);
  }
  return x;
}

Real BranchSystem::deriv(int i, const Real& x) const {
  check_symbol(i);
  switch (kind_) {
    case SystemKind::Affine: return ratio(i);
    case SystemKind::Conjugated: {
      Real u = conj_.inverse(x);
      return conj_.dg(offset(i) + ratio(i) * u) * ratio(i) / conj_.dg(u);
    }
    case SystemKind::Oracle: return oracle_[static_cast<size_t>(i - 1)].df(x);
  }
  return Real(0);
}

Real BranchSystem::branch_sup_deriv(int i) const {
  check_symbol(i);
  switch (kind_) {
    case SystemKind::Affine: return ratio(i);
    case SystemKind::Conjugated: return ratio(i) * conj_.dg_max() / conj_.dg_min();
    case SystemKind::Oracle: return oracle_[static_cast<size_t>(i - 1)].deriv_bound;
  }
  return Real(0);
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_system(const BranchSystem& sys, int grid_points) {
  ValidationReport rep;
  const int m = sys.size();
  const Real eps_num = pow(Real(10), -(KSPLIT_REAL_DIGITS - 8));
  const Real tail = sys.exact() ? Real(sys.tail_mass()) : Real(sys.tail_mass());

  // image intervals
  std::vector<Real> lo(static_cast<size_t>(m)), hi(static_cast<size_t>(m));
  for (int i = 1; i <= m; ++i) {
    lo[static_cast<size_t>(i - 1)] = sys.apply(i, Real(0));
    hi[static_cast<size_t>(i - 1)] = sys.apply(i, Real(1));
  }

  // Ordering + covering: images tile [0,1] in symbol order, defect <= tail mass.
  bool order_ok = true;
  Real defect = 0;
  {
    Real covered = 0;
    Real prev_end = 0;
    std::ostringstream detail;
    for (int i = 0; i < m; ++i) {
      if (hi[static_cast<size_t>(i)] <= lo[static_cast<size_t>(i)]) order_ok = false;
      if (abs(lo[static_cast<size_t>(i)] - prev_end) > eps_num) order_ok = false;
      covered += hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)];
      prev_end = hi[static_cast<size_t>(i)];
    }
    defect = 1 - covered;
    bool cover_ok = order_ok && abs(defect - tail) <= eps_num && defect >= -eps_num;
    if (sys.exact()) {
      Rat cov = 0;
      for (int i = 1; i <= m; ++i) cov += sys.ratio_q(i);
      Rat d = 1 - cov;
      defect = Real(d);
      cover_ok = order_ok && (d == sys.tail_mass());
    }
    detail << "defect=" << to_double(defect) << " declared tail=" << to_double(tail);
    rep.checks.push_back({"Ordering", order_ok, order_ok ? "" : "images not contiguous from 0 in symbol order"});
    rep.checks.push_back({"Covering", cover_ok, detail.str()});
    if (!order_ok || !cover_ok) rep.failures.push_back(Errc::GapOrOverlap);
  }

  // Increasing: derivative positive at grid samples.
  {
    bool inc_ok = true;
    for (int i = 1; i <= m && inc_ok; ++i) {
      if (sys.kind() == SystemKind::Affine) {
        inc_ok = sys.ratio(i) > 0;
      } else {
        for (int j = 0; j <= grid_points; j += 1) {
          Real x = Real(j) / grid_points;
          if (!(sys.deriv(i, x) > 0)) { inc_ok = false; break; }
        }
      }
    }
    rep.checks.push_back({"Increasing", inc_ok, inc_ok ? "" : "nonpositive derivative sample"});
    if (!inc_ok) rep.failures.push_back(Errc::NotIncreasing);
  }

  // Contracting: certified bound < 1 and samples below it.
  {
    Real cert = 0;
    for (int i = 1; i <= m; ++i) cert = std::max(cert, sys.branch_sup_deriv(i));
    bool con_ok = cert < 1;
    Real grid_max = 0;
    if (sys.kind() != SystemKind::Affine) {
      for (int i = 1; i <= m; ++i)
        for (int j = 0; j <= grid_points; ++j) {
          Real x = Real(j) / grid_points;
          grid_max = std::max(grid_max, sys.deriv(i, x));
        }
      if (grid_max > cert + eps_num) con_ok = false;
    } else {
      grid_max = cert;
    }
    std::ostringstream detail;
    detail << "certified sup T' = " << to_double(cert) << ", grid max = " << to_double(grid_max);
    rep.checks.push_back({"Contracting", con_ok, detail.str()});
    rep.c_M_certificate = cert;
    if (!con_ok) rep.failures.push_back(Errc::NotContracting);
  }

  rep.covering_defect = defect;
  rep.ok = rep.failures.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// map_word

CylinderRecord map_word(const BranchSystem& sys, const Word& v, int depth_limit) {
  if (v.size() > depth_limit) fail(Errc::DepthExceeded, "word length " + std::to_string(v.size()));
  for (int j = 0; j < v.size(); ++j) sys.check_symbol(v.at(j));

  CylinderRecord rec;
  rec.word = v;
  if (sys.exact()) {
    Rat a = 0, b = 1;
    for (int j = v.size() - 1; j >= 0; --j) {
      int i = v.at(j);
      a = sys.offset_q(i) + sys.ratio_q(i) * a;
      b = sys.offset_q(i) + sys.ratio_q(i) * b;
    }
    rec.left_q = a;
    rec.right_q = b;
    rec.alpha_q = b - a;
    rec.left = Real(a);
    rec.right = Real(b);
  } else if (sys.has_affine_model()) {
    // track the affine preimage, conjugate at the end
    Real a = 0, b = 1;
    for (int j = v.size() - 1; j >= 0; --j) {
      int i = v.at(j);
      a = sys.offset(i) + sys.ratio(i) * a;
      b = sys.offset(i) + sys.ratio(i) * b;
    }
    rec.left = sys.conjugacy().g(a);
    rec.right = sys.conjugacy().g(b);
  } else {
    Real a = 0, b = 1;
    for (int j = v.size() - 1; j >= 0; --j) {
      a = sys.apply(v.at(j), a);
      b = sys.apply(v.at(j), b);
    }
    rec.left = a;
    rec.right = b;
  }
  rec.alpha = rec.right - rec.left;
  rec.chord = rec.alpha;
  return rec;
}

// ---------------------------------------------------------------------------
// Conjugated systems

BranchSystem build_conjugated_system(const BranchSystem& base, const Conjugacy& g, const Real& tol) {
  if (base.kind() != SystemKind::Affine)
    fail(Errc::ConfigInvalid, "conjugation needs an affine base system");
  {
    auto rep = validate_system(base);
    if (!rep.ok) fail(Errc::ConfigInvalid, "conjugation base failed validation");
  }
  if (g.is_identity()) return base;

  BranchSystem s = base;
  s.kind_ = SystemKind::Conjugated;
  s.mode_ = Arithmetic::HighPrecision;
  s.conj_ = g;
  s.c_M_ = 0;
  for (int i = 1; i <= s.size(); ++i) s.c_M_ = std::max(s.c_M_, s.branch_sup_deriv(i));

  // intertwining check T_i(g(x)) = g(T_i^l(x)) on a grid
  const int G = 256;
  Real worst = 0;
  for (int i = 1; i <= s.size(); ++i) {
    for (int j = 0; j <= G; ++j) {
      Real x = Real(j) / G;
      Real lhs = s.apply(i, g.g(x));
      Real rhs = g.g(base.offset(i) + base.ratio(i) * x);
      worst = std::max(worst, abs(lhs - rhs));
    }
  }
  if (worst > tol)
    fail(Errc::ConjugacyInvalid, "grid identity residual " + std::to_string(to_double(worst)));
  return s;
}

// ---------------------------------------------------------------------------
// System files

using nlohmann::json;

BranchSystem system_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::ConfigInvalid, std::string("bad system file: ") + e.what());
  }
  std::string kind = j.value("kind", "affine");
  Rat tail = 0;
  if (j.contains("tail_mass")) tail = parse_fraction_or_throw(j.at("tail_mass").get<std::string>());
  if (tail < 0 || tail > Rat(1, 1000000000))
    fail(Errc::ConfigInvalid, "tail_mass must lie in [0, 1e-9]");

  if (!j.contains("ratios") || !j.at("ratios").is_array() || j.at("ratios").empty())
    fail(Errc::ConfigInvalid, "system file needs a nonempty 'ratios' array");
  std::vector<Rat> ratios;
  for (const auto& r : j.at("ratios")) ratios.push_back(parse_fraction_or_throw(r.get<std::string>()));

  std::string arith = j.value("arithmetic", "exact-rational");
  BranchSystem base = BranchSystem::affine(ratios, tail);
  if (arith == "high-precision") {
    std::vector<Real> rr;
    for (const auto& r : ratios) rr.push_back(Real(r));
    base = BranchSystem::affine_real(rr, Real(tail));
  } else if (arith != "exact-rational") {
    fail(Errc::ConfigInvalid, "unknown arithmetic '" + arith + "'");
  }

  if (kind == "affine") {
    if (j.contains("conjugacy") && j.at("conjugacy").value("kind", "identity") != "identity")
      fail(Errc::ConfigInvalid, "affine system with non-identity conjugacy");
    return base;
  }
  if (kind == "conjugated") {
    if (!j.contains("conjugacy")) fail(Errc::ConfigInvalid, "conjugated system needs 'conjugacy'");
    const auto& c = j.at("conjugacy");
    std::string ck = c.value("kind", "identity");
    if (ck == "identity") return base;
    if (ck == "g-epsilon") {
      if (!c.contains("epsilon")) fail(Errc::ConfigInvalid, "g-epsilon conjugacy needs 'epsilon'");
      // take the decimal token as written (strings keep full precision;
      // numbers round-trip through their shortest decimal form)
      std::string etext = c.at("epsilon").is_string() ? c.at("epsilon").get<std::string>()
                                                      : c.at("epsilon").dump();
      Real eps;
      try {
        eps = Real(etext);
      } catch (const std::exception&) {
        fail(Errc::ConfigInvalid, "bad epsilon '" + etext + "'");
      }
      return build_conjugated_system(base, Conjugacy::g_epsilon(eps));
    }
    fail(Errc::ConfigInvalid, "unknown conjugacy kind '" + ck + "'");
  }
  fail(Errc::ConfigInvalid, "unknown system kind '" + kind + "'");
}

BranchSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigInvalid, "cannot open system file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return system_from_json_text(ss.str());
}

std::string system_to_json_text(const BranchSystem& sys) {
  json j;
  j["kind"] = sys.kind() == SystemKind::Conjugated ? "conjugated"
              : sys.kind() == SystemKind::Oracle   ? "oracle"
                                                   : "affine";
  j["arithmetic"] = sys.exact() ? "exact-rational" : "high-precision";
  json ratios = json::array();
  for (int i = 1; i <= sys.size(); ++i) {
    if (sys.exact())
      ratios.push_back(fraction_str(sys.ratio_q(i)));
    else if (sys.has_affine_model())
      ratios.push_back(sys.ratio(i).str(24));
  }
  j["ratios"] = ratios;
  j["tail_mass"] = fraction_str(sys.tail_mass());
  if (sys.kind() == SystemKind::Conjugated) {
    json c;
    c["kind"] = sys.conjugacy().kind() == Conjugacy::Kind::GEpsilon ? "g-epsilon" : "psi-table";
    if (sys.conjugacy().kind() == Conjugacy::Kind::GEpsilon)
      c["epsilon"] = to_double(sys.conjugacy().epsilon());
    j["conjugacy"] = c;
  }
  return j.dump(2);
}

}  // namespace ksplit
