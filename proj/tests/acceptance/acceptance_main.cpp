// Acceptance suite: one line per criterion, exit 0 iff all pass.

#include "ksplit/branch_system.hpp"
#include "ksplit/lattice.hpp"
#include "ksplit/renewal.hpp"
#include "ksplit/reports.hpp"
#include "ksplit/splitting.hpp"
#include "ksplit/symbolic.hpp"
#include "ksplit/thermo.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

using namespace ksplit;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string tmpdir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "ksplit_acceptance" / name;
  fs::remove_all(p);
  return p.string();
}

// ---------------------------------------------------------------------------

void criterion1_endpoint_goldens() {
  bool pass = true;
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();
  try {
    auto b1 = reproduce_target("kakutani-2-5", tmpdir("c1a"));
    double s1 = seconds_since(t0);
    auto t1 = std::chrono::steady_clock::now();
    auto b2 = reproduce_target("finite-3", tmpdir("c1b"));
    double s2 = seconds_since(t1);
    pass = b1.ok && b2.ok && s1 < 1.0 && s2 < 1.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "stages exact; %.2fs and %.2fs", s1, s2);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(1, "endpoint golden tables (kakutani-2-5, finite-3)", pass, detail);
}

void criterion2_equidistribution() {
  auto t0 = std::chrono::steady_clock::now();
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  SplitOptions opts;
  opts.stage_discrepancy = false;
  auto res = run_splitting(sys, SplitStop{std::nullopt, 50000}, opts);
  double worst_mu = 0;
  for (int k = 1; k <= 10; ++k) {
    Rat mu = empirical_measure_exact(res.ledger, MeasureSet::Left, Rat(0), Rat(k, 10));
    worst_mu = std::max(worst_mu, std::fabs(to_double(mu) - k / 10.0));
  }
  Rat dstar = star_discrepancy_exact(res.ledger.left_points_q());
  double secs = seconds_since(t0);
  bool pass = res.ledger.left_count() >= 50000 && worst_mu <= 0.02 &&
              to_double(dstar) <= 0.02 && secs < 10.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "#L=%lld, max|mu-leb|=%.4f, D*=%.4f, %.1fs",
                res.ledger.left_count(), worst_mu, to_double(dstar), secs);
  report(2, "equidistribution at desk scale (alpha=2/5, #L>=5e4)", pass, buf);
}

void criterion3_oracle_equivalence() {
  std::vector<std::pair<std::string, BranchSystem>> systems;
  systems.emplace_back("dyadic", BranchSystem::dyadic());
  systems.emplace_back("2/5", BranchSystem::kakutani(Rat(2, 5)));
  systems.emplace_back("golden", BranchSystem::golden());
  bool pass = true;
  long checked = 0;
  std::string bad;
  for (auto& [name, sys] : systems) {
    for (int j = 0; j <= 119; ++j) {  // t = 0.05 j, e^t <= 400
      Real t = Real(j) / 20;
      if (exp(t) > 400) break;
      auto thr = ScaleThreshold::from_t(t);
      long long count = renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(), thr));
      long long card = static_cast<long long>(enumerate_words_by_scale(sys, thr).size());
      ++checked;
      if (count != card) {
        pass = false;
        bad = name + " at t=" + std::to_string(to_double(t));
        break;
      }
    }
    // tie-prone exact scales as well
    if (sys.exact()) {
      for (const Rat& lam : {Rat(1, 8), Rat(6, 25), Rat(1, 400), Rat(4, 25)}) {
        auto thr = ScaleThreshold::from_scale(lam);
        long long count = renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(), thr));
        long long card = static_cast<long long>(enumerate_words_by_scale(sys, thr).size());
        ++checked;
        if (count != card) {
          pass = false;
          bad = name + " at exact scale " + fraction_str(lam);
        }
      }
    }
  }
  report(3, "renewal oracle equivalence (count == enumeration)", pass,
         pass ? std::to_string(checked) + " grid points, exact integer equality" : bad);
}

// direct N_* against the n-times iterated renewal identity
long long iterate_identity(const BranchSystem& sys, const Word& x, const Real& lambda, int n) {
  Real ax = map_word(sys, x).alpha;
  std::vector<Word> level{Word{}};
  long long middle = 0;
  for (int j = 1; j < n; ++j) {
    std::vector<Word> next;
    for (const auto& u : level)
      for (int i = 1; i <= sys.size(); ++i) next.push_back(u.prepended(i));
    level = next;
    for (const auto& u : level)
      if (map_word(sys, u.concat(x)).alpha >= lambda * ax) ++middle;
  }
  std::vector<Word> deepest;
  if (n == 1) {
    for (int i = 1; i <= sys.size(); ++i) deepest.push_back(Word{i});
  } else {
    for (const auto& u : level)
      for (int i = 1; i <= sys.size(); ++i) deepest.push_back(u.prepended(i));
  }
  long long head = 0;
  for (const auto& u : deepest) {
    Word y = u.concat(x);
    Real lam2 = lambda * ax / map_word(sys, y).alpha;
    head += renewal_count(sys, RenewalQuery::n_star(RenewalBase(y), ScaleThreshold::from_scale(lam2)));
  }
  return head + middle + (lambda <= 1 ? 1 : 0);
}

void criterion4_renewal_identity() {
  std::vector<std::pair<std::string, BranchSystem>> systems;
  systems.emplace_back("dyadic", BranchSystem::dyadic());
  systems.emplace_back("2/5", BranchSystem::kakutani(Rat(2, 5)));
  systems.emplace_back("golden", BranchSystem::golden());
  std::mt19937 rng(20260811);
  std::uniform_real_distribution<double> tdist(0.3, 5.5);
  std::uniform_int_distribution<int> len(0, 3), sym(1, 2);
  bool pass = true;
  std::string bad;
  for (auto& [name, sys] : systems) {
    for (int n = 1; n <= 4 && pass; ++n) {
      for (int trial = 0; trial < 10 && pass; ++trial) {
        Real lambda = exp(Real(-tdist(rng)));
        std::vector<int> xs(static_cast<size_t>(len(rng)));
        for (auto& s : xs) s = sym(rng);
        Word x(std::move(xs));
        long long direct = renewal_count(
            sys, RenewalQuery::n_star(RenewalBase(x), ScaleThreshold::from_scale(lambda)));
        long long rhs = iterate_identity(sys, x, lambda, n);
        if (direct != rhs) {
          pass = false;
          bad = name + " n=" + std::to_string(n);
        }
      }
    }
  }
  report(4, "iterated renewal identity, n = 1..4", pass,
         pass ? "120 random (t,x) pairs, exact integer equality" : bad);
}

void criterion5_nonlattice_constant() {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  std::vector<Real> grid;
  for (int j = 0; j <= 80; ++j) grid.push_back(Real(8) + Real(j) / 20);
  auto series = renewal_asymptotic_series(sys, RenewalBase::empty(), grid);
  auto gibbs = leading_eigendata(sys, 8);
  auto hstar = hstar_extend(sys, gibbs, 8);
  Real C = hstar.at_empty() / gibbs.lyapunov;
  Real rel = abs(series.fitted_limit - C) / C;
  char buf[160];
  std::snprintf(buf, sizeof buf, "fit %.5f vs h_*(0)/lyap %.5f (%.2f%%)",
                to_double(series.fitted_limit), to_double(C), 100 * to_double(rel));
  report(5, "nonlattice renewal constant within 5%", rel <= Real("0.05"), buf);
}

void criterion6_lattice_oscillation() {
  auto sys = BranchSystem::dyadic();
  std::vector<Real> grid;
  for (int j = 0; j <= 800; ++j) grid.push_back(Real(8) + Real(j) / 200);
  auto series = renewal_asymptotic_series(sys, RenewalBase::empty(), grid);
  Real lo = series.points[0].scaled, hi = lo;
  for (const auto& p : series.points) {
    lo = std::min(lo, p.scaled);
    hi = std::max(hi, p.scaled);
  }
  Real band = hi / lo;
  bool band_ok = band >= Real("1.9") && band <= Real("2.1");

  // residue classes: e^{-an} N(an + theta) converges per class
  Real a = log(Real(2));
  bool classes_ok = true;
  double worst_diff = 0;
  for (int cls = 0; cls < 4; ++cls) {
    Real theta = a * cls / 4;
    std::vector<Real> tg;
    for (int n = 12; n <= 17; ++n) tg.push_back(a * n + theta);
    auto cs = renewal_asymptotic_series(sys, RenewalBase::empty(), tg);
    for (size_t j = 1; j < cs.points.size(); ++j) {
      // e^{-an} N(an+theta) = e^{theta} * scaled
      Real x1 = exp(theta) * cs.points[j].scaled;
      Real x0 = exp(theta) * cs.points[j - 1].scaled;
      worst_diff = std::max(worst_diff, std::fabs(to_double(x1 - x0)));
      if (abs(x1 - x0) > Real("1e-3")) classes_ok = false;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "band ratio %.4f, residue-class max diff %.2e", to_double(band),
                worst_diff);
  report(6, "lattice oscillation: band ratio 2 +/- 5%, residue classes converge",
         band_ok && classes_ok, buf);
}

void criterion7_transfer_operator() {
  bool pass = true;
  std::string detail;
  for (auto sys : {BranchSystem::kakutani(Rat(2, 5)), BranchSystem::dyadic()}) {
    auto g = leading_eigendata(sys, 8);
    if (!(abs(g.lambda - 1) <= Real("1e-10"))) pass = false;
    for (const auto& v : g.h.values)
      if (v != 1) pass = false;
  }
  auto conj = BranchSystem::conjugated_doubling(Real("0.1"));
  auto g12 = leading_eigendata(conj, 12, 100000, Real("1e-12"));
  auto h = hstar_extend(conj, g12, 12);
  bool conj_ok = abs(g12.lambda - 1) <= Real("1e-4") && h.max_residual <= Real("1e-4");
  char buf[160];
  std::snprintf(buf, sizeof buf, "affine h==1 exact; |lambda-1|=%.1e, h* residual=%.1e",
                to_double(abs(g12.lambda - 1)), to_double(h.max_residual));
  report(7, "transfer operator eigendata (affine exact; g_eps depth 12)", pass && conj_ok, buf);
}

void criterion8_lattice_counterexample() {
  auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  Real target = Real(2) / 3;
  for (const char* es : {"0.05", "0.1", "0.2"}) {
    Real eps(es);
    auto sys = BranchSystem::conjugated_doubling(eps);
    auto verdict = detect_lattice(sys);
    if (!verdict.is_lattice) { pass = false; detail = "not detected as lattice"; break; }
    auto model = reduce_to_affine(sys, verdict);
    auto prof = lattice_profile_integrals(model, {Word{1}});
    if (abs(prof.I - Real(Rat(3, 8))) > Real("1e-8") ||
        abs(prof.Iv[0].second - Real(Rat(1, 2))) > Real("1e-8")) {
      pass = false;
      detail = "profile integrals off the closed forms at eps=" + std::string(es);
      break;
    }
    Real a = log(Real(2));
    std::vector<Real> grid;
    for (int n = 4; n <= 14; ++n) grid.push_back(a * n);
    auto pts = cylinder_ratio(sys, Word{1}, grid);
    if (!pts.back().ratio || abs(*pts.back().ratio - target) > Real("0.02")) {
      pass = false;
      detail = "cylinder ratio missed 2/3 at eps=" + std::string(es);
      break;
    }
    Real alpha1 = map_word(sys, Word{1}).alpha;
    if (!(abs(alpha1 - target) > Real("0.02"))) {
      pass = false;
      detail = "alpha_1 unexpectedly close to the lattice limit";
      break;
    }
  }
  double secs = seconds_since(t0);
  if (pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "I=3/8, I_1=1/2 to 1e-8; ratio -> 2/3 != alpha_1; %.1fs for eps in {0.05,0.1,0.2}",
                  secs);
    detail = buf;
  }
  report(8, "lattice counterexample (profile integrals + cylinder ratio)", pass && secs < 60.0,
         detail);
}

void criterion9_lattice_detection() {
  auto d = detect_lattice(BranchSystem::dyadic());
  bool dy = d.is_lattice && abs(d.a - log(Real(2))) <= Real("1e-12");
  auto g = detect_lattice(BranchSystem::golden());
  Real a_gold = -log((sqrt(Real(5)) - 1) / 2);
  bool go = g.is_lattice && abs(g.a - a_gold) <= Real("1e-9");
  auto k = detect_lattice(BranchSystem::kakutani(Rat(2, 5)), 5, Real("1e-9"), 1'000'000);
  bool kk = !k.is_lattice;
  char buf[160];
  std::snprintf(buf, sizeof buf, "dyadic a=%.6f; golden a=%.6f; (2/5,3/5) nonlattice=%s",
                to_double(d.a), to_double(g.a), kk ? "yes" : "no");
  report(9, "lattice detection verdicts", dy && go && kk, buf);
}

void criterion10_reduction_roundtrip() {
  Real eps("0.1");
  auto sys = BranchSystem::conjugated_doubling(eps);
  auto verdict = detect_lattice(sys);
  auto model = reduce_to_affine(sys, verdict);
  bool exact_half = model.alpha_exact && model.alpha_ell_q.size() == 2 &&
                    model.alpha_ell_q[0] == Rat(1, 2) && model.alpha_ell_q[1] == Rat(1, 2);
  auto g = Conjugacy::g_epsilon(eps);
  Real worst = 0;
  for (int j = 0; j <= 4096; ++j) {
    Real x = Real(j) / 4096;
    worst = std::max(worst, abs(model.g_at(x) - g.g(x)));
  }
  bool g_ok = worst <= Real("1e-6");
  bool resid_ok = model.conj_residual <= Real("1e-6");
  char buf[160];
  std::snprintf(buf, sizeof buf, "alpha^l exact (1/2,1/2)=%s, max|g-g_eps|=%.1e, conj residual=%.1e",
                exact_half ? "yes" : "no", to_double(worst), to_double(model.conj_residual));
  report(10, "reduction round-trip recovers the affine model and g", exact_half && g_ok && resid_ok,
         buf);
}

}  // namespace

int main() {
  criterion1_endpoint_goldens();
  criterion2_equidistribution();
  criterion3_oracle_equivalence();
  criterion4_renewal_identity();
  criterion5_nonlattice_constant();
  criterion6_lattice_oscillation();
  criterion7_transfer_operator();
  criterion8_lattice_counterexample();
  criterion9_lattice_detection();
  criterion10_reduction_roundtrip();
  if (g_failures == 0)
    std::printf("acceptance: all 10 criteria passed\n");
  else
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
