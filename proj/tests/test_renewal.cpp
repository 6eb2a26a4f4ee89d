#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ksplit/branch_system.hpp"
#include "ksplit/renewal.hpp"
#include "ksplit/splitting.hpp"
#include "ksplit/symbolic.hpp"

#include <random>
#include <set>

using namespace ksplit;

namespace {

// right-hand side of the iterated renewal identity:
// N_*(t,x) = sum_{|u|=n} N_*(t - S_n gamma(u+x), u+x)
//          + sum_{j=1}^{n-1} #{|u|=j : S_j gamma(u+x) <= t} + 1{t >= 0}
long long eq26_rhs_exact(const BranchSystem& sys, const Word& x, const Rat& lambda, int n) {
  Rat ax = *map_word(sys, x).alpha_q;
  std::vector<Word> level{Word{}};
  long long middle = 0;
  for (int j = 1; j < n; ++j) {
    std::vector<Word> next;
    for (const auto& u : level)
      for (int i = 1; i <= sys.size(); ++i) next.push_back(u.prepended(i));
    level = next;
    for (const auto& u : level)
      if (*map_word(sys, u.concat(x)).alpha_q >= lambda * ax) ++middle;
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
    Rat ay = *map_word(sys, y).alpha_q;
    // t - S_n gamma(y) corresponds to the scale lambda * alpha_x / alpha_y
    Rat lam2 = lambda * ax / ay;
    head += renewal_count(sys, RenewalQuery::n_star(RenewalBase(y), ScaleThreshold::from_scale(lam2)));
  }
  return head + middle + (lambda <= 1 ? 1 : 0);
}

long long eq26_rhs_real(const BranchSystem& sys, const Word& x, const Real& lambda, int n) {
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
    Real ay = map_word(sys, y).alpha;
    Real lam2 = lambda * ax / ay;
    head += renewal_count(sys, RenewalQuery::n_star(RenewalBase(y), ScaleThreshold::from_scale(lam2)));
  }
  return head + middle + (lambda <= 1 ? 1 : 0);
}

}  // namespace

TEST_CASE("renewal_count worked examples") {
  auto dyadic = BranchSystem::dyadic();
  // t = 3 log 2, i.e. scale 1/8: all words of length <= 3
  CHECK(renewal_count(dyadic, RenewalQuery::n_star(RenewalBase::empty(),
                                                   ScaleThreshold::from_scale(Rat(1, 8)))) == 15);
  // negative t: indicator fails, sums positive
  CHECK(renewal_count(dyadic, RenewalQuery::n_star(RenewalBase::empty(),
                                                   ScaleThreshold::from_t(Real("-0.5")))) == 0);
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  CHECK(renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(),
                                                ScaleThreshold::from_scale(Rat(6, 25)))) == 6);
}

TEST_CASE("subtree counts N_v") {
  auto dyadic = BranchSystem::dyadic();
  // N_v(n log2 + log(1/2), empty) = 2^n - 1 for v = (1)
  for (int n = 1; n <= 6; ++n) {
    Rat lam = Rat(2) / Rat(1L << n);  // e^{-t} with t = n log2 - log 2... alpha_v * lam = 2^{-n}
    long long expect = (1LL << n) - 1;
    CHECK(renewal_count(dyadic, RenewalQuery::n_subtree(Word{1}, RenewalBase::empty(),
                                                        ScaleThreshold::from_scale(lam))) == expect);
  }
  // threshold above alpha_v: zero
  CHECK(renewal_count(dyadic, RenewalQuery::n_subtree(Word{1}, RenewalBase::empty(),
                                                      ScaleThreshold::from_scale(Rat(3)))) == 0);
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  // alpha_v * e^{-t} = 6/25 with alpha_v = 2/5: scale 3/5, count {empty, (2)}
  CHECK(renewal_count(sys, RenewalQuery::n_subtree(Word{1}, RenewalBase::empty(),
                                                   ScaleThreshold::from_scale(Rat(3, 5)))) == 2);
}

TEST_CASE("oracle equality: renewal count equals the enumeration cardinality") {
  std::vector<BranchSystem> systems;
  systems.push_back(BranchSystem::dyadic());
  systems.push_back(BranchSystem::kakutani(Rat(2, 5)));
  systems.push_back(BranchSystem::golden());
  for (const auto& sys : systems) {
    for (int j = 1; j <= 40; ++j) {
      Real t = Real(j) / 8;  // e^t up to ~148
      auto thr = ScaleThreshold::from_t(t);
      long long n1 = renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(), thr));
      auto words = enumerate_words_by_scale(sys, thr);
      CHECK(n1 == static_cast<long long>(words.size()));
    }
  }
}

TEST_CASE("renewal identity (iterated decomposition), exact systems") {
  std::mt19937 rng(2026);
  std::uniform_int_distribution<int> den(40, 4000), sym(1, 2), len(0, 3);
  for (auto sys : {BranchSystem::dyadic(), BranchSystem::kakutani(Rat(2, 5))}) {
    for (int n = 1; n <= 4; ++n) {
      for (int trial = 0; trial < 10; ++trial) {
        int q = den(rng);
        std::uniform_int_distribution<int> num(1, q - 1);
        Rat lambda(num(rng), q);
        std::vector<int> xs(static_cast<size_t>(len(rng)));
        for (auto& s : xs) s = sym(rng);
        Word x(std::move(xs));
        long long direct = renewal_count(
            sys, RenewalQuery::n_star(RenewalBase(x), ScaleThreshold::from_scale(lambda)));
        CHECK(direct == eq26_rhs_exact(sys, x, lambda, n));
      }
    }
  }
}

TEST_CASE("renewal identity on the golden system (float thresholds)") {
  auto sys = BranchSystem::golden();
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> lam(0.02, 0.9);
  std::uniform_int_distribution<int> sym(1, 2), len(0, 2);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      Real lambda(lam(rng));
      std::vector<int> xs(static_cast<size_t>(len(rng)));
      for (auto& s : xs) s = sym(rng);
      Word x(std::move(xs));
      long long direct = renewal_count(
          sys, RenewalQuery::n_star(RenewalBase(x), ScaleThreshold::from_scale(lambda)));
      CHECK(direct == eq26_rhs_real(sys, x, lambda, n));
    }
  }
}

TEST_CASE("monotonicity in t") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  std::vector<Real> grid;
  for (int j = 0; j <= 30; ++j) grid.push_back(Real(j) / 5);
  auto series = renewal_asymptotic_series(sys, RenewalBase::empty(), grid);
  for (size_t j = 1; j < series.points.size(); ++j)
    CHECK(series.points[j].count >= series.points[j - 1].count);
}

TEST_CASE("base-point comparison: exact equality for affine, bounded shift for conjugated") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  // affine chord sums do not depend on the base word at all
  for (int j = 4; j <= 24; j += 5) {
    Rat lam(j, 100);
    auto thr = ScaleThreshold::from_scale(lam);
    long long a = renewal_count(sys, RenewalQuery::n_star(RenewalBase(Word{1}), thr));
    long long b = renewal_count(sys, RenewalQuery::n_star(RenewalBase(Word{2, 2, 1}), thr));
    long long c = renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(), thr));
    CHECK(a == b);
    CHECK(b == c);
  }

  Real eps("0.1");
  auto conj = BranchSystem::conjugated_doubling(eps);
  // words sharing the first m symbols; eps_m from the distortion of g
  const int m = 4;
  Real L0 = 2 * real_pi() * eps / (1 - eps);
  Real eps_m = 4 * L0 / Real(1L << m);
  Word x{1, 2, 1, 2, 1};
  Word xp{1, 2, 1, 2, 2, 1};
  for (int j = 2; j <= 10; j += 2) {
    Real t = Real(j) / 2;
    long long lhs = renewal_count(conj, RenewalQuery::n_star(RenewalBase(x), ScaleThreshold::from_t(t)));
    long long rhs =
        renewal_count(conj, RenewalQuery::n_star(RenewalBase(xp), ScaleThreshold::from_t(t + eps_m)));
    CHECK(lhs <= rhs);
  }
}

TEST_CASE("twisted-potential N_v agrees with the cylinder-count form") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  for (double t : {1.0, 2.0, 3.5}) {
    auto thr = ScaleThreshold::from_t(Real(t));
    long long direct =
        renewal_count(sys, RenewalQuery::n_subtree(Word{1}, RenewalBase::empty(), thr));
    long long viapot = subtree_count_via_potential(sys, Word{1}, RenewalBase::empty(), thr, 40);
    CHECK(direct == viapot);
  }
  auto conj = BranchSystem::conjugated_doubling(Real("0.1"));
  for (double t : {1.0, 2.5}) {
    auto thr = ScaleThreshold::from_t(Real(t));
    long long direct =
        renewal_count(conj, RenewalQuery::n_subtree(Word{1}, RenewalBase::empty(), thr));
    long long viapot = subtree_count_via_potential(conj, Word{1}, RenewalBase::empty(), thr, 40);
    CHECK(direct == viapot);
  }
}

TEST_CASE("coded-point bases run through the derivative chain") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  // for affine systems the chain matches word-base counts exactly
  auto thr = ScaleThreshold::from_t(Real(3));
  long long word_count = renewal_count(sys, RenewalQuery::n_star(RenewalBase::empty(), thr));
  long long coded_count = renewal_count(
      sys, RenewalQuery::n_star(RenewalBase(CodedPoint::periodic(Word{1})), thr));
  CHECK(word_count == coded_count);
}

TEST_CASE("splitting cross-check: left endpoints match the N_v difference") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  auto res = run_splitting(sys, SplitStop{14, std::nullopt});
  Rat lam = *res.ledger.stages.back().max_length_q;  // realized threshold
  std::vector<Rat> thr{lam};

  long long C = scale_counts(sys, Word{}, RenewalBase::empty(), thr)[0];
  long long D = scale_counts(sys, Word{}, RenewalBase(Word{1}), thr)[0];
  CHECK(C - D == res.ledger.left_count());

  long long A = scale_counts(sys, Word{1}, RenewalBase::empty(), thr)[0];
  long long B = scale_counts(sys, Word{1}, RenewalBase(Word{1}), thr)[0];
  Rat t1_right = *map_word(sys, Word{1}).right_q;
  long long in_cyl = 0;
  for (const auto& e : res.ledger.endpoints)
    if (e.in_left && *e.value_q < t1_right) ++in_cyl;
  CHECK(A - B == in_cyl);
}

TEST_CASE("asymptotic series: dyadic oscillation and negative grids") {
  auto dyadic = BranchSystem::dyadic();
  std::vector<Real> grid;
  for (int j = 0; j <= 300; ++j) grid.push_back(Real(6) + Real(j) / 100);
  auto series = renewal_asymptotic_series(dyadic, RenewalBase::empty(), grid);
  // closed form 2^{floor(t/log2)+1} - 1
  for (size_t j = 0; j < series.points.size(); j += 37) {
    long long fl = static_cast<long long>(to_double(floor(series.points[j].t / log(Real(2)))));
    CHECK(series.points[j].count == (2LL << fl) - 1);
  }
  Real lo = series.points[0].scaled, hi = lo;
  for (const auto& p : series.points) {
    lo = std::min(lo, p.scaled);
    hi = std::max(hi, p.scaled);
  }
  CHECK(hi / lo > Real("1.9"));
  CHECK(hi / lo < Real("2.1"));

  std::vector<Real> neg{Real(-3), Real(-2), Real(-1)};
  auto zser = renewal_asymptotic_series(dyadic, RenewalBase::empty(), neg);
  for (const auto& p : zser.points) CHECK(p.count == 0);
}

TEST_CASE("cylinder ratio: v = empty is identically 1") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  std::vector<Real> grid{Real(2), Real(3), Real(4)};
  auto pts = cylinder_ratio(sys, Word{}, grid);
  for (const auto& p : pts) {
    CHECK(p.numerator == p.denominator);
    REQUIRE(p.ratio.has_value());
    CHECK(*p.ratio == 1);
  }
}

TEST_CASE("cylinder ratio: nonlattice systems approach Lebesgue mass") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  std::vector<Real> grid{Real("10.5")};
  auto pts = cylinder_ratio(sys, Word{1}, grid);
  REQUIRE(pts[0].ratio.has_value());
  CHECK(abs(*pts[0].ratio - Real(Rat(2, 5))) <= Real("0.02"));
}

TEST_CASE("budget exhaustion raises BudgetExceeded") {
  auto sys = BranchSystem::dyadic();
  CountBudget tiny;
  tiny.max_nodes = 10;
  CHECK_THROWS_AS((void)renewal_count(sys,
                                      RenewalQuery::n_star(RenewalBase::empty(),
                                                           ScaleThreshold::from_scale(Rat(1, 1024))),
                                      tiny),
                  Error);
}

TEST_CASE("renewal CSV carries the residue tag for lattice runs") {
  auto dyadic = BranchSystem::dyadic();
  std::vector<Real> grid{Real(2), Real(3)};
  auto series = renewal_asymptotic_series(dyadic, RenewalBase::empty(), grid);
  auto csv = renewal_csv(series, "N_*", "", "", log(Real(2)));
  CHECK(csv.find("residue_mod_a") != std::string::npos);
  CHECK(csv.rfind("\n") == csv.size() - 1);
}
