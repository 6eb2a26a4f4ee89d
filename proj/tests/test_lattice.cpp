#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ksplit/branch_system.hpp"
#include "ksplit/lattice.hpp"

using namespace ksplit;

TEST_CASE("periodic Birkhoff sums telescope to -log of the composed derivative") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  // affine: sum over any word is -log alpha_w
  CHECK(abs(periodic_birkhoff_sum(sys, Word{1}) - log(Real(Rat(5, 2)))) < Real("1e-30"));
  CHECK(abs(periodic_birkhoff_sum(sys, Word{1, 2}) -
            (log(Real(Rat(5, 2))) + log(Real(Rat(5, 3))))) < Real("1e-30"));
  // conjugation preserves periodic sums
  auto conj = BranchSystem::conjugated_doubling(Real("0.2"));
  for (auto w : {Word{1}, Word{2}, Word{1, 2}, Word{2, 1, 1}})
    CHECK(abs(periodic_birkhoff_sum(conj, w) - w.size() * log(Real(2))) < Real("1e-25"));
}

TEST_CASE("detect_lattice: dyadic") {
  auto v = detect_lattice(BranchSystem::dyadic());
  CHECK(v.is_lattice);
  CHECK(v.exact_certificate);
  REQUIRE(v.log_base.has_value());
  CHECK(*v.log_base == Rat(1, 2));
  CHECK(abs(v.a - log(Real(2))) < Real("1e-30"));
  for (const auto& e : v.evidence) CHECK(e.residual <= Real("1e-25"));
}

TEST_CASE("detect_lattice: golden (alpha, alpha^2)") {
  auto v = detect_lattice(BranchSystem::golden());
  CHECK(v.is_lattice);
  CHECK_FALSE(v.exact_certificate);  // irrational ratios, CF route
  Real a = -log((sqrt(Real(5)) - 1) / 2);
  CHECK(abs(v.a - a) <= Real("1e-9"));
  CHECK(abs(v.a - Real("0.481212")) < Real("1e-6"));
  // evidence multiples are {1,2,...}
  bool saw1 = false, saw2 = false;
  for (const auto& e : v.evidence) {
    if (e.word == Word{1}) { saw1 = true; CHECK(e.multiple == 1); }
    if (e.word == Word{2}) { saw2 = true; CHECK(e.multiple == 2); }
  }
  CHECK(saw1);
  CHECK(saw2);
}

TEST_CASE("detect_lattice: (2/5,3/5) is nonlattice at the denominator cap") {
  auto v = detect_lattice(BranchSystem::kakutani(Rat(2, 5)), 5, Real("1e-9"), 1'000'000);
  CHECK_FALSE(v.is_lattice);
  CHECK(v.exact_certificate);  // proven multiplicatively independent
  CHECK(v.a == 0);
}

TEST_CASE("detect_lattice: conjugated doubling stays lattice with a = log 2") {
  auto sys = BranchSystem::conjugated_doubling(Real("0.1"));
  auto v = detect_lattice(sys);
  CHECK(v.is_lattice);
  CHECK(abs(v.a - log(Real(2))) <= Real("1e-12"));
}

TEST_CASE("detect_lattice: period budget") {
  CHECK_THROWS_AS((void)detect_lattice(BranchSystem::dyadic(), 30), Error);
}

TEST_CASE("reduce_to_affine: affine lattice input reduces to itself") {
  auto sys = BranchSystem::dyadic();
  auto v = detect_lattice(sys);
  auto model = reduce_to_affine(sys, v);
  CHECK(model.depth_M == 1);
  CHECK(model.alpha_exact);
  CHECK(model.alpha_ell_q[0] == Rat(1, 2));
  CHECK(model.alpha_ell_q[1] == Rat(1, 2));
  // g is the identity on the grid
  Real worst = 0;
  for (size_t j = 0; j < model.grid.size(); ++j)
    worst = std::max(worst, abs(model.g_samples[j] - model.grid[j]));
  CHECK(worst < Real("1e-25"));
  CHECK(model.conj_residual < Real("1e-20"));
}

TEST_CASE("reduce_to_affine: forced deeper depth gives all-zero Phi tables") {
  auto sys = BranchSystem::dyadic();
  auto v = detect_lattice(sys);
  ReduceOptions opts;
  opts.min_depth = 3;
  opts.grid_size = 256;
  auto model = reduce_to_affine(sys, v, opts);
  CHECK(model.depth_M == 3);
  REQUIRE(model.phi_tables.size() == 2);
  for (const auto& table : model.phi_tables)
    for (long x : table) CHECK(x == 0);
  CHECK(model.alpha_ell_q[0] == Rat(1, 2));
}

TEST_CASE("reduce_to_affine: conjugated doubling recovers (1/2,1/2) and g_eps") {
  Real eps("0.1");
  auto sys = BranchSystem::conjugated_doubling(eps);
  auto v = detect_lattice(sys);
  auto model = reduce_to_affine(sys, v);

  CHECK(model.alpha_exact);
  CHECK(model.alpha_ell_q[0] == Rat(1, 2));
  CHECK(model.alpha_ell_q[1] == Rat(1, 2));

  auto g = Conjugacy::g_epsilon(eps);
  Real worst = 0;
  for (int j = 0; j <= 4096; ++j) {
    Real x = Real(j) / 4096;
    worst = std::max(worst, abs(model.g_at(x) - g.g(x)));
  }
  CHECK(worst <= Real("1e-6"));
  CHECK(abs(model.g_at(Real(1) / 2) - Real("0.5318309886")) < Real("1e-8"));
  CHECK(model.conj_residual <= Real("1e-6"));
  // coboundary check: periodic sums of gamma and gamma_ell agree
  CHECK(model.coboundary_residual <= 4 * Real("1e-9"));
}

TEST_CASE("reduce_to_affine rejects nonlattice verdicts") {
  auto sys = BranchSystem::kakutani(Rat(2, 5));
  auto v = detect_lattice(sys);
  CHECK_THROWS_AS((void)reduce_to_affine(sys, v), Error);
}

TEST_CASE("profile integrals: identity conjugacy gives ratio 1 and no breakpoints") {
  auto sys = BranchSystem::dyadic();
  auto v = detect_lattice(sys);
  ReduceOptions opts;
  opts.grid_size = 512;
  auto model = reduce_to_affine(sys, v, opts);
  auto prof = lattice_profile_integrals(model, {Word{1}, Word{2}, Word{1, 2}});
  CHECK(prof.breakpoints.empty());
  // F is the constant 1 - e^{theta1} = 1/2
  CHECK(abs(prof.I - Real(Rat(1, 2))) < Real("1e-20"));
  for (const auto& [w, Iv] : prof.Iv) CHECK(abs(Iv / prof.I - 1) < Real("1e-20"));
}

TEST_CASE("profile integrals: closed forms for the g_eps family") {
  for (const char* es : {"0.05", "0.1", "0.2"}) {
    Real eps(es);
    auto sys = BranchSystem::conjugated_doubling(eps);
    auto v = detect_lattice(sys);
    auto model = reduce_to_affine(sys, v);
    auto prof = lattice_profile_integrals(model, {Word{1}});
    // a = log 2: I = (3/4)(1-e^{-a}) = 3/8, I_1 = 1 - e^{-a} = 1/2
    CHECK(abs(prof.I - Real(Rat(3, 8))) <= Real("1e-8"));
    CHECK(abs(prof.Iv[0].second - Real(Rat(1, 2))) <= Real("1e-8"));
    // the floor term splits exactly at 1/2 for eps < 1/4
    REQUIRE(prof.breakpoints.size() == 1);
    CHECK(abs(prof.breakpoints[0] - Real(Rat(1, 2))) <= Real("1e-10"));
    // theta1 = log alpha_1^l = -log 2
    CHECK(abs(prof.theta1 + log(Real(2))) < Real("1e-25"));
  }
}

TEST_CASE("profile level sets stay finite (no-atom check)") {
  auto sys = BranchSystem::conjugated_doubling(Real("0.2"));
  auto v = detect_lattice(sys);
  auto model = reduce_to_affine(sys, v);
  auto prof = lattice_profile_integrals(model, {});
  CHECK(prof.breakpoints.size() <= 4);
}

TEST_CASE("reduction psi samples rebuild the conjugacy through a psi table") {
  Real eps("0.1");
  auto sys = BranchSystem::conjugated_doubling(eps);
  auto v = detect_lattice(sys);
  ReduceOptions opts;
  opts.grid_size = 1024;
  auto model = reduce_to_affine(sys, v, opts);
  auto rebuilt = Conjugacy::from_psi(model.grid, model.psi_samples);
  auto g = Conjugacy::g_epsilon(eps);
  Real worst = 0;
  for (int j = 0; j <= 200; ++j) {
    Real x = Real(j) / 200;
    worst = std::max(worst, abs(rebuilt.g(x) - g.g(x)));
  }
  CHECK(worst < Real("1e-5"));
  auto resys = build_conjugated_system(model.affine_model(), rebuilt, Real("1e-4"));
  CHECK(validate_system(resys).ok);
}

TEST_CASE("verdict and profile JSON exports") {
  auto v = detect_lattice(BranchSystem::dyadic());
  auto text = verdict_to_json_text(v);
  CHECK(text.find("\"is_lattice\": true") != std::string::npos);
  CHECK(text.find("\"log_base\": \"1/2\"") != std::string::npos);

  auto model = reduce_to_affine(BranchSystem::dyadic(), v, ReduceOptions{256});
  auto prof = lattice_profile_integrals(model, {Word{1}});
  auto ptext = profile_to_json_text(prof);
  CHECK(ptext.find("\"I\"") != std::string::npos);
  CHECK(ptext.find("\"1\"") != std::string::npos);
}
