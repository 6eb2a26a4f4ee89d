#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ksplit {

struct PeriodicEvidence {
  Word word;
  Real sum;        // Birkhoff sum of gamma over one period, at the periodic point
  long multiple;   // nearest integer sum/a under the verdict
  Real residual;   // |sum - multiple*a|
};

struct LatticeVerdict {
  bool is_lattice = false;
  Real a = 0;                        // span; gamma-periodic sums lie in a*Z
  std::optional<Rat> log_base;       // rho with a = -log(rho), when certified exactly
  bool exact_certificate = false;    // multiplicative (in)dependence proven on rational ratios
  std::vector<PeriodicEvidence> evidence;
  Real tol = 0;
  long long denominator_cap = 0;
  int max_period = 0;
  std::string note;
};

// Operational lattice test: Birkhoff sums over all periodic words of period
// <= p, integer-relation detection through continued-fraction convergents of
// pairwise ratios (accepted when |q*r - p| <= tol with q <= cap).
LatticeVerdict detect_lattice(const BranchSystem& sys, int max_period = 5,
                              const Real& tol = Real("1e-9"), long long denominator_cap = 1'000'000);

struct ReduceOptions {
  int grid_size = 4096;   // uniform psi/g sample grid
  Real tol = Real("1e-9");
  int min_depth = 1;      // force the zeta estimation depth upward (testing hook)
  int max_depth = 8;
  int validate_extra = 2; // periodic-sum validation runs to depth M + this
};

// Constructive reduction of a lattice system to its affine model: gamma_ell on
// 1-cylinders via rounded periodic data and the Phi-reduction, psi from the
// cohomology residual along orbits, g by the normalized integral of exp(-psi).
struct CohomologyData {
  Real a = 0;
  std::optional<Rat> log_base;
  int depth_M = 1;
  std::vector<long> gamma_ell_multiples;       // gamma_ell([i]) = n_i * a
  std::vector<Real> alpha_ell;                 // exp(-n_i * a)
  std::vector<Rat> alpha_ell_q;                // exact when certified
  bool alpha_exact = false;
  std::vector<std::vector<long>> phi_tables;   // Phi from each reduction step (M-1 down to 1)
  std::vector<Real> grid, psi_samples, g_samples;
  Real psi_norm = 1;                           // int_0^1 exp(-psi)
  Real sum_defect = 0;                         // |1 - sum alpha_ell|
  Real conj_residual = 0;                      // max |T_i(g(x)) - g(T_i^l(x))| on the grid
  Real coboundary_residual = 0;                // periodic sums of gamma vs gamma_ell
  BranchSystem source;

  BranchSystem affine_model() const;
  // exact evaluator of psi at any t (affine coding + derivative chain)
  Real psi_at(const Real& t) const;
  Real gprime_at(const Real& t) const { return exp(-psi_at(t)) / psi_norm; }
  Real g_at(const Real& t) const;  // interpolated from samples
};

CohomologyData reduce_to_affine(const BranchSystem& sys, const LatticeVerdict& verdict,
                                const ReduceOptions& opts = {});

// Lattice profile integrals: theta_1 = log alpha_1^l,
// F(t) = g'(t) e^{-a {log g'(t)/a}} (1 - e^{theta_1}), I = int F dLeb,
// I_v = int F o T_v^l dLeb. Quadrature splits at the discontinuities of
// floor(log g'(t) / a), located by bisection.
struct ProfileIntegrals {
  Real a = 0, theta1 = 0, I = 0;
  std::vector<std::pair<Word, Real>> Iv;
  std::vector<Real> breakpoints;  // interior discontinuities in (0,1)
  Real err_I = 0;
  std::vector<Real> err_Iv;
};

struct ProfileOptions {
  int quad_points = 32;       // Gauss-Legendre nodes per smooth piece
  int scan_points = 4096;     // crossing scan resolution
  Real bisect_tol = Real("1e-12");
};

ProfileIntegrals lattice_profile_integrals(const CohomologyData& model, const std::vector<Word>& vs,
                                           const ProfileOptions& opts = {});

// Birkhoff sum of gamma over one period of word w, evaluated at the periodic
// point (chord/chain values): -log (T_w)'(fix T_w).
Real periodic_birkhoff_sum(const BranchSystem& sys, const Word& w);

std::string verdict_to_json_text(const LatticeVerdict& v);
std::string profile_to_json_text(const ProfileIntegrals& p);

}  // namespace ksplit
