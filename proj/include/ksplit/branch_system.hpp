#pragma once

#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ksplit {

enum class Arithmetic { ExactRational, HighPrecision };
enum class SystemKind { Affine, Conjugated, Oracle };

struct SymbolSet {
  int count = 0;
  bool truncated_countable = false;  // finite head of a countable family
};

// Increasing C^1 bijection g of [0,1] used to conjugate an affine model.
class Conjugacy {
 public:
  enum class Kind { Identity, GEpsilon, PsiTable };

  static Conjugacy identity();
  // g_eps(x) = x + eps/(2*pi) * (1 - cos(2*pi*x)), eps in (0,1)
  static Conjugacy g_epsilon(const Real& eps);
  // g built from psi samples on a grid: g(t) ~ int_0^t exp(-psi) / int_0^1 exp(-psi)
  static Conjugacy from_psi(std::vector<Real> grid, std::vector<Real> psi);

  Kind kind() const { return kind_; }
  bool is_identity() const { return kind_ == Kind::Identity; }
  const Real& epsilon() const { return eps_; }

  Real g(const Real& x) const;
  Real dg(const Real& x) const;
  Real inverse(const Real& y) const;  // Newton with bisection fallback
  // certified bounds for g' on [0,1]
  Real dg_min() const { return dg_min_; }
  Real dg_max() const { return dg_max_; }

 private:
  Conjugacy() = default;
  Kind kind_ = Kind::Identity;
  Real eps_ = 0;
  // PsiTable data: nodes, psi values, normalized cumulative integral
  std::vector<Real> grid_, psi_, cum_;
  Real norm_ = 1;
  Real dg_min_ = 1, dg_max_ = 1;
};

// One custom branch given by black-box evaluators.
struct OracleBranch {
  std::function<Real(const Real&)> f;   // T_i
  std::function<Real(const Real&)> df;  // T_i'
  Real deriv_bound;                     // certified sup of T_i'
};

// The contraction family {T_i} generating the partition. Immutable after
// construction; all evaluations are const and safe to call concurrently.
class BranchSystem {
 public:
  // exact affine system from rational ratios (contiguous images from 0).
  static BranchSystem affine(std::vector<Rat> ratios, Rat tail_mass = Rat(0));
  // affine with irrational ratios (e.g. golden), high-precision mode.
  static BranchSystem affine_real(std::vector<Real> ratios, const Real& tail_mass = Real(0));
  static BranchSystem oracle(std::vector<OracleBranch> branches, const Real& c_M);

  static BranchSystem dyadic();                 // (1/2, 1/2)
  static BranchSystem kakutani(const Rat& a);   // (a, 1-a)
  static BranchSystem golden();                 // (a, a^2), a = (sqrt(5)-1)/2
  static BranchSystem conjugated_doubling(const Real& eps);

  SystemKind kind() const { return kind_; }
  Arithmetic arithmetic() const { return mode_; }
  bool exact() const { return mode_ == Arithmetic::ExactRational; }
  const SymbolSet& symbols() const { return symbols_; }
  int size() const { return symbols_.count; }
  const Real& contraction_bound() const { return c_M_; }
  const Rat& tail_mass() const { return tail_q_; }
  const Conjugacy& conjugacy() const { return conj_; }
  bool has_affine_model() const { return kind_ != SystemKind::Oracle; }
  // exact rational ratios available (also true for conjugations of exact bases)
  bool has_exact_ratios() const { return !ratio_q_.empty(); }

  // affine model accessors (affine/conjugated kinds)
  const Rat& ratio_q(int i) const { return ratio_q_[static_cast<size_t>(i - 1)]; }
  const Rat& offset_q(int i) const { return offset_q_[static_cast<size_t>(i - 1)]; }
  const Real& ratio(int i) const { return ratio_[static_cast<size_t>(i - 1)]; }
  const Real& offset(int i) const { return offset_[static_cast<size_t>(i - 1)]; }

  // T_i and T_i' at a point
  Real apply(int i, const Real& x) const;
  Real deriv(int i, const Real& x) const;
  // certified sup of T_i'
  Real branch_sup_deriv(int i) const;

  void check_symbol(int i) const;

  BranchSystem() = default;

 private:
  SymbolSet symbols_;
  SystemKind kind_ = SystemKind::Affine;
  Arithmetic mode_ = Arithmetic::ExactRational;
  std::vector<Rat> ratio_q_, offset_q_;  // empty in pure high-precision affine
  std::vector<Real> ratio_, offset_;
  Conjugacy conj_ = Conjugacy::identity();
  std::vector<OracleBranch> oracle_;
  Real c_M_ = 0;
  Rat tail_q_ = 0;
  Real tail_ = 0;

  friend BranchSystem build_conjugated_system(const BranchSystem&, const Conjugacy&, const Real&);
};

struct ValidationCheck {
  std::string name;   // Ordering | Increasing | Contracting | Covering
  bool passed;
  std::string detail;
};

struct ValidationReport {
  bool ok = false;
  Real c_M_certificate = 0;
  Real covering_defect = 0;
  std::vector<ValidationCheck> checks;
  std::vector<Errc> failures;  // GapOrOverlap / NotIncreasing / NotContracting
};

// Checks ordering, monotonicity, the derivative bound and covering (within the
// declared tail mass). Deterministic: a fixed 4096-point grid is used for
// sampled checks on nonlinear branches.
ValidationReport validate_system(const BranchSystem& sys, int grid_points = 4096);

struct CylinderRecord {
  Word word;
  Real left, right;          // endpoints of T_v[0,1]
  Real alpha;                // length
  std::optional<Rat> left_q, right_q, alpha_q;  // exact mode (affine preimage for conjugated)
  Real chord;                // chord slope of T_v over [0,1] = alpha
};

// Cylinder of a word: T_{v_1} o ... o T_{v_n} [0,1]. Leftmost symbol outermost.
CylinderRecord map_word(const BranchSystem& sys, const Word& v, int depth_limit = 4096);

// Conjugated system T_i = g o T_i^l o g^{-1}; validates the intertwining
// relation on a grid and throws ConjugacyInvalid past `tol`.
BranchSystem build_conjugated_system(const BranchSystem& base, const Conjugacy& g,
                                     const Real& tol = Real("1e-9"));

// System definition files (JSON): kind, ratios (fraction strings), conjugacy
// {kind, epsilon}, arithmetic, tail_mass.
BranchSystem load_system(const std::string& path);
BranchSystem system_from_json_text(const std::string& text);
std::string system_to_json_text(const BranchSystem& sys);

}  // namespace ksplit
