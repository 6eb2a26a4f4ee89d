#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/symbolic.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ksplit {

// Base point of a renewal query: a finite word or an eventually periodic
// sequence. For coded points Birkhoff sums run through the derivative chain
// at pi(x).
class RenewalBase {
 public:
  RenewalBase() : v_(Word{}) {}
  RenewalBase(Word w) : v_(std::move(w)) {}
  RenewalBase(CodedPoint x) : v_(std::move(x)) {}
  static RenewalBase empty() { return RenewalBase(Word{}); }

  bool is_word() const { return std::holds_alternative<Word>(v_); }
  const Word& word() const { return std::get<Word>(v_); }
  const CodedPoint& coded() const { return std::get<CodedPoint>(v_); }
  std::string str() const;

 private:
  std::variant<Word, CodedPoint> v_;
};

struct CountBudget {
  long long max_nodes = 100'000'000;
};

struct RenewalQuery {
  RenewalBase base;
  ScaleThreshold threshold;  // lambda = e^{-t}
  Word subtree;              // nonempty: the N_v variant

  static RenewalQuery n_star(RenewalBase b, ScaleThreshold thr) { return {std::move(b), thr, Word{}}; }
  static RenewalQuery n_subtree(Word v, RenewalBase b, ScaleThreshold thr) {
    return {std::move(b), thr, std::move(v)};
  }
};

// N_*(t, x) = #{u (incl. empty) : alpha_{u+x} >= alpha_x e^{-t}}; the empty
// word contributes exactly the indicator 1{0 <= t}. The N_v variant counts
// #{u : alpha_{v+u+x} >= alpha_{v+x} e^{-t}} (twisted potential gamma_v in
// its cylinder-count form).
long long renewal_count(const BranchSystem& sys, const RenewalQuery& q, CountBudget budget = {});

// N_v through the twisted potential gamma_v = gamma + log(phi_v o sigma) - log(phi_v)
// evaluated sum-by-sum; kept as a cross-check of the cylinder-count form.
long long subtree_count_via_potential(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                      const ScaleThreshold& thr, int max_depth, CountBudget budget = {});

// counts[j] = #{u : alpha_{v+u+base} >= thr[j]} for descending absolute thresholds
std::vector<long long> scale_counts(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                    const std::vector<Rat>& thr_desc, CountBudget budget = {});
std::vector<long long> scale_counts(const BranchSystem& sys, const Word& v, const RenewalBase& base,
                                    const std::vector<Real>& thr_desc, CountBudget budget = {});

struct RenewalSeriesPoint {
  Real t;
  long long count = 0;
  Real scaled;  // e^{-t} * count
};

struct RenewalSeries {
  std::vector<RenewalSeriesPoint> points;
  int window = 0;        // trailing points used for the fit
  Real fitted_limit = 0; // mean of the window
  Real band_lo = 0, band_hi = 0;
};

RenewalSeries renewal_asymptotic_series(const BranchSystem& sys, const RenewalBase& base,
                                        const std::vector<Real>& t_grid, CountBudget budget = {});

struct RatioPoint {
  Real t;
  long long numerator = 0, denominator = 0;
  std::optional<Real> ratio;  // empty when the denominator vanishes (point skipped)
};

// (N_v(t + log alpha_v, empty) - N_v(t + log alpha_{v1}, 1)) /
// (N(t, empty) - N(t + log alpha_1, 1)) over the grid; for lattice systems
// pass t_j = a*j.
std::vector<RatioPoint> cylinder_ratio(const BranchSystem& sys, const Word& v,
                                       const std::vector<Real>& t_grid, CountBudget budget = {});

// CSV body: t,count,scaled,variant,base,v,residue_mod_a (residue blank unless
// a lattice span is supplied).
std::string renewal_csv(const RenewalSeries& series, const std::string& variant,
                        const std::string& base, const std::string& v,
                        std::optional<Real> lattice_a = std::nullopt);

}  // namespace ksplit
