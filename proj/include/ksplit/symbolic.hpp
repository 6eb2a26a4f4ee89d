#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <vector>

namespace ksplit {

// Scale lambda = e^{-t}. Carries an exact rational when available so that
// closed-threshold comparisons stay exact on exact systems.
struct ScaleThreshold {
  std::optional<Rat> exact;
  Real value;

  static ScaleThreshold from_scale(const Rat& lambda) { return {lambda, Real(lambda)}; }
  static ScaleThreshold from_scale(const Real& lambda) { return {std::nullopt, lambda}; }
  static ScaleThreshold from_t(const Real& t) { return {std::nullopt, exp(-t)}; }
  Real t() const { return -log(value); }
};

// gamma on a finite word by the chord convention: -log(alpha_w / alpha_{sigma_* w}).
struct ChordPotentialValue {
  Word word;
  Real value;
  std::optional<Rat> ratio;  // alpha_w / alpha_{sigma_* w} in exact mode
};

ChordPotentialValue chord_potential(const BranchSystem& sys, const Word& w);

// S_{|w|} gamma(w) = -log alpha_w, with the exact alpha retained in exact mode.
struct BirkhoffSum {
  Real value;
  std::optional<Rat> alpha;
};

BirkhoffSum birkhoff_chord_sum(const BranchSystem& sys, const Word& w);

// pi(x): the unique point of the nested cylinder intersection, to within tol.
Real coding_point(const BranchSystem& sys, const CodedPoint& x, const Real& tol);

// {v : alpha_v >= lambda}, closed threshold, empty word included. Exact set
// under exact arithmetic. Output sorted lexicographically.
std::vector<Word> enumerate_words_by_scale(const BranchSystem& sys, const ScaleThreshold& lambda,
                                           long long max_words = 50'000'000);

}  // namespace ksplit
