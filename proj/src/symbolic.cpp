#include "ksplit/symbolic.hpp"

#include "walkers.hpp"

#include <algorithm>
#include <cmath>

namespace ksplit {

ChordPotentialValue chord_potential(const BranchSystem& sys, const Word& w) {
  if (w.empty()) fail(Errc::EmptyWord, "chord potential needs |w| >= 1");
  ChordPotentialValue out;
  out.word = w;
  if (sys.exact()) {
    Rat aw = *map_word(sys, w).alpha_q;
    Rat at = *map_word(sys, w.shifted()).alpha_q;
    out.ratio = aw / at;
    out.value = -log(Real(*out.ratio));
  } else {
    Real aw = map_word(sys, w).alpha;
    Real at = map_word(sys, w.shifted()).alpha;
    out.value = -(log(aw) - log(at));
  }
  return out;
}

BirkhoffSum birkhoff_chord_sum(const BranchSystem& sys, const Word& w) {
  if (w.empty()) fail(Errc::EmptyWord, "Birkhoff sum needs |w| >= 1");
  BirkhoffSum out;
  auto rec = map_word(sys, w);
  if (rec.alpha_q) {
    out.alpha = rec.alpha_q;
    out.value = -log(Real(*rec.alpha_q));
  } else {
    out.value = -log(rec.alpha);
  }
  return out;
}

Real coding_point(const BranchSystem& sys, const CodedPoint& x, const Real& tol) {
  if (!(tol > 0)) fail(Errc::ConfigInvalid, "coding_point tolerance must be positive");
  // depth at which every cylinder is shorter than tol, from the c_M certificate
  Real cm = sys.contraction_bound();
  if (!(cm > 0 && cm < 1)) fail(Errc::NoConvergence, "system has no valid contraction bound");
  double need = to_double(log(tol) / log(cm));
  if (!(need < 2'000'000)) fail(Errc::NoConvergence, "tolerance unreachable within depth limit");
  int depth = std::max(1, static_cast<int>(std::ceil(need)) + 1);
  // backward evaluation through the first `depth` symbols
  Real z = Real(1) / 2;
  for (int j = depth - 1; j >= 0; --j) z = sys.apply(x.symbol_at(j), z);
  return z;
}

std::vector<Word> enumerate_words_by_scale(const BranchSystem& sys, const ScaleThreshold& lambda,
                                           long long max_words) {
  if (!(lambda.value > 0 && lambda.value <= 1))
    fail(Errc::ConfigInvalid, "scale must lie in (0, 1]");
  std::vector<Word> out;
  Word empty;
  if (sys.exact() && lambda.exact) {
    detail::ExactPolicy pol(sys, empty);
    detail::enumerate_by_scale(pol, empty, *lambda.exact, max_words, out);
  } else if (sys.has_affine_model()) {
    detail::RealAffinePolicy pol(sys, empty);
    detail::enumerate_by_scale(pol, empty, lambda.value, max_words, out);
  } else {
    detail::OraclePolicy pol(sys, empty);
    detail::enumerate_by_scale(pol, empty, lambda.value, max_words, out);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ksplit
