#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ksplit {

// Piecewise-constant function on depth-k cylinders. values[index] where the
// index encodes the word with the first symbol most significant (symbols 1..m
// map to digits 0..m-1).
struct GridFunction {
  int depth = 0;
  std::vector<Real> values;
};

struct GibbsData {
  int depth = 0;
  Real lambda = 0;
  GridFunction h;           // normalized so that int h d(nu) = 1
  std::vector<Real> nu;     // depth-k cylinder weights, sum 1
  Real lyapunov = 0;        // int gamma d(mu_{-gamma})
  Real eig_residual = 0;    // ||L h - lambda h||_inf
  Real dual_residual = 0;
  int iterations = 0;
  bool exact_affine = false;  // algebraic eigendata verified in exact arithmetic
};

// Leading eigendata of the depth-k discretized transfer operator
// (L u)(x) = sum_{y: sigma y = x} e^{-gamma(y)} u(y), gamma by chords on
// (k+1)-cylinders. Default tolerance: 1e-10 for exact-affine systems, 1e-6
// otherwise (power iteration on sup-norm increments).
GibbsData leading_eigendata(const BranchSystem& sys, int depth, int max_iters = 100000,
                            std::optional<Real> tol = std::nullopt);

// int gamma d(mu) from converged eigendata (also stored in GibbsData).
Real lyapunov_integral(const GibbsData& g, const BranchSystem& sys);

// h_* on finite words: seeded at `depth` from h at depth-k prefixes, then
// back-filled through h_*(x) = sum_i e^{-gamma(ix)} h_*(ix).
struct HStarTable {
  int seed_depth = 0;
  std::vector<std::vector<Real>> levels;  // levels[d][word index], d = 0..seed_depth
  Real max_residual = 0;                  // of the defining relation at the seed depth

  const Real& at(const Word& w) const;
  Real at_empty() const { return levels[0][0]; }
};

HStarTable hstar_extend(const BranchSystem& sys, const GibbsData& g, int depth);

// {lambda, lyapunov, depth, h: [...], nu: [...]}; fraction strings in exact mode.
std::string gibbs_to_json_text(const GibbsData& g, const BranchSystem& sys);

// word <-> dense index helpers for depth-d tables
long word_index(const Word& w, int m);
Word word_from_index(long idx, int depth, int m);

}  // namespace ksplit
