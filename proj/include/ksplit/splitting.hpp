#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ksplit {

struct SplitStop {
  std::optional<int> stages;
  std::optional<long long> min_left;  // run until #L >= this
};

struct SplitOptions {
  long long max_intervals = 20'000'000;
  bool stage_discrepancy = true;  // compute D*(L_n) per stage for the summary
};

struct EndpointRecord {
  Real value;
  std::optional<Rat> value_q;
  int first_stage;  // 0 for the initial endpoints {0,1}
  bool in_left;     // member of L_n
};

struct StageSummary {
  int stage;
  Real max_length;
  std::optional<Rat> max_length_q;
  long long intervals_split;
  long long endpoint_count;  // #E_hat after the stage
  long long left_count;      // #L after the stage
  double dstar_left;         // D*(L_n), NaN if not computed
};

struct PartitionState {
  int stage = 0;
  std::vector<CylinderRecord> intervals;  // sorted by position, tile [0,1]
};

struct SplitLedger {
  std::vector<EndpointRecord> endpoints;  // sorted (E_hat at the final stage)
  std::vector<Word> split_words;          // words whose cylinders were split
  std::vector<StageSummary> stages;

  std::vector<Real> left_points() const;
  std::vector<Rat> left_points_q() const;  // exact mode only
  std::vector<Real> all_points() const;
  std::vector<Rat> all_points_q() const;
  long long left_count() const;
};

struct SplitResult {
  PartitionState partition;
  SplitLedger ledger;
};

// The generalized splitting procedure: at each stage every interval tied at
// the maximal length (exact tie in exact mode, 1e-12 relative in float mode)
// is replaced by its children under all branches.
//
// Boundary convention: L_n collects the left endpoints of intervals split at
// stages 1..n, i.e. a point enters L during the stage that splits its
// interval. L is a set; a point split repeatedly (0, for instance) counts once.
SplitResult run_splitting(const BranchSystem& sys, const SplitStop& stop,
                          const SplitOptions& opts = {});

enum class MeasureSet { All, Left };

// (#points in the closed interval [lo,hi]) / (#points)
Rat empirical_measure_exact(const SplitLedger& ledger, MeasureSet which, const Rat& lo, const Rat& hi);
Real empirical_measure(const SplitLedger& ledger, MeasureSet which, const Real& lo, const Real& hi);

// Exact star discrepancy of a finite point set (points need not be sorted).
Rat star_discrepancy_exact(std::vector<Rat> points);
Real star_discrepancy(std::vector<Real> points);

// CSV bodies (deterministic, no timestamps).
// endpoints: value_exact,value_float,first_stage_seen,set_membership
std::string endpoints_csv(const SplitLedger& ledger);
// stages: stage,max_length,intervals_split,endpoints,left_count,dstar_left
std::string stage_summary_csv(const SplitLedger& ledger);

}  // namespace ksplit
