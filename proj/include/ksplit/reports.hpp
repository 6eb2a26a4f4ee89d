#pragma once

#include "ksplit/branch_system.hpp"
#include "ksplit/numeric.hpp"
#include "ksplit/words.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ksplit {

// One experiment per run; everything deterministic (no seeds anywhere).
struct ExperimentConfig {
  BranchSystem system;
  std::string task;     // split | measure | renewal | thermo | lattice | reproduce
  std::string out_dir;
  std::string format = "csv";  // csv | json (summary is always json)

  std::optional<int> stages;
  std::optional<long long> min_left;
  std::optional<double> t;
  double t_from = 0, t_to = 0, t_step = 0;  // grid for renewal series (t_step > 0 enables)
  Word base, v;
  int depth = 8;
  int max_period = 5;
  std::string which;  // reproduce target
};

struct AssertionResult {
  std::string name;
  bool passed;
  std::string detail;
};

struct ReportBundle {
  std::string dir;
  std::vector<std::string> files;  // paths relative to dir, manifest included
  std::vector<AssertionResult> assertions;
  bool ok = true;
  std::string summary_json;
};

// Dispatches the named task, writes CSV/JSON outputs plus manifest.json with a
// content digest per file. Throws Error(GoldenMismatch) after writing when a
// golden assertion fails.
ReportBundle run_experiment(const ExperimentConfig& cfg);

// Canned experiments reproducing the worked examples, with their golden
// assertions checked internally.
ReportBundle reproduce_target(const std::string& which, const std::string& out_dir,
                             double epsilon = 0.1);

uint64_t fnv1a64(const std::string& data);

}  // namespace ksplit
