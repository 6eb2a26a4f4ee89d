// Command-line driver: split | measure | renewal | thermo | lattice | reproduce.
// Exit codes: 0 success, 1 config error, 2 golden mismatch, 3 budget exceeded.

#include "ksplit/branch_system.hpp"
#include "ksplit/reports.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace ksplit;

struct CommonArgs {
  std::string system_file;
  std::string alpha;
  double epsilon = 0;
  std::string out = "out";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--system", c.system_file, "system definition file (JSON)");
  cmd->add_option("--alpha", c.alpha,
                  "affine ratios as fractions, e.g. 2/5 (binary split) or 1/2,3/10,1/5");
  cmd->add_option("--epsilon", c.epsilon, "conjugate the affine base by g_epsilon");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

BranchSystem make_system(const CommonArgs& c) {
  BranchSystem base;
  if (!c.system_file.empty()) {
    base = load_system(c.system_file);
  } else if (!c.alpha.empty()) {
    std::vector<Rat> ratios;
    size_t pos = 0;
    while (pos <= c.alpha.size()) {
      size_t comma = c.alpha.find(',', pos);
      std::string tok =
          c.alpha.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      ratios.push_back(parse_fraction_or_throw(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (ratios.size() == 1)
      base = BranchSystem::kakutani(ratios[0]);
    else
      base = BranchSystem::affine(ratios);
  } else {
    base = BranchSystem::dyadic();
  }
  if (c.epsilon > 0) return build_conjugated_system(base, Conjugacy::g_epsilon(Real(c.epsilon)));
  return base;
}

int dispatch(const ExperimentConfig& cfg) {
  auto bundle = run_experiment(cfg);
  for (const auto& a : bundle.assertions)
    std::printf("[%s] %s: %s\n", a.passed ? "PASS" : "FAIL", a.name.c_str(), a.detail.c_str());
  std::printf("wrote %zu files to %s\n", bundle.files.size(), bundle.dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized interval-splitting, renewal counting and lattice analysis"};
  app.require_subcommand(1);

  CommonArgs c;
  ExperimentConfig cfg;
  int stages = 0;
  long long min_left = 0;
  double t = 0, t_from = 0, t_to = 0, t_step = 0;
  std::string base_str, v_str, which;

  auto* split = app.add_subcommand("split", "run the splitting procedure");
  add_common(split, c);
  split->add_option("--stages", stages, "number of stages");
  split->add_option("--min-endpoints", min_left, "run until #L reaches this");

  auto* measure = app.add_subcommand("measure", "splitting plus empirical-measure report");
  add_common(measure, c);
  measure->add_option("--stages", stages, "number of stages");
  measure->add_option("--min-endpoints", min_left, "run until #L reaches this");

  auto* renewal = app.add_subcommand("renewal", "renewal counting functions");
  add_common(renewal, c);
  renewal->add_option("--t", t, "single threshold t (lambda = e^-t)");
  renewal->add_option("--t-from", t_from, "grid start");
  renewal->add_option("--t-to", t_to, "grid end");
  renewal->add_option("--t-step", t_step, "grid step (enables the series/ratio path)");
  renewal->add_option("--base", base_str, "base word, e.g. 2,1 (default empty)");
  renewal->add_option("--v", v_str, "subtree word for N_v / cylinder ratio");

  auto* thermo = app.add_subcommand("thermo", "transfer-operator eigendata");
  add_common(thermo, c);
  thermo->add_option("--depth", cfg.depth, "cylinder depth k");

  auto* lattice = app.add_subcommand("lattice", "lattice detection and reduction");
  add_common(lattice, c);
  lattice->add_option("--max-period", cfg.max_period, "periodic-orbit period cap");

  auto* reproduce = app.add_subcommand("reproduce", "canned experiments with golden checks");
  add_common(reproduce, c);
  reproduce
      ->add_option("which", which,
                   "kakutani-2-5 | finite-3 | lattice-counterexample | nonlattice-renewal")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.out_dir = c.out;
    cfg.format = c.format;
    if (stages > 0) cfg.stages = stages;
    if (min_left > 0) cfg.min_left = min_left;
    if (t != 0) cfg.t = t;
    if (t_step > 0) {
      cfg.t_from = t_from;
      cfg.t_to = t_to;
      cfg.t_step = t_step;
    }
    if (!base_str.empty()) {
      auto w = Word::parse(base_str);
      if (!w) fail(Errc::ConfigInvalid, "bad base word '" + base_str + "'");
      cfg.base = *w;
    }
    if (!v_str.empty()) {
      auto w = Word::parse(v_str);
      if (!w) fail(Errc::ConfigInvalid, "bad word '" + v_str + "'");
      cfg.v = *w;
    }

    if (app.got_subcommand(split)) cfg.task = "split";
    if (app.got_subcommand(measure)) cfg.task = "measure";
    if (app.got_subcommand(renewal)) cfg.task = "renewal";
    if (app.got_subcommand(thermo)) cfg.task = "thermo";
    if (app.got_subcommand(lattice)) cfg.task = "lattice";
    if (app.got_subcommand(reproduce)) {
      cfg.task = "reproduce";
      cfg.which = which;
      double eps = c.epsilon > 0 ? c.epsilon : 0.1;
      auto bundle = reproduce_target(which, c.out, eps);
      for (const auto& a : bundle.assertions)
        std::printf("[%s] %s: %s\n", a.passed ? "PASS" : "FAIL", a.name.c_str(), a.detail.c_str());
      std::printf("wrote %zu files to %s\n", bundle.files.size(), bundle.dir.c_str());
      return 0;
    }

    cfg.system = make_system(c);
    // validate before running
    auto rep = validate_system(cfg.system);
    if (!rep.ok) {
      for (const auto& ch : rep.checks)
        if (!ch.passed) std::fprintf(stderr, "validation failed: %s (%s)\n", ch.name.c_str(), ch.detail.c_str());
      return 1;
    }
    return dispatch(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case Errc::GoldenMismatch: return 2;
      case Errc::BudgetExceeded:
      case Errc::PeriodBudgetExceeded: return 3;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
