// Command-line front end: profile, fit-hw, run, report.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "hwbo/config.hpp"
#include "hwbo/error.hpp"
#include "hwbo/harness.hpp"
#include "hwbo/sim_bench.hpp"

namespace {

using namespace hwbo;

void print_summary(const ReportBundle& b) {
  std::printf("%-10s %-8s %5s %12s %10s %10s\n", "method", "variant", "runs", "mean_best", "std", "mean_evals");
  for (const auto& m : b.methods) {
    std::printf("%-10s %-8s %5zu %12.5f %10.5f %10.2f\n", to_string(m.method), to_string(m.variant), m.runs,
                m.mean_best_error, m.std_best_error, m.mean_evaluations);
  }
  for (const auto& c : b.comparisons) {
    std::printf("%s: evaluations x%.2f", to_string(c.method), c.evaluations_increase);
    if (c.speedup_to_default_evals) std::printf(", time-to-default-evals speedup x%.2f", *c.speedup_to_default_evals);
    if (c.speedup_to_default_best) std::printf(", time-to-default-best speedup x%.2f", *c.speedup_to_default_best);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power- and memory-constrained hyper-parameter optimization"};
  app.require_subcommand(1);

  std::string config_path, out, profile_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  bool resume = false, real_clock = false, force = false, intercept = false;
  std::size_t folds = 10;

  auto* profile = app.add_subcommand("profile", "Write a simulated profiling dataset for the scenario");
  profile->add_option("--config", config_path, "Experiment config file")->required();
  profile->add_option("--seed", seed, "Profiling seed (default: first seed in the config)");
  profile->add_option("--samples", samples, "Number of profiled designs (default: profile.samples)");
  profile->add_option("--out", out, "Output CSV path")->required();

  auto* fit = app.add_subcommand("fit-hw", "Fit power and memory models from a profiling dataset");
  fit->add_option("profile", profile_path, "Profiling CSV")->required();
  fit->add_option("--out", out, "Output model file")->required();
  fit->add_option("--seed", seed, "Cross-validation shuffle seed");
  fit->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  fit->add_flag("--intercept", intercept, "Fit an intercept term");
  fit->add_flag("--force", force, "Write the models even if CV RMSPE exceeds 10%");

  auto* run = app.add_subcommand("run", "Run every method/variant/seed of an experiment");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out, "Output directory (overrides the config)");
  run->add_flag("--resume", resume, "Continue interrupted journals and reuse finished ones");
  run->add_flag("--real-clock", real_clock, "Charge host wall-clock time instead of simulated cost");

  auto* report = app.add_subcommand("report", "Aggregate journals into series files and a summary");
  report->add_option("--out", out, "Experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*profile) {
      const ExperimentConfig config = load_config(config_path);
      const std::uint64_t s = seed.value_or(config.seeds.front());
      Rng rng = make_rng(s, {0x70726f66696c65ULL});
      ProfileTable table;
      table.structural_names = config.scenario.space.structural_names();
      table.samples = profile_offline(config.scenario, samples.value_or(config.profile_samples), rng);
      write_profile_csv(out, table);
      std::printf("wrote %zu samples to %s\n", table.samples.size(), out.c_str());
    } else if (*fit) {
      const ProfileTable table = read_profile_csv(profile_path);
      FitHwOptions options;
      options.folds = folds;
      options.seed = seed.value_or(0);
      options.intercept = intercept;
      options.force = force;
      const HwModelFile models = fit_hw_models(table, options);
      write_model_file(out, models);
      std::printf("power  CV RMSPE %.3f%%\nmemory CV RMSPE %.3f%%\n", models.power.rmspe, models.memory.rmspe);
      if (models.power.rmspe > kMaxAcceptedRmspe || models.memory.rmspe > kMaxAcceptedRmspe) {
        std::fprintf(stderr, "warning: CV RMSPE above %.0f%%, models written because of --force\n",
                     kMaxAcceptedRmspe);
      }
    } else if (*run) {
      ExperimentConfig config = load_config(config_path);
      if (seed) config.seeds = {*seed};
      if (!out.empty()) config.output_dir = out;
      if (real_clock) config.real_clock = true;
      ExperimentOptions options;
      options.resume = resume;
      const ExperimentResult result = run_experiment(config, options);
      std::printf("%zu runs computed, %zu reused; journals in %s/journals\n", result.runs_computed,
                  result.runs_reused, config.output_dir.c_str());
      print_summary(result.report);
    } else if (*report) {
      const auto journals = load_journals(out);
      emit_reports(journals, out);
      print_summary(aggregate(journals));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
