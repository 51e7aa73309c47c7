#include "hwbo/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "hwbo/error.hpp"
#include "hwbo/sim_bench.hpp"

namespace fs = std::filesystem;

namespace hwbo {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, std::size_t line, const std::string& column) {
  const std::string t = trim(cell);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError("line " + std::to_string(line) + ": column '" + column + "' is not a number ('" + t + "')");
  }
  return v;
}

Json model_json(const HwLinearModel& m) {
  return Json{{"metric", to_string(m.metric)},
              {"weights", m.weights},
              {"intercept", m.intercept},
              {"has_intercept", m.has_intercept},
              {"residual_std", m.residual_std},
              {"cv_rmspe", m.rmspe}};
}

HwLinearModel model_from_json(const Json& j, Metric metric) {
  HwLinearModel m;
  m.metric = metric;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.value("intercept", 0.0);
  m.has_intercept = j.value("has_intercept", false);
  m.residual_std = j.at("residual_std").get<double>();
  m.rmspe = j.at("cv_rmspe").get<double>();
  return m;
}

}  // namespace

// ---- profiling data and model files -------------------------------------

void write_profile_csv(const std::string& path, const ProfileTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write profile '" + path + "'");
  for (const auto& n : table.structural_names) out << n << ',';
  out << "power,memory\n";
  for (const auto& s : table.samples) {
    for (auto v : s.z.values) out << v << ',';
    out << num(s.power) << ',' << num(s.memory) << '\n';
  }
  if (!out) throw DataError("failed writing profile '" + path + "'");
}

ProfileTable read_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profile '" + path + "'");
  ProfileTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (header.empty()) {
      for (auto& c : cells) header.push_back(trim(c));
      if (header.size() < 3 || header[header.size() - 2] != "power" || header.back() != "memory") {
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": header must list structural names followed by power,memory");
      }
      table.structural_names.assign(header.begin(), header.end() - 2);
      continue;
    }
    if (cells.size() != header.size()) {
      throw DataError(path + " line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns, found " + std::to_string(cells.size()));
    }
    ProfileSample s;
    try {
      for (std::size_t j = 0; j + 2 < cells.size(); ++j) {
        const double v = parse_double(cells[j], line_no, header[j]);
        if (v < 0.0 || std::floor(v) != v) {
          throw DataError("line " + std::to_string(line_no) + ": column '" + header[j] +
                          "' must be a nonnegative integer");
        }
        s.z.values.push_back(static_cast<std::int64_t>(v));
      }
      s.power = parse_double(cells[cells.size() - 2], line_no, "power");
      s.memory = parse_double(cells.back(), line_no, "memory");
      if (!(s.power > 0.0) || !(s.memory > 0.0)) {
        throw DataError("line " + std::to_string(line_no) + ": power and memory must be > 0");
      }
    } catch (const DataError& e) {
      throw DataError(path + " " + e.what());
    }
    table.samples.push_back(std::move(s));
  }
  if (header.empty()) throw DataError(path + ": empty profile");
  return table;
}

Json to_json(const HwModelFile& f) {
  return Json{{"schema", 1},
              {"structural", f.structural_names},
              {"power", model_json(f.power)},
              {"memory", model_json(f.memory)}};
}

HwModelFile model_file_from_json(const Json& j) {
  if (j.value("schema", 0) != 1) throw ModelError("model file: unsupported schema");
  HwModelFile f;
  try {
    f.structural_names = j.at("structural").get<std::vector<std::string>>();
    f.power = model_from_json(j.at("power"), Metric::Power);
    f.memory = model_from_json(j.at("memory"), Metric::Memory);
  } catch (const Json::exception& e) {
    throw ModelError(std::string("model file: ") + e.what());
  }
  if (f.power.weights.size() != f.structural_names.size() || f.memory.weights.size() != f.structural_names.size()) {
    throw ModelError("model file: weight count does not match structural names");
  }
  return f;
}

void write_model_file(const std::string& path, const HwModelFile& f) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write model file '" + path + "'");
  out << to_json(f).dump(2) << '\n';
}

HwModelFile read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  try {
    return model_file_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ModelError("model file '" + path + "': " + e.what());
  }
}

HwModelFile fit_hw_models(const ProfileTable& table, const FitHwOptions& options) {
  HwModelFile f;
  f.structural_names = table.structural_names;
  for (Metric metric : {Metric::Power, Metric::Memory}) {
    HwLinearModel model = fit_linear(table.samples, metric, options.intercept);
    Rng rng = make_rng(options.seed, {static_cast<std::uint64_t>(metric)});
    model.rmspe = cross_validate(table.samples, metric, options.folds, rng, options.intercept).rmspe;
    if (model.rmspe > kMaxAcceptedRmspe && !options.force) {
      throw ModelError(std::string(to_string(metric)) + " model CV RMSPE " + num(model.rmspe) + "% exceeds " +
                       num(kMaxAcceptedRmspe) + "% (use --force to accept)");
    }
    (metric == Metric::Power ? f.power : f.memory) = std::move(model);
  }
  return f;
}

// ---- aggregation --------------------------------------------------------

namespace {

RunSummary summarize(const RunJournal& j) {
  RunSummary s;
  s.method = j.header.method;
  s.variant = j.header.variant;
  s.seed = j.header.seed;
  s.trials = j.trials.size();
  const Budget& budget = j.header.budget;
  const auto best = best_so_far(j.trials, budget);
  std::size_t e = 0;
  for (const auto& r : j.trials) {
    s.final_clock = r.sim_time_end;
    if (!r.evaluated()) {
      ++s.skipped;
      continue;
    }
    ++s.evaluations;
    if (r.status == TrialStatus::Completed) ++s.completed;
    else ++s.early_terminated;
    const bool pv = predicted_violation(r, budget);
    const bool tv = true_violation(r, budget);
    if (pv) ++s.predicted_violations;
    if (tv) ++s.true_violations;
    if (tv && !pv) ++s.model_discrepancies;
    if (best[e] && (!s.best_error || *best[e] < *s.best_error)) {
      s.best_error = best[e];
      s.best_error_time = r.sim_time_end;
    }
    ++e;
  }
  return s;
}

// Simulated end time of the n-th evaluated trial (1-based).
std::optional<double> time_of_evaluation(const RunJournal& j, std::size_t n) {
  if (n == 0) return 0.0;
  std::size_t count = 0;
  for (const auto& r : j.trials) {
    if (r.evaluated() && ++count == n) return r.sim_time_end;
  }
  return std::nullopt;
}

// First simulated time at which the best feasible error is <= target.
std::optional<double> time_to_reach(const RunJournal& j, double target) {
  const auto best = best_so_far(j.trials, j.header.budget);
  std::size_t e = 0;
  for (const auto& r : j.trials) {
    if (!r.evaluated()) continue;
    if (best[e] && *best[e] <= target) return r.sim_time_end;
    ++e;
  }
  return std::nullopt;
}

std::optional<double> geometric_mean(const std::vector<double>& ratios) {
  if (ratios.empty()) return std::nullopt;
  double acc = 0.0;
  for (double r : ratios) acc += std::log(r);
  return std::exp(acc / static_cast<double>(ratios.size()));
}

}  // namespace

ReportBundle aggregate(const std::vector<RunJournal>& journals) {
  if (journals.empty()) throw DataError("report: no journals");
  ReportBundle b;
  b.digest = journals.front().header.digest;
  for (const auto& j : journals) {
    if (j.header.digest != b.digest) {
      throw DataError("report: journal for " + journal_file_name(j.header.method, j.header.variant, j.header.seed) +
                      " comes from a different configuration");
    }
  }
  std::vector<const RunJournal*> order;
  for (const auto& j : journals) order.push_back(&j);
  std::sort(order.begin(), order.end(), [](const RunJournal* a, const RunJournal* c) {
    return std::tuple(a->header.method, a->header.variant, a->header.seed) <
           std::tuple(c->header.method, c->header.variant, c->header.seed);
  });

  std::map<std::pair<Method, Variant>, std::vector<const RunSummary*>> groups;
  std::map<std::tuple<Method, Variant, std::uint64_t>, const RunJournal*> by_key;
  b.runs.reserve(order.size());
  for (const RunJournal* j : order) {
    const auto key = std::tuple(j->header.method, j->header.variant, j->header.seed);
    if (!by_key.emplace(key, j).second) throw DataError("report: duplicate journal for one method/variant/seed");
    b.runs.push_back(summarize(*j));

    const auto best = best_so_far(j->trials, j->header.budget);
    std::size_t e = 0, pv = 0, tv = 0;
    for (const auto& r : j->trials) {
      if (!r.evaluated()) continue;
      if (predicted_violation(r, j->header.budget)) ++pv;
      if (true_violation(r, j->header.budget)) ++tv;
      b.series.push_back(BestErrorPoint{j->header.method, j->header.variant, j->header.seed, e + 1, r.sim_time_end,
                                        best[e], pv, tv});
      ++e;
    }
  }
  for (const auto& r : b.runs) groups[{r.method, r.variant}].push_back(&r);

  for (const auto& [key, runs] : groups) {
    MethodSummary m;
    m.method = key.first;
    m.variant = key.second;
    m.runs = runs.size();
    double sum = 0.0, evals = 0.0;
    std::vector<double> values;
    for (const RunSummary* r : runs) {
      const double v = r->best_error.value_or(kWorstError);
      if (!r->best_error) ++m.runs_without_feasible;
      values.push_back(v);
      sum += v;
      evals += static_cast<double>(r->evaluations);
    }
    m.mean_best_error = sum / static_cast<double>(values.size());
    m.mean_evaluations = evals / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean_best_error) * (v - m.mean_best_error);
    m.std_best_error = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    b.methods.push_back(m);
  }

  std::map<Method, bool> seen;
  for (const auto& r : b.runs) seen[r.method] = true;
  for (const auto& [method, _] : seen) {
    const auto aware = groups.find({method, Variant::Aware});
    const auto def = groups.find({method, Variant::Default});
    if (aware == groups.end() || def == groups.end()) continue;
    MethodComparison c;
    c.method = method;
    std::vector<double> eval_speedups, best_speedups;
    double aware_evals = 0.0, default_evals = 0.0;
    std::size_t pairs = 0;
    for (const RunSummary* d : def->second) {
      const auto it = by_key.find({method, Variant::Aware, d->seed});
      if (it == by_key.end()) continue;
      const RunJournal& aj = *it->second;
      const RunJournal& dj = *by_key.at({method, Variant::Default, d->seed});
      const RunSummary as = summarize(aj);
      SeedComparison sc;
      sc.seed = d->seed;
      sc.default_evaluations = d->evaluations;
      sc.aware_evaluations = as.evaluations;
      sc.default_time = time_of_evaluation(dj, d->evaluations).value_or(0.0);
      sc.aware_time_to_default_evals = time_of_evaluation(aj, d->evaluations);
      if (sc.aware_time_to_default_evals && *sc.aware_time_to_default_evals > 0.0 && sc.default_time > 0.0) {
        eval_speedups.push_back(sc.default_time / *sc.aware_time_to_default_evals);
      }
      sc.default_best_error = d->best_error;
      sc.default_time_to_best = d->best_error_time;
      if (d->best_error) {
        sc.aware_time_to_default_best = time_to_reach(aj, *d->best_error);
        if (sc.aware_time_to_default_best && *sc.aware_time_to_default_best > 0.0 && *d->best_error_time > 0.0) {
          best_speedups.push_back(*d->best_error_time / *sc.aware_time_to_default_best);
        }
      }
      aware_evals += static_cast<double>(as.evaluations);
      default_evals += static_cast<double>(d->evaluations);
      ++pairs;
      c.seeds.push_back(sc);
    }
    if (pairs == 0) continue;
    c.evaluations_increase = default_evals > 0.0 ? aware_evals / default_evals : 0.0;
    c.speedup_to_default_evals = geometric_mean(eval_speedups);
    c.speedup_to_default_best = geometric_mean(best_speedups);
    b.comparisons.push_back(std::move(c));
  }
  return b;
}

Json to_json(const ReportBundle& b) {
  Json runs = Json::array();
  for (const auto& r : b.runs) {
    runs.push_back({{"method", to_string(r.method)},
                    {"variant", to_string(r.variant)},
                    {"seed", r.seed},
                    {"trials", r.trials},
                    {"evaluations", r.evaluations},
                    {"completed", r.completed},
                    {"early_terminated", r.early_terminated},
                    {"skipped", r.skipped},
                    {"best_error", opt_json(r.best_error)},
                    {"best_error_time", opt_json(r.best_error_time)},
                    {"predicted_violations", r.predicted_violations},
                    {"true_violations", r.true_violations},
                    {"model_discrepancies", r.model_discrepancies},
                    {"final_clock", r.final_clock}});
  }
  Json methods = Json::array();
  for (const auto& m : b.methods) {
    methods.push_back({{"method", to_string(m.method)},
                       {"variant", to_string(m.variant)},
                       {"runs", m.runs},
                       {"runs_without_feasible", m.runs_without_feasible},
                       {"mean_best_error", m.mean_best_error},
                       {"std_best_error", m.std_best_error},
                       {"mean_evaluations", m.mean_evaluations}});
  }
  Json comps = Json::array();
  for (const auto& c : b.comparisons) {
    Json seeds = Json::array();
    for (const auto& s : c.seeds) {
      seeds.push_back({{"seed", s.seed},
                       {"default_evaluations", s.default_evaluations},
                       {"aware_evaluations", s.aware_evaluations},
                       {"default_time", s.default_time},
                       {"aware_time_to_default_evals", opt_json(s.aware_time_to_default_evals)},
                       {"default_best_error", opt_json(s.default_best_error)},
                       {"default_time_to_best", opt_json(s.default_time_to_best)},
                       {"aware_time_to_default_best", opt_json(s.aware_time_to_default_best)}});
    }
    comps.push_back({{"method", to_string(c.method)},
                     {"evaluations_increase", c.evaluations_increase},
                     {"speedup_to_default_evals", opt_json(c.speedup_to_default_evals)},
                     {"speedup_to_default_best", opt_json(c.speedup_to_default_best)},
                     {"seeds", seeds}});
  }
  return Json{{"digest", b.digest}, {"runs", runs}, {"methods", methods}, {"comparisons", comps}};
}

void emit_reports(const std::vector<RunJournal>& journals, const std::string& dir) {
  const ReportBundle b = aggregate(journals);
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "best_error_vs_evals.csv", std::ios::binary | std::ios::trunc);
    out << "method,variant,seed,evaluation,best_error,predicted_violations,true_violations\n";
    for (const auto& p : b.series) {
      out << to_string(p.method) << ',' << to_string(p.variant) << ',' << p.seed << ',' << p.evaluation << ','
          << opt_num(p.best_error) << ',' << p.predicted_violations << ',' << p.true_violations << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "best_error_vs_time.csv", std::ios::binary | std::ios::trunc);
    out << "method,variant,seed,sim_time,best_error\n";
    for (const auto& p : b.series) {
      out << to_string(p.method) << ',' << to_string(p.variant) << ',' << p.seed << ',' << num(p.sim_time) << ','
          << opt_num(p.best_error) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "trials.csv", std::ios::binary | std::ios::trunc);
    out << "method,variant,seed,index,status,objective,epochs_run,predicted_power,predicted_memory,true_power,"
           "true_memory,sim_time_start,sim_time_end\n";
    std::vector<const RunJournal*> order;
    for (const auto& j : journals) order.push_back(&j);
    std::sort(order.begin(), order.end(), [](const RunJournal* a, const RunJournal* c) {
      return std::tuple(a->header.method, a->header.variant, a->header.seed) <
             std::tuple(c->header.method, c->header.variant, c->header.seed);
    });
    for (const RunJournal* j : order) {
      for (const auto& r : j->trials) {
        out << to_string(j->header.method) << ',' << to_string(j->header.variant) << ',' << j->header.seed << ','
            << r.index << ',' << to_string(r.status) << ',' << opt_num(r.objective) << ',' << r.epochs_run << ','
            << opt_num(r.predicted_power) << ',' << opt_num(r.predicted_memory) << ',' << opt_num(r.true_power)
            << ',' << opt_num(r.true_memory) << ',' << num(r.sim_time_start) << ',' << num(r.sim_time_end) << '\n';
      }
    }
  }
  std::ofstream out(fs::path(dir) / "summary.json", std::ios::binary | std::ios::trunc);
  out << to_json(b).dump(2) << '\n';
}

std::vector<RunJournal> load_journals(const std::string& dir) {
  const fs::path jdir = fs::path(dir) / "journals";
  if (!fs::is_directory(jdir)) throw DataError("no journals directory under '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(jdir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunJournal> out;
  for (const auto& f : files) out.push_back(load_journal(f.string()));
  return out;
}

// ---- experiments --------------------------------------------------------

namespace {

constexpr std::uint64_t kProfileStream = 0x70726f66696c65ULL;

struct Interrupted {};

HwModels models_for_space(const HwModelFile& f, const SearchSpace& space) {
  if (f.structural_names != space.structural_names()) {
    throw ModelError("hardware models were fitted on structural parameters that differ from the scenario's");
  }
  return HwModels{f.power, f.memory};
}

}  // namespace

HwModels experiment_models(const ExperimentConfig& config, std::uint64_t seed) {
  const SearchSpace& space = config.scenario.space;
  if (config.model_file) return models_for_space(read_model_file(*config.model_file), space);
  ProfileTable table;
  if (config.profile_file) {
    table = read_profile_csv(*config.profile_file);
  } else {
    Rng rng = make_rng(seed, {kProfileStream});
    table.structural_names = space.structural_names();
    table.samples = profile_offline(config.scenario, config.profile_samples, rng);
  }
  if (table.structural_names != space.structural_names()) {
    throw DataError("profile columns do not match the scenario's structural parameters");
  }
  HwModels models;
  models.power = fit_linear(table.samples, Metric::Power, config.fit_intercept);
  models.memory = fit_linear(table.samples, Metric::Memory, config.fit_intercept);
  return models;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  const fs::path out_dir(config.output_dir);
  const fs::path jdir = out_dir / "journals";
  fs::create_directories(jdir);
  const std::string digest = config_digest(config);
  const SimObjective objective(config.scenario);

  ExperimentResult result;
  std::vector<RunJournal> journals;
  for (Method method : config.methods) {
    for (Variant variant : config.variants) {
      for (std::uint64_t seed : config.seeds) {
        const std::string path = (jdir / journal_file_name(method, variant, seed)).string();
        result.journal_paths.push_back(path);
        JournalHeader header;
        header.digest = digest;
        header.scenario = config.scenario.name;
        header.method = method;
        header.variant = variant;
        header.seed = seed;
        header.budget = config.budget;
        header.mode = config.mode;
        header.max_evals = config.max_evals;
        header.time_budget = config.mode == RunMode::FixedTime ? config.time_budget : std::nullopt;

        std::vector<TrialRecord> prior;
        std::optional<JournalWriter> writer;
        if (options.resume && fs::exists(path)) {
          repair_journal(path);
          RunJournal existing = load_journal(path);
          if (!(existing.header == header)) {
            throw ConfigError("--resume", "journal '" + path + "' was written by a different configuration");
          }
          if (existing.complete) {
            journals.push_back(std::move(existing));
            ++result.runs_reused;
            continue;
          }
          prior = std::move(existing.trials);
          writer.emplace(JournalWriter::append_to(path));
        } else {
          writer.emplace(JournalWriter::create(path, header));
        }

        const HwModels models = experiment_models(config, seed);
        const SolverConfig sc = config.solver_config(method, variant, seed);
        std::size_t written = prior.size();
        const auto sink = [&](const TrialRecord& r) {
          if (options.interrupt_after && written >= *options.interrupt_after) throw Interrupted{};
          writer->write(r);
          ++written;
        };
        try {
          std::vector<TrialRecord> trials = run_solver(config.scenario.space, objective, models, config.budget, sc,
                                                       std::move(prior), sink);
          writer->finish(trials.size(), trials.empty() ? 0.0 : trials.back().sim_time_end);
          journals.push_back(RunJournal{header, std::move(trials), true});
          ++result.runs_computed;
        } catch (const Interrupted&) {
          ++result.runs_computed;
        }
      }
    }
  }
  if (options.interrupt_after) return result;
  result.report = aggregate(journals);
  emit_reports(journals, out_dir.string());
  return result;
}

}  // namespace hwbo
