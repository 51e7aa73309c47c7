#include "hwbo/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hwbo/error.hpp"

namespace hwbo {

const char* to_string(RunMode m) { return m == RunMode::FixedEvals ? "fixed-evals" : "fixed-time"; }

const char* to_string(Variant v) { return v == Variant::Aware ? "aware" : "default"; }

Variant variant_from_string(const std::string& s) {
  if (s == "aware") return Variant::Aware;
  if (s == "default") return Variant::Default;
  throw DomainError("unknown variant '" + s + "'");
}

SolverConfig ExperimentConfig::solver_config(Method method, Variant variant, std::uint64_t seed) const {
  SolverConfig sc;
  sc.method = method;
  if (mode == RunMode::FixedEvals) {
    sc.max_evals = max_evals;
  } else {
    sc.time_budget = time_budget;
    sc.max_evals = max_evals;
  }
  sc.walk_sigma = walk_sigma;
  sc.early_term = early_term;
  sc.gating = variant == Variant::Aware && gating;
  sc.early_termination = variant == Variant::Aware && early_termination;
  sc.seed = seed;
  sc.candidate_count = candidate_count;
  if (variant == Variant::Aware) {
    if (auto it = acquisition.find(method); it != acquisition.end()) sc.acquisition = it->second;
  }
  sc.real_clock = real_clock;
  return sc;
}

namespace {

template <typename T, typename F>
T field(const Json& doc, const std::string& name, F&& convert) {
  try {
    return convert(doc.at(name));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(name, e.what());
  }
}

template <typename T>
void read_opt(const Json& doc, const std::string& name, T& out) {
  if (!doc.contains(name)) return;
  try {
    out = doc.at(name).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError(name, e.what());
  }
}

Json budget_json(const Budget& b) {
  Json j = Json::object();
  j["power"] = b.power ? Json(*b.power) : Json(nullptr);
  j["memory"] = b.memory ? Json(*b.memory) : Json(nullptr);
  return j;
}

Budget budget_from_json(const Json& j, const std::string& where) {
  Budget b;
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  if (j.contains("power") && !j["power"].is_null()) b.power = j["power"].get<double>();
  if (j.contains("memory") && !j["memory"].is_null()) b.memory = j["memory"].get<double>();
  try {
    b.validate();
  } catch (const DomainError& e) {
    throw ConfigError(where, e.what());
  }
  return b;
}

}  // namespace

Json to_json(const SimScenario& s) {
  Json params = Json::array();
  for (const auto& p : s.space.params()) {
    params.push_back({{"name", p.name},
                      {"kind", to_string(p.kind)},
                      {"lower", p.lower},
                      {"upper", p.upper},
                      {"structural", p.structural},
                      {"grid_levels", p.grid_levels}});
  }
  return Json{{"name", s.name},
              {"params", params},
              {"true_power_weights", s.true_power_weights},
              {"true_memory_weights", s.true_memory_weights},
              {"power_noise", s.power_noise},
              {"memory_noise", s.memory_noise},
              {"base_error", s.base_error},
              {"sensitivity", s.sensitivity},
              {"optimum", s.optimum},
              {"lr_param", s.lr_param},
              {"lr_crit_base", s.lr_crit_base},
              {"coupling", s.coupling},
              {"fixed_cost", s.fixed_cost},
              {"unit_cost", s.unit_cost},
              {"total_epochs", s.total_epochs},
              {"num_classes", s.num_classes},
              {"tau", s.tau},
              {"jitter", s.jitter},
              {"budget", budget_json(s.budget)},
              {"default_evals", s.default_evals},
              {"default_time_budget", s.default_time_budget}};
}

SimScenario scenario_from_json(const Json& doc, SimScenario s) {
  if (!doc.is_object()) throw ConfigError("scenario", "expected a name or an object");
  try {
    if (doc.contains("params")) {
      std::vector<ParamSpec> params;
      for (const auto& pj : doc.at("params")) {
        ParamSpec p;
        p.name = pj.at("name").get<std::string>();
        p.kind = param_kind_from_string(pj.at("kind").get<std::string>());
        p.lower = pj.at("lower").get<double>();
        p.upper = pj.at("upper").get<double>();
        p.structural = pj.value("structural", false);
        p.grid_levels = pj.value("grid_levels", 0);
        params.push_back(std::move(p));
      }
      s.space = SearchSpace(std::move(params));
    }
    read_opt(doc, "name", s.name);
    read_opt(doc, "true_power_weights", s.true_power_weights);
    read_opt(doc, "true_memory_weights", s.true_memory_weights);
    read_opt(doc, "power_noise", s.power_noise);
    read_opt(doc, "memory_noise", s.memory_noise);
    read_opt(doc, "base_error", s.base_error);
    read_opt(doc, "sensitivity", s.sensitivity);
    read_opt(doc, "optimum", s.optimum);
    read_opt(doc, "lr_param", s.lr_param);
    read_opt(doc, "lr_crit_base", s.lr_crit_base);
    read_opt(doc, "coupling", s.coupling);
    read_opt(doc, "fixed_cost", s.fixed_cost);
    read_opt(doc, "unit_cost", s.unit_cost);
    read_opt(doc, "total_epochs", s.total_epochs);
    read_opt(doc, "num_classes", s.num_classes);
    read_opt(doc, "tau", s.tau);
    read_opt(doc, "jitter", s.jitter);
    read_opt(doc, "default_evals", s.default_evals);
    read_opt(doc, "default_time_budget", s.default_time_budget);
    if (doc.contains("budget")) s.budget = budget_from_json(doc.at("budget"), "scenario.budget");
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("scenario", e.what());
  }
  return s;
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be an object");
  ExperimentConfig c;

  if (!doc.contains("scenario")) throw ConfigError("scenario", "missing");
  const Json& sj = doc.at("scenario");
  try {
    if (sj.is_string()) {
      c.scenario = scenario_by_name(sj.get<std::string>());
    } else {
      SimScenario base;
      if (sj.contains("extends")) base = scenario_by_name(sj.at("extends").get<std::string>());
      c.scenario = scenario_from_json(sj, std::move(base));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("scenario", e.what());
  }

  c.methods = field<std::vector<Method>>(doc, "methods", [](const Json& j) {
    std::vector<Method> out;
    for (const auto& m : j) out.push_back(method_from_string(m.get<std::string>()));
    return out;
  });
  if (c.methods.empty()) throw ConfigError("methods", "must not be empty");
  c.seeds = field<std::vector<std::uint64_t>>(doc, "seeds", [](const Json& j) { return j.get<std::vector<std::uint64_t>>(); });
  if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (doc.contains("variants")) {
    c.variants = field<std::vector<Variant>>(doc, "variants", [](const Json& j) {
      std::vector<Variant> out;
      for (const auto& v : j) out.push_back(variant_from_string(v.get<std::string>()));
      return out;
    });
    if (c.variants.empty()) throw ConfigError("variants", "must not be empty");
  }

  c.budget = doc.contains("budget") ? budget_from_json(doc.at("budget"), "budget") : c.scenario.budget;

  const std::string mode = doc.value("mode", std::string("fixed-evals"));
  if (mode == "fixed-evals") c.mode = RunMode::FixedEvals;
  else if (mode == "fixed-time") c.mode = RunMode::FixedTime;
  else throw ConfigError("mode", "expected fixed-evals or fixed-time, got '" + mode + "'");

  if (doc.contains("max_evals")) {
    c.max_evals = field<std::size_t>(doc, "max_evals", [](const Json& j) { return j.get<std::size_t>(); });
    if (*c.max_evals < 1) throw ConfigError("max_evals", "must be >= 1");
  }
  if (doc.contains("time_budget")) {
    c.time_budget = field<double>(doc, "time_budget", [](const Json& j) { return j.get<double>(); });
    if (!(*c.time_budget > 0.0)) throw ConfigError("time_budget", "must be > 0");
  }
  if (c.mode == RunMode::FixedEvals && !c.max_evals) c.max_evals = c.scenario.default_evals;
  if (c.mode == RunMode::FixedTime && !c.time_budget) c.time_budget = c.scenario.default_time_budget;

  read_opt(doc, "gating", c.gating);
  read_opt(doc, "early_termination", c.early_termination);
  if (doc.contains("acquisition")) {
    const Json& aj = doc.at("acquisition");
    if (!aj.is_object()) throw ConfigError("acquisition", "expected an object keyed by method");
    for (auto it = aj.begin(); it != aj.end(); ++it) {
      try {
        const Method m = method_from_string(it.key());
        if (!is_bayesian(m)) throw DomainError("only hw-cwei and hw-ieci take an acquisition");
        c.acquisition[m] = acquisition_kind_from_string(it.value().get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError("acquisition." + it.key(), e.what());
      }
    }
  }
  read_opt(doc, "candidate_count", c.candidate_count);
  if (c.candidate_count < 1) throw ConfigError("candidate_count", "must be >= 1");
  read_opt(doc, "walk_sigma", c.walk_sigma);
  if (!(c.walk_sigma > 0.0 && c.walk_sigma <= 1.0)) throw ConfigError("walk_sigma", "must lie in (0,1]");
  if (doc.contains("early_term")) {
    const Json& ej = doc.at("early_term");
    read_opt(ej, "probe_epochs", c.early_term.probe_epochs);
    read_opt(ej, "accuracy_floor", c.early_term.accuracy_floor);
    read_opt(ej, "penalty_error", c.early_term.penalty_error);
    try {
      c.early_term.validate();
      if (c.early_term.probe_epochs >= c.scenario.total_epochs) {
        throw DomainError("probe_epochs must be below the scenario's total epochs");
      }
    } catch (const DomainError& e) {
      throw ConfigError("early_term", e.what());
    }
  }
  if (doc.contains("profile")) {
    const Json& pj = doc.at("profile");
    read_opt(pj, "samples", c.profile_samples);
    if (pj.contains("file")) c.profile_file = pj.at("file").get<std::string>();
    read_opt(pj, "intercept", c.fit_intercept);
  }
  if (doc.contains("model_file")) c.model_file = doc.at("model_file").get<std::string>();
  if (c.profile_samples < c.scenario.space.structural_count()) {
    throw ConfigError("profile.samples", "fewer samples than structural parameters");
  }
  read_opt(doc, "output", c.output_dir);
  read_opt(doc, "real_clock", c.real_clock);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str(), nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
  return parse_config(doc);
}

Json canonical_json(const ExperimentConfig& c) {
  // Effective choice per Bayesian method, so restating a default leaves the digest unchanged.
  Json acq = Json::object();
  for (Method m : {Method::HwCwei, Method::HwIeci}) {
    acq[to_string(m)] = to_string(c.solver_config(m, Variant::Aware, 0).effective_acquisition());
  }
  Json j{{"scenario", to_json(c.scenario)},
         {"budget", budget_json(c.budget)},
         {"mode", to_string(c.mode)},
         {"max_evals", c.max_evals ? Json(*c.max_evals) : Json(nullptr)},
         {"time_budget", c.time_budget ? Json(*c.time_budget) : Json(nullptr)},
         {"gating", c.gating},
         {"early_termination", c.early_termination},
         {"acquisition", acq},
         {"candidate_count", c.candidate_count},
         {"walk_sigma", c.walk_sigma},
         {"early_term",
          {{"probe_epochs", c.early_term.probe_epochs},
           {"accuracy_floor", c.early_term.accuracy_floor},
           {"penalty_error", c.early_term.penalty_error}}},
         {"profile_samples", c.profile_samples},
         {"profile_file", c.profile_file ? Json(*c.profile_file) : Json(nullptr)},
         {"model_file", c.model_file ? Json(*c.model_file) : Json(nullptr)},
         {"fit_intercept", c.fit_intercept},
         {"real_clock", c.real_clock}};
  return j;
}

std::string config_digest(const ExperimentConfig& c) {
  const std::string text = canonical_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hwbo
