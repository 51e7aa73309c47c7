// Python bindings. Design points cross the boundary as plain lists of floats,
// matrices as numpy arrays, and reports as JSON text decoded on the Python side.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hwbo/acquisition.hpp"
#include "hwbo/config.hpp"
#include "hwbo/error.hpp"
#include "hwbo/gp.hpp"
#include "hwbo/harness.hpp"
#include "hwbo/hw_models.hpp"
#include "hwbo/search_space.hpp"
#include "hwbo/sim_bench.hpp"
#include "hwbo/solvers.hpp"

namespace py = pybind11;
using namespace hwbo;

namespace {

DesignPoint point(std::vector<double> v) { return DesignPoint{std::move(v)}; }
StructuralVector structural(std::vector<std::int64_t> v) { return StructuralVector{std::move(v)}; }

AcquisitionContext context(const SearchSpace& space, const GaussianProcess& gp, const HwModels& models,
                           const Budget& budget, double incumbent) {
  AcquisitionContext ctx;
  ctx.space = &space;
  ctx.gp = &gp;
  ctx.models = &models;
  ctx.budget = budget;
  ctx.incumbent = incumbent;
  return ctx;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Power- and memory-constrained hyper-parameter optimization (C++ core)";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<DataError> data(m, "DataError", base.ptr());
  static py::exception<ModelError> model(m, "ModelError", base.ptr());
  static py::exception<FitError> fit(m, "FitError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      domain(e.what());
    } catch (const ConfigError& e) {
      config(e.what());
    } catch (const DataError& e) {
      data(e.what());
    } catch (const ModelError& e) {
      model(e.what());
    } catch (const FitError& e) {
      fit(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  // Search space.
  py::enum_<ParamKind>(m, "ParamKind")
      .value("INTEGER", ParamKind::Integer)
      .value("CONTINUOUS", ParamKind::Continuous)
      .value("LOG_CONTINUOUS", ParamKind::LogContinuous);

  py::class_<ParamSpec>(m, "ParamSpec")
      .def(py::init([](std::string name, ParamKind kind, double lower, double upper, bool structural, int levels) {
             return ParamSpec{std::move(name), kind, lower, upper, structural, levels};
           }),
           py::arg("name"), py::arg("kind"), py::arg("lower"), py::arg("upper"), py::arg("structural") = false,
           py::arg("grid_levels") = 0)
      .def_readonly("name", &ParamSpec::name)
      .def_readonly("kind", &ParamSpec::kind)
      .def_readonly("lower", &ParamSpec::lower)
      .def_readonly("upper", &ParamSpec::upper)
      .def_readonly("structural", &ParamSpec::structural)
      .def_readonly("grid_levels", &ParamSpec::grid_levels);

  py::class_<SearchSpace>(m, "SearchSpace")
      .def(py::init<std::vector<ParamSpec>>())
      .def_property_readonly("params", &SearchSpace::params)
      .def("__len__", &SearchSpace::size)
      .def_property_readonly("structural_names", &SearchSpace::structural_names)
      .def("contains", [](const SearchSpace& s, std::vector<double> x) { return s.contains(point(std::move(x))); })
      .def(
          "sample",
          [](const SearchSpace& s, std::size_t n, std::uint64_t seed) {
            Rng rng = make_rng(seed);
            std::vector<std::vector<double>> out;
            for (std::size_t i = 0; i < n; ++i) out.push_back(sample_uniform(s, rng).values);
            return out;
          },
          py::arg("n"), py::arg("seed"), "n uniform draws from a fresh generator seeded with `seed`")
      .def("normalize", [](const SearchSpace& s, std::vector<double> x) { return normalize(s, point(std::move(x))); })
      .def("denormalize", [](const SearchSpace& s, const Eigen::VectorXd& u) { return denormalize(s, u).values; })
      .def("extract_structural",
           [](const SearchSpace& s, std::vector<double> x) { return extract_structural(s, point(std::move(x))).values; })
      .def("clip_round", [](const SearchSpace& s, std::vector<double> raw) { return clip_round(s, raw).values; })
      .def_property_readonly("grid_size", [](const SearchSpace& s) { return grid_size(s); });

  // Gaussian process.
  py::class_<KernelHyper>(m, "KernelHyper")
      .def(py::init([](double amplitude2, Eigen::VectorXd lengthscales, double noise) {
             return KernelHyper{amplitude2, std::move(lengthscales), noise};
           }),
           py::arg("amplitude2"), py::arg("lengthscales"), py::arg("noise"))
      .def_readonly("amplitude2", &KernelHyper::amplitude2)
      .def_readonly("lengthscales", &KernelHyper::lengthscales)
      .def_readonly("noise", &KernelHyper::noise);

  m.def("matern52", &matern52, py::arg("a"), py::arg("b"), py::arg("hyper"));

  py::class_<GaussianProcess>(m, "GaussianProcess")
      .def_static("fit", &GaussianProcess::fit, py::arg("X"), py::arg("y"), py::arg("hyper"))
      .def(
          "posterior",
          [](const GaussianProcess& gp, const Eigen::MatrixXd& Q) {
            Eigen::VectorXd mean, var;
            gp.posterior_batch(Q, mean, var);
            return py::make_tuple(mean, var);
          },
          py::arg("Q"), "posterior mean and variance at each row of Q")
      .def_property_readonly("log_marginal_likelihood", &GaussianProcess::log_marginal_likelihood)
      .def_property_readonly("hyper", &GaussianProcess::hyper)
      .def_property_readonly("diagonal_noise", &GaussianProcess::diagonal_noise)
      .def("__len__", &GaussianProcess::size);

  m.def(
      "optimize_hypers",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return optimize_hypers(X, y, rng);
      },
      py::arg("X"), py::arg("y"), py::arg("seed") = 0);

  // Hardware models.
  py::enum_<Metric>(m, "Metric").value("POWER", Metric::Power).value("MEMORY", Metric::Memory);

  py::class_<ProfileSample>(m, "ProfileSample")
      .def(py::init([](std::vector<std::int64_t> z, double power, double memory) {
             return ProfileSample{structural(std::move(z)), power, memory};
           }),
           py::arg("z"), py::arg("power"), py::arg("memory"))
      .def_property_readonly("z", [](const ProfileSample& s) { return s.z.values; })
      .def_readonly("power", &ProfileSample::power)
      .def_readonly("memory", &ProfileSample::memory);

  py::class_<HwLinearModel>(m, "HwLinearModel")
      .def(py::init([](std::vector<double> weights, double residual_std, Metric metric) {
             HwLinearModel h;
             h.metric = metric;
             h.weights = std::move(weights);
             h.residual_std = residual_std;
             return h;
           }),
           py::arg("weights"), py::arg("residual_std") = 0.0, py::arg("metric") = Metric::Power)
      .def_readonly("metric", &HwLinearModel::metric)
      .def_readonly("weights", &HwLinearModel::weights)
      .def_readonly("intercept", &HwLinearModel::intercept)
      .def_readonly("residual_std", &HwLinearModel::residual_std)
      .def_readonly("rmspe", &HwLinearModel::rmspe)
      .def("predict", [](const HwLinearModel& h, std::vector<std::int64_t> z) { return predict(h, structural(z)); });

  py::class_<Budget>(m, "Budget")
      .def(py::init([](std::optional<double> power, std::optional<double> memory) {
             Budget b{power, memory};
             b.validate();
             return b;
           }),
           py::arg("power") = py::none(), py::arg("memory") = py::none())
      .def_readonly("power", &Budget::power)
      .def_readonly("memory", &Budget::memory);

  py::class_<HwModels>(m, "HwModels")
      .def(py::init([](std::optional<HwLinearModel> power, std::optional<HwLinearModel> memory) {
             return HwModels{std::move(power), std::move(memory)};
           }),
           py::arg("power") = py::none(), py::arg("memory") = py::none())
      .def_readonly("power", &HwModels::power)
      .def_readonly("memory", &HwModels::memory)
      .def(
          "feasible",
          [](const HwModels& h, std::vector<std::int64_t> z, const Budget& b) {
            return check_budget(h, structural(z), b).feasible;
          },
          py::arg("z"), py::arg("budget"));

  m.def(
      "fit_linear",
      [](const std::vector<ProfileSample>& samples, Metric metric, bool intercept) {
        return fit_linear(samples, metric, intercept);
      },
      py::arg("samples"), py::arg("metric"), py::arg("intercept") = false);
  m.def(
      "cross_validate",
      [](const std::vector<ProfileSample>& samples, Metric metric, std::size_t k, std::uint64_t seed, bool intercept) {
        Rng rng = make_rng(seed);
        return cross_validate(samples, metric, k, rng, intercept).rmspe;
      },
      py::arg("samples"), py::arg("metric"), py::arg("k") = 10, py::arg("seed") = 0, py::arg("intercept") = false,
      "cross-validated RMSPE in percent");

  // Acquisition.
  m.def("normal_cdf", &normal_cdf);
  m.def("expected_improvement", &expected_improvement, py::arg("mean"), py::arg("variance"), py::arg("incumbent"));

  py::enum_<AcquisitionKind>(m, "AcquisitionKind")
      .value("EI", AcquisitionKind::EI)
      .value("HW_IECI", AcquisitionKind::HwIeci)
      .value("HW_CWEI", AcquisitionKind::HwCwei);

  m.def(
      "acquisition_value",
      [](AcquisitionKind kind, std::vector<double> x, const SearchSpace& space, const GaussianProcess& gp,
         const HwModels& models, const Budget& budget, double incumbent) {
        return acquisition_value(kind, point(std::move(x)), context(space, gp, models, budget, incumbent));
      },
      py::arg("kind"), py::arg("x"), py::arg("space"), py::arg("gp"), py::arg("models"), py::arg("budget"),
      py::arg("incumbent"));
  m.def(
      "maximize_acquisition",
      [](AcquisitionKind kind, const SearchSpace& space, const GaussianProcess& gp, const HwModels& models,
         const Budget& budget, double incumbent, std::size_t candidates, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        const auto r =
            maximize_acquisition(space, {kind, candidates}, context(space, gp, models, budget, incumbent), rng);
        return py::make_tuple(r.x.values, r.score, r.fallback);
      },
      py::arg("kind"), py::arg("space"), py::arg("gp"), py::arg("models"), py::arg("budget"), py::arg("incumbent"),
      py::arg("candidates") = 10000, py::arg("seed") = 0, "(x, score, fallback)");

  // Simulated benchmark.
  py::class_<SimScenario>(m, "Scenario")
      .def_readonly("name", &SimScenario::name)
      .def_readonly("space", &SimScenario::space)
      .def_readwrite("budget", &SimScenario::budget)
      .def_readwrite("power_noise", &SimScenario::power_noise)
      .def_readwrite("memory_noise", &SimScenario::memory_noise)
      .def_readonly("true_power_weights", &SimScenario::true_power_weights)
      .def_readonly("true_memory_weights", &SimScenario::true_memory_weights)
      .def_readonly("total_epochs", &SimScenario::total_epochs)
      .def(
          "train",
          [](const SimScenario& s, std::vector<double> x) {
            const LearningCurve c = simulate_curve(s, point(std::move(x)));
            return py::make_tuple(c.accuracy, c.test_error, c.diverged);
          },
          "(per-epoch validation accuracy, test error, diverged)")
      .def("true_metrics",
           [](const SimScenario& s, std::vector<std::int64_t> z) {
             const HwMetrics h = true_metrics(s, structural(std::move(z)));
             return py::make_tuple(h.power, h.memory);
           })
      .def(
          "profile",
          [](const SimScenario& s, std::size_t count, std::uint64_t seed) {
            Rng rng = make_rng(seed);
            return profile_offline(s, count, rng);
          },
          py::arg("count"), py::arg("seed") = 0)
      .def(
          "brute_force",
          [](const SimScenario& s, const Budget& b) {
            const auto r = brute_force_optimum(s, b);
            return py::make_tuple(r.x.values, r.error);
          },
          py::arg("budget"));

  m.def("mnist_like", &mnist_like);
  m.def("cifar_like", &cifar_like);
  m.def("scenario", &scenario_by_name, py::arg("name"));

  // Solvers.
  py::enum_<Method>(m, "Method")
      .value("RAND", Method::Rand)
      .value("RAND_WALK", Method::RandWalk)
      .value("HW_CWEI", Method::HwCwei)
      .value("HW_IECI", Method::HwIeci);

  py::enum_<TrialStatus>(m, "TrialStatus")
      .value("COMPLETED", TrialStatus::Completed)
      .value("EARLY_TERMINATED", TrialStatus::EarlyTerminated)
      .value("SKIPPED_INFEASIBLE", TrialStatus::SkippedInfeasible);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("method", &SolverConfig::method)
      .def_readwrite("max_evals", &SolverConfig::max_evals)
      .def_readwrite("time_budget", &SolverConfig::time_budget)
      .def_readwrite("walk_sigma", &SolverConfig::walk_sigma)
      .def_readwrite("gating", &SolverConfig::gating)
      .def_readwrite("early_termination", &SolverConfig::early_termination)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("candidate_count", &SolverConfig::candidate_count)
      .def_readwrite("acquisition", &SolverConfig::acquisition);

  py::class_<TrialRecord>(m, "TrialRecord")
      .def_readonly("index", &TrialRecord::index)
      .def_property_readonly("x", [](const TrialRecord& r) { return r.x.values; })
      .def_property_readonly("z", [](const TrialRecord& r) { return r.z.values; })
      .def_readonly("objective", &TrialRecord::objective)
      .def_readonly("status", &TrialRecord::status)
      .def_readonly("epochs_run", &TrialRecord::epochs_run)
      .def_readonly("predicted_power", &TrialRecord::predicted_power)
      .def_readonly("predicted_memory", &TrialRecord::predicted_memory)
      .def_readonly("true_power", &TrialRecord::true_power)
      .def_readonly("true_memory", &TrialRecord::true_memory)
      .def_readonly("sim_time_start", &TrialRecord::sim_time_start)
      .def_readonly("sim_time_end", &TrialRecord::sim_time_end)
      .def_readonly("note", &TrialRecord::note);

  m.def(
      "run_solver",
      [](const SimScenario& s, const HwModels& models, const Budget& budget, const SolverConfig& cfg) {
        py::gil_scoped_release release;
        return run_solver(s.space, SimObjective(s), models, budget, cfg);
      },
      py::arg("scenario"), py::arg("models"), py::arg("budget"), py::arg("config"));
  m.def(
      "best_so_far",
      [](const std::vector<TrialRecord>& journal, const Budget& budget) { return best_so_far(journal, budget); },
      py::arg("journal"), py::arg("budget"));

  // Experiments.
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("scenario", &ExperimentConfig::scenario)
      .def_readonly("seeds", &ExperimentConfig::seeds)
      .def_readonly("methods", &ExperimentConfig::methods)
      .def_readonly("budget", &ExperimentConfig::budget)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_property_readonly("digest", &config_digest)
      .def("solver_config", [](const ExperimentConfig& c, Method method, bool aware, std::uint64_t seed) {
        return c.solver_config(method, aware ? Variant::Aware : Variant::Default, seed);
      });

  m.def("load_config", &load_config, py::arg("path"));
  m.def(
      "parse_config", [](const std::string& text) { return parse_config(Json::parse(text, nullptr, true, true)); },
      py::arg("json_text"));

  m.def(
      "run_experiment",
      [](const ExperimentConfig& c, bool resume) {
        ExperimentOptions opt;
        opt.resume = resume;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c, opt);
        }
        py::dict out;
        out["summary"] = to_json(r.report).dump();
        out["journals"] = r.journal_paths;
        out["computed"] = r.runs_computed;
        out["reused"] = r.runs_reused;
        return out;
      },
      py::arg("config"), py::arg("resume") = false);
  m.def(
      "report", [](const std::string& dir) { return to_json(aggregate(load_journals(dir))).dump(); },
      py::arg("output_dir"), "summary JSON text rebuilt from the journals under output_dir");
  m.def(
      "fit_hw_models",
      [](const std::string& profile_csv, const std::string& out, bool force) {
        FitHwOptions opt;
        opt.force = force;
        const HwModelFile f = fit_hw_models(read_profile_csv(profile_csv), opt);
        write_model_file(out, f);
        return HwModels{f.power, f.memory};
      },
      py::arg("profile_csv"), py::arg("out"), py::arg("force") = false);
}
