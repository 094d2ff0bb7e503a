#pragma once

// Run configuration for the experiment runner. Every section has defaults; a JSON
// file overrides any subset, and unknown keys are rejected with their full path.

#include <fstream>
#include <set>

#include "scalebridge/active_learning.hpp"
#include "scalebridge/md.hpp"
#include "scalebridge/orchestrator.hpp"
#include "scalebridge/sampling_ab.hpp"
#include "scalebridge/upscaler.hpp"

namespace scalebridge {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { Sample, Committee, Validity, AbTest, Mix, Upscale, MdCheck };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Sample: return "sample";
    case Experiment::Committee: return "committee";
    case Experiment::Validity: return "validity";
    case Experiment::AbTest: return "abtest";
    case Experiment::Mix: return "mix";
    case Experiment::Upscale: return "upscale";
    case Experiment::MdCheck: return "mdcheck";
  }
  return "?";
}

inline Experiment experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::Sample, Experiment::Committee, Experiment::Validity, Experiment::AbTest, Experiment::Mix,
                 Experiment::Upscale, Experiment::MdCheck})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

struct SampleSection {
  std::string method = "lhs";  // uniform | lhs | sparsity | optimizer | active
  std::string truth = "closure";  // closure | rosenbrock
  std::size_t dims = 2;           // rosenbrock only
  std::size_t n = 100;
  std::size_t candidate_factor = 10;  // sparsity: m = factor * n
  OptimizerSamplerConfig optimizer;
  ActiveLearningConfig active;
  std::size_t active_seeds = 5;
};

struct CommitteeSection {
  std::string truth = "rosenbrock";  // rosenbrock | closure | noise
  std::size_t dims = 2;
  std::size_t points = 200;
  std::string trainer = "rbf";  // rbf | mlp
  double rbf_lambda = 1e-10;
  TrainConfig mlp;
  std::string transform = "identity";  // identity | log10
  CommitteeConfig committee;
  std::size_t probe_points = 200;
};

struct ValiditySection {
  std::size_t dims = 2;
  std::vector<std::string> samplers = {"optimizer", "uniform", "sparsity"};
  std::vector<std::string> gate = {"sparsity"};  // samplers that must converge
  ValidityConfig validity{.tol = 5.0};
  OptimizerSamplerConfig optimizer = ab_optimizer_defaults();
  double rbf_lambda = 1e-10;
};

struct AbTestSection {
  AbTestConfig ab;
  std::size_t seeds = 5;
};

struct MixSection {
  std::vector<std::string> scenarios = {"uniform", "heated"};
  MixingConfig mixing;
  OrchestratorConfig orchestrator;
};

struct OuCheck {
  double gamma = 2.0;
  double kt_over_m = 1.0;
  double dt = 0.01;
  std::size_t samples = 200000;
  std::size_t particles = 1;
  std::size_t max_lag = 500;
  double tolerance = 0.05;
};

struct MdCheckSection {
  OuCheck ou;
  MdConfig md;
  std::size_t vacf_lag = 500;
  std::size_t msd_lag = 2000;
  std::size_t msd_origin_stride = 5;
  double gk_msd_tolerance = 0.10;
  double drift_tolerance = 1e-3;
  double momentum_tolerance = 1e-10;
};

struct RunConfig {
  Experiment experiment = Experiment::Sample;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string output_dir = "out";
  SampleSection sample;
  CommitteeSection committee;
  ValiditySection validity;
  AbTestSection abtest;
  MixSection mix;
  AdsorptionConfig upscale;
  MdCheckSection mdcheck;

  RunConfig() {
    mdcheck.md.n_prod = 30000;
  }
};

// ---------------------------------------------------------------------------
// Reader that remembers which keys were consumed.

class ConfigReader {
public:
  ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void read(const char* key, double& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    if (!it->is_number()) throw ConfigError(where(key) + ": expected a number");
    out = it->get<double>();
  }

  void read(const char* key, std::size_t& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    if (!it->is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
    out = it->get<std::size_t>();
  }

  template <class F>
  void section(const char* key, F&& f) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    ConfigReader sub(*it, where(key));
    f(sub);
    sub.finish();
  }

  void choice(const char* key, std::string& out, std::initializer_list<std::string_view> allowed) {
    read(key, out);
    for (auto a : allowed)
      if (a == out) return;
    throw ConfigError(where(key) + ": invalid value '" + out + "'");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key().c_str()));
  }

private:
  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? std::string("config") : path_;
    return key ? p + "." + key : p;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Per-struct readers and writers

inline void read_train(ConfigReader& r, TrainConfig& c) {
  r.read("hidden", c.hidden);
  r.read("epochs", c.epochs);
  r.read("learning_rate", c.learning_rate);
  r.read("momentum", c.momentum);
  r.read("init_scale", c.init_scale);
  r.read("patience", c.patience);
}

inline json train_json(const TrainConfig& c) {
  return {{"hidden", c.hidden},         {"epochs", c.epochs},     {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},     {"init_scale", c.init_scale}, {"patience", c.patience}};
}

inline void read_committee(ConfigReader& r, CommitteeConfig& c) {
  r.read("n_ensemble", c.n_ensemble);
  r.read("r2_threshold", c.r2_threshold);
  r.read("calibration_fraction", c.calibration_fraction);
  r.read("subset_fraction", c.subset_fraction);
  r.read("max_attempts", c.max_attempts);
}

inline json committee_json(const CommitteeConfig& c) {
  return {{"n_ensemble", c.n_ensemble},
          {"r2_threshold", c.r2_threshold},
          {"calibration_fraction", c.calibration_fraction},
          {"subset_fraction", c.subset_fraction},
          {"max_attempts", c.max_attempts}};
}

inline void read_nelder_mead(ConfigReader& r, NelderMeadConfig& c) {
  r.read("alpha", c.alpha);
  r.read("gamma", c.gamma);
  r.read("rho", c.rho);
  r.read("sigma", c.sigma);
  r.read("max_iters", c.max_iters);
  r.read("f_tol", c.f_tol);
  r.read("x_tol", c.x_tol);
  r.read("initial_scale", c.initial_scale);
}

inline json nelder_mead_json(const NelderMeadConfig& c) {
  return {{"alpha", c.alpha}, {"gamma", c.gamma},         {"rho", c.rho},     {"sigma", c.sigma},
          {"max_iters", c.max_iters}, {"f_tol", c.f_tol}, {"x_tol", c.x_tol}, {"initial_scale", c.initial_scale}};
}

inline void read_optimizer(ConfigReader& r, OptimizerSamplerConfig& c) {
  r.read("k_solvers", c.k_solvers);
  r.read("objective_output", c.objective_output);
  r.section("nelder_mead", [&](ConfigReader& s) { read_nelder_mead(s, c.nelder_mead); });
}

inline json optimizer_json(const OptimizerSamplerConfig& c) {
  return {{"k_solvers", c.k_solvers}, {"objective_output", c.objective_output},
          {"nelder_mead", nelder_mead_json(c.nelder_mead)}};
}

inline void read_validity(ConfigReader& r, ValidityConfig& c) {
  r.read("tol", c.tol);
  r.read("window", c.window);
  r.read("epsilon", c.epsilon);
  r.read("budget", c.budget);
  r.read("max_iterations", c.max_iterations);
  r.read("test_points", c.test_points);
}

inline json validity_json(const ValidityConfig& c) {
  return {{"tol", c.tol},         {"window", c.window},       {"epsilon", c.epsilon},
          {"budget", c.budget},   {"max_iterations", c.max_iterations}, {"test_points", c.test_points}};
}

inline void read_active(ConfigReader& r, ActiveLearningConfig& c) {
  r.read("initial_points", c.initial_points);
  r.read("batch", c.batch);
  r.read("max_evals", c.max_evals);
  r.read("candidates", c.candidates);
  r.read("test_points", c.test_points);
  r.read("rmse_target", c.rmse_target);
  r.read("rbf_lambda", c.trainer.rbf_lambda);
  r.section("committee", [&](ConfigReader& s) { read_committee(s, c.committee); });
}

inline json active_json(const ActiveLearningConfig& c) {
  return {{"initial_points", c.initial_points}, {"batch", c.batch},
          {"max_evals", c.max_evals},           {"candidates", c.candidates},
          {"test_points", c.test_points},       {"rmse_target", c.rmse_target},
          {"rbf_lambda", c.trainer.rbf_lambda}, {"committee", committee_json(c.committee)}};
}

inline void read_ab(ConfigReader& r, AbTestConfig& c) {
  r.read("dims", c.dims);
  r.read("iterations", c.iterations);
  r.read("budget", c.budget);
  r.section("optimizer", [&](ConfigReader& s) { read_optimizer(s, c.optimizer); });
  r.read("rbf_lambda", c.rbf_lambda);
  r.read("near_radius", c.near_radius);
  r.read("near_points", c.near_points);
  r.read("test_points", c.test_points);
}

inline json ab_json(const AbTestConfig& c) {
  return {{"dims", c.dims},
          {"iterations", c.iterations},
          {"budget", c.budget},
          {"optimizer", optimizer_json(c.optimizer)},
          {"rbf_lambda", c.rbf_lambda},
          {"near_radius", c.near_radius},
          {"near_points", c.near_points},
          {"test_points", c.test_points}};
}

inline void read_mixing(ConfigReader& r, MixingConfig& c) {
  r.read("cells", c.cells);
  r.read("steps", c.steps);
  r.read("dx", c.dx);
  r.read("n1_left", c.n1_left);
  r.read("n2_left", c.n2_left);
  r.read("n1_right", c.n1_right);
  r.read("n2_right", c.n2_right);
  r.read("temperature", c.temperature);
  r.read("z1", c.z1);
  r.read("z2", c.z2);
  r.read("heating", c.heating);
  r.read("dt_fraction", c.dt_fraction);
  r.read("closure_output", c.closure_output);
}

inline json mixing_json(const MixingConfig& c) {
  return {{"cells", c.cells},       {"steps", c.steps},     {"dx", c.dx},
          {"n1_left", c.n1_left},   {"n2_left", c.n2_left}, {"n1_right", c.n1_right},
          {"n2_right", c.n2_right}, {"temperature", c.temperature}, {"z1", c.z1},
          {"z2", c.z2},             {"heating", c.heating}, {"dt_fraction", c.dt_fraction},
          {"closure_output", c.closure_output}};
}

inline void read_orchestrator(ConfigReader& r, OrchestratorConfig& c) {
  r.read("tau", c.tau);
  r.read("retrain_batch", c.retrain_batch);
  r.read("lookup_tol_cells", c.lookup_tol_cells);
  r.read("key_resolution", c.key_resolution);
  r.read("horizon", c.horizon);
  r.read("speculative_budget", c.speculative_budget);
  r.read("initial_points", c.initial_points);
  r.read("rbf_lambda", c.rbf_lambda);
  r.section("committee", [&](ConfigReader& s) { read_committee(s, c.committee); });
}

inline json orchestrator_json(const OrchestratorConfig& c) {
  return {{"tau", c.tau},
          {"retrain_batch", c.retrain_batch},
          {"lookup_tol_cells", c.lookup_tol_cells},
          {"key_resolution", c.key_resolution},
          {"horizon", c.horizon},
          {"speculative_budget", c.speculative_budget},
          {"initial_points", c.initial_points},
          {"rbf_lambda", c.rbf_lambda},
          {"committee", committee_json(c.committee)}};
}

inline void read_emulator(ConfigReader& r, EmulatorConfig& c) {
  r.section("net", [&](ConfigReader& s) { read_train(s, c.net); });
  r.read("holdout_fraction", c.holdout_fraction);
  r.read("r2_min", c.r2_min);
}

inline void read_adsorption(ConfigReader& r, AdsorptionConfig& c) {
  r.read("c1", c.c1);
  r.read("w0", c.w0);
  r.read("rho_lo", c.rho_lo);
  r.read("rho_hi", c.rho_hi);
  r.read("t_lo", c.t_lo);
  r.read("t_hi", c.t_hi);
  r.read("w_lo", c.w_lo);
  r.read("w_hi", c.w_hi);
  r.read("fine_samples", c.fine_samples);
  r.read("coarse_samples", c.coarse_samples);
  r.section("emulator", [&](ConfigReader& s) { read_emulator(s, c.emulator); });
  r.section("upscaler", [&](ConfigReader& s) { read_train(s, c.upscaler.net); });
}

inline json adsorption_json(const AdsorptionConfig& c) {
  return {{"c1", c.c1},
          {"w0", c.w0},
          {"rho_lo", c.rho_lo},
          {"rho_hi", c.rho_hi},
          {"t_lo", c.t_lo},
          {"t_hi", c.t_hi},
          {"w_lo", c.w_lo},
          {"w_hi", c.w_hi},
          {"fine_samples", c.fine_samples},
          {"coarse_samples", c.coarse_samples},
          {"emulator", {{"net", train_json(c.emulator.net)}, {"holdout_fraction", c.emulator.holdout_fraction}, {"r2_min", c.emulator.r2_min}}},
          {"upscaler", train_json(c.upscaler.net)}};
}

inline void read_md(ConfigReader& r, MdConfig& c) {
  r.read("n_particles", c.n_particles);
  r.read("density", c.density);
  r.read("temperature", c.temperature);
  r.read("dt", c.dt);
  r.read("n_equil", c.n_equil);
  r.read("n_prod", c.n_prod);
  r.read("cutoff", c.cutoff);
  r.read("stride", c.stride);
  r.read("thermostat_interval", c.thermostat_interval);
}

inline json md_json(const MdConfig& c) {
  return {{"n_particles", c.n_particles}, {"density", c.density}, {"temperature", c.temperature},
          {"dt", c.dt},                   {"n_equil", c.n_equil}, {"n_prod", c.n_prod},
          {"cutoff", c.cutoff},           {"stride", c.stride},   {"thermostat_interval", c.thermostat_interval}};
}

// ---------------------------------------------------------------------------
// RunConfig

inline RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ConfigReader r(j, "");
  std::string kind;
  r.read("experiment", kind);
  if (kind.empty()) throw ConfigError("config.experiment is required");
  c.experiment = experiment_from_string(kind);
  r.read("seed", c.seed);
  r.read("workers", c.workers);
  r.read("output_dir", c.output_dir);
  r.section("sample", [&](ConfigReader& s) {
    s.choice("method", c.sample.method, {"uniform", "lhs", "sparsity", "optimizer", "active"});
    s.choice("truth", c.sample.truth, {"closure", "rosenbrock"});
    s.read("dims", c.sample.dims);
    s.read("n", c.sample.n);
    s.read("candidate_factor", c.sample.candidate_factor);
    s.section("optimizer", [&](ConfigReader& o) { read_optimizer(o, c.sample.optimizer); });
    s.section("active", [&](ConfigReader& a) { read_active(a, c.sample.active); });
    s.read("active_seeds", c.sample.active_seeds);
  });
  r.section("committee", [&](ConfigReader& s) {
    auto& k = c.committee;
    s.choice("truth", k.truth, {"rosenbrock", "closure", "noise"});
    s.read("dims", k.dims);
    s.read("points", k.points);
    s.choice("trainer", k.trainer, {"rbf", "mlp"});
    s.read("rbf_lambda", k.rbf_lambda);
    s.section("mlp", [&](ConfigReader& m) { read_train(m, k.mlp); });
    s.choice("transform", k.transform, {"identity", "log10"});
    s.section("committee", [&](ConfigReader& m) { read_committee(m, k.committee); });
    s.read("probe_points", k.probe_points);
  });
  r.section("validity", [&](ConfigReader& s) {
    auto& v = c.validity;
    s.read("dims", v.dims);
    s.read("samplers", v.samplers);
    for (const auto& name : v.samplers)
      if (name != "optimizer" && name != "uniform" && name != "sparsity")
        throw ConfigError("config.validity.samplers: invalid value '" + name + "'");
    s.read("gate", v.gate);
    for (const auto& name : v.gate)
      if (std::find(v.samplers.begin(), v.samplers.end(), name) == v.samplers.end())
        throw ConfigError("config.validity.gate: '" + name + "' is not in samplers");
    s.section("loop", [&](ConfigReader& l) { read_validity(l, v.validity); });
    s.section("optimizer", [&](ConfigReader& o) { read_optimizer(o, v.optimizer); });
    s.read("rbf_lambda", v.rbf_lambda);
  });
  r.section("abtest", [&](ConfigReader& s) {
    read_ab(s, c.abtest.ab);
    s.read("seeds", c.abtest.seeds);
  });
  r.section("mix", [&](ConfigReader& s) {
    s.read("scenarios", c.mix.scenarios);
    for (const auto& name : c.mix.scenarios)
      if (name != "uniform" && name != "heated") throw ConfigError("config.mix.scenarios: invalid value '" + name + "'");
    s.section("mixing", [&](ConfigReader& m) { read_mixing(m, c.mix.mixing); });
    s.section("orchestrator", [&](ConfigReader& m) { read_orchestrator(m, c.mix.orchestrator); });
  });
  r.section("upscale", [&](ConfigReader& s) { read_adsorption(s, c.upscale); });
  r.section("mdcheck", [&](ConfigReader& s) {
    auto& m = c.mdcheck;
    s.section("ou", [&](ConfigReader& o) {
      o.read("gamma", m.ou.gamma);
      o.read("kt_over_m", m.ou.kt_over_m);
      o.read("dt", m.ou.dt);
      o.read("samples", m.ou.samples);
      o.read("particles", m.ou.particles);
      o.read("max_lag", m.ou.max_lag);
      o.read("tolerance", m.ou.tolerance);
    });
    s.section("md", [&](ConfigReader& o) { read_md(o, m.md); });
    s.read("vacf_lag", m.vacf_lag);
    s.read("msd_lag", m.msd_lag);
    s.read("msd_origin_stride", m.msd_origin_stride);
    s.read("gk_msd_tolerance", m.gk_msd_tolerance);
    s.read("drift_tolerance", m.drift_tolerance);
    s.read("momentum_tolerance", m.momentum_tolerance);
  });
  r.finish();
  if (c.workers == 0) throw ConfigError("config.workers must be >= 1");
  return c;
}

inline json to_json(const RunConfig& c) {
  const auto& k = c.committee;
  const auto& m = c.mdcheck;
  return {{"experiment", to_string(c.experiment)},
          {"seed", c.seed},
          {"workers", c.workers},
          {"output_dir", c.output_dir},
          {"sample",
           {{"method", c.sample.method},
            {"truth", c.sample.truth},
            {"dims", c.sample.dims},
            {"n", c.sample.n},
            {"candidate_factor", c.sample.candidate_factor},
            {"optimizer", optimizer_json(c.sample.optimizer)},
            {"active", active_json(c.sample.active)},
            {"active_seeds", c.sample.active_seeds}}},
          {"committee",
           {{"truth", k.truth},
            {"dims", k.dims},
            {"points", k.points},
            {"trainer", k.trainer},
            {"rbf_lambda", k.rbf_lambda},
            {"mlp", train_json(k.mlp)},
            {"transform", k.transform},
            {"committee", committee_json(k.committee)},
            {"probe_points", k.probe_points}}},
          {"validity",
           {{"dims", c.validity.dims},
            {"samplers", c.validity.samplers},
            {"gate", c.validity.gate},
            {"loop", validity_json(c.validity.validity)},
            {"optimizer", optimizer_json(c.validity.optimizer)},
            {"rbf_lambda", c.validity.rbf_lambda}}},
          {"abtest", [&] {
             json a = ab_json(c.abtest.ab);
             a["seeds"] = c.abtest.seeds;
             return a;
           }()},
          {"mix",
           {{"scenarios", c.mix.scenarios},
            {"mixing", mixing_json(c.mix.mixing)},
            {"orchestrator", orchestrator_json(c.mix.orchestrator)}}},
          {"upscale", adsorption_json(c.upscale)},
          {"mdcheck",
           {{"ou",
             {{"gamma", m.ou.gamma},
              {"kt_over_m", m.ou.kt_over_m},
              {"dt", m.ou.dt},
              {"samples", m.ou.samples},
              {"particles", m.ou.particles},
              {"max_lag", m.ou.max_lag},
              {"tolerance", m.ou.tolerance}}},
            {"md", md_json(m.md)},
            {"vacf_lag", m.vacf_lag},
            {"msd_lag", m.msd_lag},
            {"msd_origin_stride", m.msd_origin_stride},
            {"gk_msd_tolerance", m.gk_msd_tolerance},
            {"drift_tolerance", m.drift_tolerance},
            {"momentum_tolerance", m.momentum_tolerance}}}};
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  // A manifest carries the resolved config under "config".
  if (j.is_object() && j.contains("manifest_version")) {
    if (!j.contains("config")) throw ConfigError("manifest '" + path + "' has no config");
    return run_config_from_json(j.at("config"));
  }
  return run_config_from_json(j);
}

}  // namespace scalebridge
