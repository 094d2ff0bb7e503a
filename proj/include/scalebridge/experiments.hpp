#pragma once

// Experiment drivers behind the command-line runner. Each writes its data files
// into an output directory and returns named pass/fail checks plus the seeds it used.

#include <chrono>
#include <filesystem>
#include <map>

#include "scalebridge/run_config.hpp"

namespace scalebridge {

struct ExperimentOutcome {
  std::map<std::string, bool> checks;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> files;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
  }
};

namespace detail {

class OutputDir {
public:
  OutputDir(std::filesystem::path root, ExperimentOutcome& out) : root_(std::move(root)), out_(out) {
    std::filesystem::create_directories(root_);
  }

  std::ofstream open(const std::string& name) {
    const auto p = root_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    out_.files.push_back(name);
    return os;
  }

  template <class F>
  void write(const std::string& name, F&& f) {
    auto os = open(name);
    f(static_cast<std::ostream&>(os));
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  /// Records files written under sub by library code.
  void adopt(const std::string& sub) {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root_ / sub))
      if (e.is_regular_file()) names.push_back(std::filesystem::relative(e.path(), root_).generic_string());
    std::sort(names.begin(), names.end());
    out_.files.insert(out_.files.end(), names.begin(), names.end());
  }

  const std::filesystem::path& root() const { return root_; }

private:
  std::filesystem::path root_;
  ExperimentOutcome& out_;
};

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::pair<TruthModelPtr, Domain> make_truth(const std::string& kind, std::size_t dims) {
  if (kind == "closure") return {std::make_shared<SyntheticClosureModel>(), icf_domain()};
  auto r = std::make_shared<RosenbrockModel>(dims);
  return {r, r->domain()};
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline ExperimentOutcome run_sample(const RunConfig& cfg, detail::OutputDir& dir, ExperimentOutcome& out) {
  const auto& s = cfg.sample;
  if (s.method == "active") {
    auto truth = std::make_shared<RosenbrockModel>(2);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < s.active_seeds; ++i) seeds.push_back(cfg.seed + i);
    auto os = dir.open("active_curves.csv");
    os << "seed,strategy,evals,rmse\n";
    json per_seed = json::array();
    std::vector<double> ratios;
    for (auto seed : seeds) {
      ActiveLearningConfig ac = s.active;
      ac.seed = seed;
      out.seeds["active_" + std::to_string(seed)] = seed;
      const auto g = run_acquisition(*truth, truth->domain(), Acquisition::Uncertainty, ac);
      const auto u = run_acquisition(*truth, truth->domain(), Acquisition::Uniform, ac);
      for (const auto* c : {&g, &u})
        for (std::size_t k = 0; k < c->evals.size(); ++k)
          os << seed << ',' << (c == &g ? "uncertainty" : "uniform") << ',' << c->evals[k] << ','
             << format_double(c->rmse[k]) << '\n';
      const std::size_t ge = g.reached() ? g.evals_to_target : ac.max_evals;
      const std::size_t ue = u.reached() ? u.evals_to_target : ac.max_evals;
      ratios.push_back(static_cast<double>(ge) / static_cast<double>(ue));
      per_seed.push_back({{"seed", seed},
                          {"guided_evals", ge},
                          {"guided_reached", g.reached()},
                          {"uniform_evals", ue},
                          {"uniform_reached", u.reached()},
                          {"ratio", ratios.back()}});
    }
    const double med = median(ratios);
    dir.write_json("active_report.json", {{"rmse_target", s.active.rmse_target},
                                          {"seeds", per_seed},
                                          {"median_ratio", med},
                                          {"ratio_at_most_half", med <= 0.5},
                                          {"ratio_at_most_tenth", med <= 0.1}});
    out.checks["active_median_ratio_le_0.5"] = med <= 0.5;
    return out;
  }

  auto [truth, domain] = detail::make_truth(s.truth, s.dims);
  const std::uint64_t seed = derive_seed(cfg.seed, 1);
  out.seeds["sampler"] = seed;
  Dataset data(domain);
  if (s.method == "optimizer") {
    data = optimizer_directed_draw(domain, truth, s.optimizer.k_solvers, s.n, s.optimizer.nelder_mead, seed);
  } else {
    std::vector<std::vector<double>> xs;
    if (s.method == "uniform") xs = uniform_random(domain, s.n, seed);
    else if (s.method == "lhs") xs = latin_hypercube(domain, s.n, seed);
    else xs = sparsity_sample(domain, {}, s.n, s.candidate_factor * s.n, seed);
    data = evaluate_all(*truth, domain, xs, seed);
  }
  dir.write("samples.csv", [&](std::ostream& os) { write_dataset_csv(os, data); });
  return out;
}

inline ExperimentOutcome run_committee_experiment(const RunConfig& cfg, detail::OutputDir& dir,
                                                  ExperimentOutcome& out) {
  const auto& k = cfg.committee;
  const std::uint64_t data_seed = derive_seed(cfg.seed, 1);
  out.seeds["design"] = data_seed;
  Dataset data;
  if (k.truth == "noise") {
    const Domain domain = Domain::box(k.dims, 0.0, 1.0);
    data = Dataset(domain);
    Rng rng(derive_seed(cfg.seed, 2));
    out.seeds["noise"] = derive_seed(cfg.seed, 2);
    for (auto& x : latin_hypercube(domain, k.points, data_seed)) data.add(truth_point(x, {standard_normal(rng)}));
  } else {
    auto [truth, domain] = detail::make_truth(k.truth, k.dims);
    data = evaluate_all(*truth, domain, latin_hypercube(domain, k.points, data_seed), data_seed);
  }
  Trainer trainer = k.trainer == "rbf" ? Trainer::rbf(k.rbf_lambda) : Trainer::network(k.mlp);
  trainer.transform = k.transform == "log10" ? TargetTransform::Log10 : TargetTransform::Identity;
  CommitteeConfig cc = k.committee;
  cc.seed = derive_seed(cfg.seed, 3);
  out.seeds["committee"] = cc.seed;
  dir.write("committee_data.csv", [&](std::ostream& os) { write_dataset_csv(os, data); });

  std::optional<WorkerPool> pool;
  if (cfg.workers > 1) pool.emplace(cfg.workers);
  Committee c;
  try {
    c = build_committee(data, trainer, cc, pool ? &*pool : nullptr);
  } catch (const CommitteeBuildError& e) {
    dir.write_json("committee_report.json", {{"built", false},
                                             {"error", e.what()},
                                             {"best_r2", detail::finite_or_null(e.best_r2())},
                                             {"accepted", e.accepted()}});
    throw;
  }
  save_committee(dir.root() / "committee", c);
  dir.adopt("committee");

  const auto probes = uniform_random(data.domain(), k.probe_points, derive_seed(cfg.seed, 4));
  out.seeds["probes"] = derive_seed(cfg.seed, 4);
  auto os = dir.open("committee_probes.csv");
  os << "index,quality\n";
  std::vector<double> q;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    q.push_back(committee_predict(c, probes[i]).quality);
    os << i << ',' << format_double(q.back()) << '\n';
  }
  const bool gate = std::all_of(c.calibration_scores.begin(), c.calibration_scores.end(),
                                [&](double r) { return r >= cc.r2_threshold; });
  dir.write_json("committee_report.json", {{"built", true},
                                           {"members", c.size()},
                                           {"calibration_scores", c.calibration_scores},
                                           {"rejected_attempts", c.rejected_attempts},
                                           {"median_probe_quality", q.empty() ? 0.0 : median(q)}});
  out.checks["members_pass_gate"] = gate && c.size() == cc.n_ensemble;
  return out;
}

inline ExperimentOutcome run_validity_experiment(const RunConfig& cfg, detail::OutputDir& dir,
                                                 ExperimentOutcome& out) {
  const auto& v = cfg.validity;
  auto truth = std::make_shared<RosenbrockModel>(v.dims);
  const Domain domain = truth->domain();
  ValidityConfig vc = v.validity;
  vc.seed = derive_seed(cfg.seed, 1);
  out.seeds["test_set"] = vc.seed;
  const std::uint64_t sampler_seed = derive_seed(cfg.seed, 2);
  out.seeds["sampler"] = sampler_seed;
  json report = json::object();
  for (const auto& name : v.samplers) {
    std::unique_ptr<Sampler> sampler;
    if (name == "optimizer")
      sampler = std::make_unique<OptimizerDirectedSampler>(truth, domain, v.optimizer, sampler_seed);
    else if (name == "uniform")
      sampler = std::make_unique<UniformSampler>(truth, domain, sampler_seed);
    else
      sampler = std::make_unique<SparsitySampler>(truth, domain, sampler_seed);
    const auto res = validity_loop(*truth, domain, Trainer::rbf(v.rbf_lambda), *sampler, vc);
    dir.write("validity_" + name + ".csv", [&](std::ostream& os) { res.history.write_csv(os); });
    report[name] = {{"converged", res.converged},
                    {"score", detail::finite_or_null(res.score)},
                    {"iterations", res.history.records.size()},
                    {"evaluations", res.database.size()}};
    if (std::find(v.gate.begin(), v.gate.end(), name) != v.gate.end())
      out.checks["converged_" + name] = res.converged && res.score <= vc.tol;
  }
  dir.write_json("validity_report.json", report);
  return out;
}

inline ExperimentOutcome run_abtest_experiment(const RunConfig& cfg, detail::OutputDir& dir, ExperimentOutcome& out) {
  const auto& a = cfg.abtest;
  std::vector<double> near_opt, near_uni, glob_opt, glob_uni;
  json per_seed = json::array();
  for (std::size_t i = 0; i < a.seeds; ++i) {
    AbTestConfig ac = a.ab;
    ac.seed = cfg.seed + i;
    out.seeds["ab_" + std::to_string(i)] = ac.seed;
    const AbResult r = run_sampling_ab(ac);
    for (const AbArm* arm : {&r.optimizer, &r.uniform}) {
      auto os = dir.open("ab_" + std::to_string(ac.seed) + "_" + arm->name + ".csv");
      os << "iteration,db_size,test_score,near_error,evals\n";
      for (std::size_t k = 0; k < arm->history.records.size(); ++k) {
        const auto& rec = arm->history.records[k];
        os << rec.iteration << ',' << rec.db_size << ',' << format_double(rec.test_score) << ','
           << format_double(arm->near_error[k]) << ',' << rec.evals << '\n';
      }
    }
    near_opt.push_back(r.optimizer.final_near);
    near_uni.push_back(r.uniform.final_near);
    glob_opt.push_back(r.optimizer.final_global);
    glob_uni.push_back(r.uniform.final_global);
    per_seed.push_back({{"seed", ac.seed},
                        {"optimizer", {{"near", r.optimizer.final_near}, {"global", r.optimizer.final_global},
                                       {"near_fraction", r.optimizer.near_fraction}}},
                        {"uniform", {{"near", r.uniform.final_near}, {"global", r.uniform.final_global},
                                     {"near_fraction", r.uniform.near_fraction}}}});
  }
  const double mno = median(near_opt), mnu = median(near_uni);
  const double ratio = median(glob_opt) / median(glob_uni);
  dir.write_json("abtest_report.json", {{"seeds", per_seed},
                                        {"median_near_optimizer", mno},
                                        {"median_near_uniform", mnu},
                                        {"median_global_optimizer", median(glob_opt)},
                                        {"median_global_uniform", median(glob_uni)},
                                        {"global_ratio", ratio}});
  out.checks["optimizer_lower_near_error"] = mno < mnu;
  out.checks["global_error_within_2x"] = ratio <= 2.0 && ratio >= 0.5;
  return out;
}

inline ExperimentOutcome run_mix_experiment(const RunConfig& cfg, detail::OutputDir& dir, ExperimentOutcome& out) {
  OrchestratorConfig oc = cfg.mix.orchestrator;
  oc.workers = cfg.workers;
  oc.seed = derive_seed(cfg.seed, 1);
  out.seeds["orchestrator"] = oc.seed;
  std::map<std::string, std::size_t> fine_calls;
  json report = json::object();
  bool conserved = true;
  for (const auto& name : cfg.mix.scenarios) {
    const Scenario sc = scenario_from_string(name);
    const MixingRun run = run_mixing_experiment(sc, cfg.mix.mixing, oc);
    dir.write("callmap_" + name + ".csv", [&](std::ostream& os) { run.call_map.write_csv(os); });
    dir.write("callmap_" + name + ".pgm", [&](std::ostream& os) { run.call_map.write_pgm(os); });
    dir.write_json("accounting_" + name + ".json", to_json(run.accounting));
    dir.write("states_" + name + ".csv", [&](std::ostream& os) { write_states_csv(os, run); });
    const auto& a = run.accounting;
    fine_calls[name] = a.truth + a.speculative;
    conserved = conserved && a.max_mass_error <= 1e-10;
    report[name] = {{"truth", a.truth}, {"speculative", a.speculative}, {"dedup_rate", a.dedup_rate}};
  }
  dir.write_json("mix_report.json", report);
  out.checks["mass_conserved"] = conserved;
  if (fine_calls.count("uniform") && fine_calls.count("heated"))
    out.checks["heated_more_fine_calls"] = fine_calls["heated"] > fine_calls["uniform"];
  return out;
}

inline ExperimentOutcome run_upscale_experiment(const RunConfig& cfg, detail::OutputDir& dir,
                                                ExperimentOutcome& out) {
  AdsorptionConfig ac = cfg.upscale;
  ac.seed = cfg.seed;
  out.seeds["adsorption"] = ac.seed;
  const AdsorptionReport rep = synthetic_adsorption_demo(ac);
  const Eigen::MatrixXd p = rep.upscaler(rep.x);
  const Eigen::MatrixXd yc = rep.pair.coarse.predict(p);
  const Eigen::MatrixXd yf = rep.pair.fine.predict(rep.x);
  auto os = dir.open("upscale_points.csv");
  os << "rho_b,temperature,width,observable,fine_emulator,composite,parameter\n";
  for (Eigen::Index j = 0; j < rep.x.cols(); ++j)
    os << format_double(rep.x(0, j)) << ',' << format_double(rep.x(1, j)) << ',' << format_double(rep.x(2, j)) << ','
       << format_double(adsorption_observable(rep.x(0, j), rep.x(1, j), rep.x(2, j), ac.c1, ac.w0)) << ','
       << format_double(yf(0, j)) << ',' << format_double(yc(0, j)) << ',' << format_double(p(0, j)) << '\n';
  dir.write_json("upscale_report.json", {{"fine_r2", rep.pair.fine_r2},
                                         {"coarse_r2", rep.pair.coarse_r2},
                                         {"composite_rmse", rep.composite_rmse},
                                         {"constant_rmse", rep.constant_rmse},
                                         {"constant_parameter", rep.constant_parameter},
                                         {"direct_rmse", rep.direct_rmse},
                                         {"observable_range", rep.observable_range}});
  out.checks["upscaler_beats_constant"] = rep.composite_rmse < rep.constant_rmse;
  return out;
}

inline ExperimentOutcome run_mdcheck_experiment(const RunConfig& cfg, detail::OutputDir& dir,
                                                ExperimentOutcome& out) {
  const auto& m = cfg.mdcheck;
  const std::uint64_t ou_seed = derive_seed(cfg.seed, 1);
  out.seeds["ou"] = ou_seed;
  const auto ou = ou_velocity_series(m.ou.gamma, m.ou.kt_over_m, m.ou.dt, m.ou.samples, ou_seed, m.ou.particles);
  const auto ou_gk = green_kubo_diffusion(vacf(ou, m.ou.max_lag));
  const double d_exact = m.ou.kt_over_m / m.ou.gamma;
  const double ou_err = std::abs(ou_gk.plateau - d_exact) / d_exact;

  MdConfig md = m.md;
  md.seed = derive_seed(cfg.seed, 2);
  out.seeds["md"] = md.seed;
  const auto traj = lj_md_run(md);
  const auto series = vacf(traj, m.vacf_lag);
  const auto gk = green_kubo_diffusion(series);
  const auto msd = einstein_msd_diffusion(traj, m.msd_lag, m.msd_origin_stride);
  const double gk_msd = std::abs(gk.plateau - msd.diffusion) / msd.diffusion;

  auto os = dir.open("vacf.csv");
  os << "lag,time,vacf,running_integral\n";
  for (std::size_t k = 0; k < series.c.size(); ++k)
    os << k << ',' << format_double(static_cast<double>(k) * series.dt) << ',' << format_double(series.c[k]) << ','
       << format_double(gk.running[k]) << '\n';
  auto ms = dir.open("msd.csv");
  ms << "lag,time,msd\n";
  for (std::size_t k = 0; k < msd.msd.size(); ++k)
    ms << k << ',' << format_double(static_cast<double>(k) * traj.dt_frame) << ',' << format_double(msd.msd[k]) << '\n';

  out.checks["ou_analytic"] = ou_err <= m.ou.tolerance;
  out.checks["gk_matches_msd"] = gk_msd < m.gk_msd_tolerance;
  out.checks["energy_drift"] = traj.max_energy_drift() < m.drift_tolerance;
  out.checks["momentum"] = traj.max_momentum() < m.momentum_tolerance;
  json verdicts = json::object();
  for (const auto& [k, v] : out.checks) verdicts[k] = v ? "pass" : "fail";
  dir.write_json("mdcheck.json", {{"ou", {{"expected", d_exact}, {"green_kubo", ou_gk.plateau}, {"relative_error", ou_err}}},
                                  {"lj",
                                   {{"green_kubo", gk.plateau},
                                    {"msd", msd.diffusion},
                                    {"msd_exponent", msd.exponent},
                                    {"relative_difference", gk_msd},
                                    {"max_energy_drift", traj.max_energy_drift()},
                                    {"max_momentum", traj.max_momentum()}}},
                                  {"verdicts", verdicts}});
  return out;
}

/// Runs the configured experiment into dir and writes manifest.json last.
inline ExperimentOutcome run_experiment(const RunConfig& cfg, const std::filesystem::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOutcome out;
  detail::OutputDir dir(root, out);
  auto write_manifest = [&](const char* status) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json checks = json::object();
    for (const auto& [k, v] : out.checks) checks[k] = v;
    std::sort(out.files.begin(), out.files.end());
    std::ofstream os(root / "manifest.json", std::ios::binary);
    os << json{{"manifest_version", 1},
               {"version", kVersion},
               {"experiment", to_string(cfg.experiment)},
               {"status", status},
               {"seed", cfg.seed},
               {"seeds", out.seeds},
               {"config", to_json(cfg)},
               {"outputs", out.files},
               {"checks", checks},
               {"wall_time_seconds", wall}}
              .dump(2)
       << '\n';
  };
  try {
    switch (cfg.experiment) {
      case Experiment::Sample: run_sample(cfg, dir, out); break;
      case Experiment::Committee: run_committee_experiment(cfg, dir, out); break;
      case Experiment::Validity: run_validity_experiment(cfg, dir, out); break;
      case Experiment::AbTest: run_abtest_experiment(cfg, dir, out); break;
      case Experiment::Mix: run_mix_experiment(cfg, dir, out); break;
      case Experiment::Upscale: run_upscale_experiment(cfg, dir, out); break;
      case Experiment::MdCheck: run_mdcheck_experiment(cfg, dir, out); break;
    }
  } catch (...) {
    write_manifest("error");
    throw;
  }
  write_manifest(out.passed() ? "ok" : "checks_failed");
  return out;
}

}  // namespace scalebridge
