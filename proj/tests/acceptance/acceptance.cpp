// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scalebridge.hpp"

namespace fs = std::filesystem;
using namespace scalebridge;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1 ---------------------------------------------------------------------------
Verdict committee_gate() {
  Verdict v;
  RosenbrockModel m(2);
  const Dataset data = evaluate_all(m, m.domain(), latin_hypercube(m.domain(), 200, 1));
  CommitteeConfig cfg;
  cfg.seed = 3;
  const Committee a = build_committee(data, Trainer::rbf(1e-10), cfg);
  const Committee b = build_committee(data, Trainer::rbf(1e-10), cfg);
  double worst = 1.0;
  for (double r : a.calibration_scores) worst = std::min(worst, r);
  v.detail << "members " << a.size() << ", min calibration R2 " << fmt(worst);
  v.require(a.size() == 5, "exactly 5 members");
  v.require(worst >= 0.7, "calibration R2 >= 0.7");
  v.require(a == b, "deterministic per seed");

  Dataset noise(m.domain());
  Rng rng(5);
  for (const auto& x : latin_hypercube(m.domain(), 200, 2)) noise.add(truth_point(x, {standard_normal(rng)}));
  bool failed = false;
  try {
    build_committee(noise, Trainer::rbf(1e-10), cfg);
  } catch (const CommitteeBuildError& e) {
    failed = true;
    v.detail << "; white noise rejected (best R2 " << fmt(e.best_r2()) << ")";
  }
  v.require(failed, "white noise raises a committee-build error");
  return v;
}

// 2 ---------------------------------------------------------------------------
Verdict sampling_ab() {
  Verdict v;
  std::vector<double> near_opt, near_uni, glob_opt, glob_uni;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AbTestConfig cfg;
    cfg.seed = seed;
    const AbResult r = run_sampling_ab(cfg);
    near_opt.push_back(r.optimizer.final_near);
    near_uni.push_back(r.uniform.final_near);
    glob_opt.push_back(r.optimizer.final_global);
    glob_uni.push_back(r.uniform.final_global);
  }
  const double no = median(near_opt), nu = median(near_uni), go = median(glob_opt), gu = median(glob_uni);
  const double ratio = go / gu;
  v.detail << "8-D, 600 evals: near-minimizer error optimizer " << fmt(no) << " vs uniform " << fmt(nu)
           << "; global " << fmt(go) << " vs " << fmt(gu) << " (ratio " << fmt(ratio) << ")";
  v.require(no < nu, "optimizer more accurate near the minimizer");
  v.require(ratio >= 0.5 && ratio <= 2.0, "global error within 2x");
  return v;
}

// 3 ---------------------------------------------------------------------------
Verdict validity_convergence() {
  Verdict v;
  const RunConfig defaults;
  RosenbrockModel m(2);
  auto truth = std::make_shared<RosenbrockModel>(2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ValidityConfig vc = defaults.validity.validity;
    vc.seed = seed;
    SparsitySampler sampler(truth, m.domain(), derive_seed(seed, 1));
    const auto r = validity_loop(m, m.domain(), Trainer::rbf(defaults.validity.rbf_lambda), sampler, vc);
    const auto& recs = r.history.records;
    std::size_t ok = 0;
    for (std::size_t i = 1; i < recs.size(); ++i) ok += recs[i].test_score <= recs[i - 1].test_score;
    const double frac = recs.size() > 1 ? static_cast<double>(ok) / static_cast<double>(recs.size() - 1) : 1.0;
    v.detail << (seed ? "; " : "") << "seed " << seed << ": " << recs.size() << " it, score "
             << fmt(recs.back().test_score) << ", non-increasing " << fmt(frac);
    v.require(r.converged, "converged (seed " + std::to_string(seed) + ")");
    v.require(recs.back().test_score <= vc.tol, "final score <= tol");
    v.require(frac >= 0.8, "non-increasing in >= 80% of iterations");
  }
  return v;
}

// 4 ---------------------------------------------------------------------------
Verdict green_kubo() {
  Verdict v;
  const MdCheckSection m = RunConfig{}.mdcheck;
  std::vector<double> ou_d;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ou = ou_velocity_series(2.0, 1.0, m.ou.dt, m.ou.samples, seed);
    ou_d.push_back(green_kubo_diffusion(vacf(ou, m.ou.max_lag)).plateau);
  }
  MdConfig md = m.md;
  md.seed = 11;
  const auto traj = lj_md_run(md);
  const double gk = green_kubo_diffusion(vacf(traj, m.vacf_lag)).plateau;
  const auto msd = einstein_msd_diffusion(traj, m.msd_lag, m.msd_origin_stride);
  const double rel = std::abs(gk - msd.diffusion) / msd.diffusion;
  v.detail << "OU D " << fmt(ou_d[0]) << ", " << fmt(ou_d[1]) << ", " << fmt(ou_d[2]) << " (exact 0.5); LJ D_GK "
           << fmt(gk) << " vs D_MSD " << fmt(msd.diffusion) << " (" << fmt(100 * rel) << "%); drift "
           << fmt(traj.max_energy_drift()) << "; momentum " << fmt(traj.max_momentum());
  for (double d : ou_d) v.require(std::abs(d - 0.5) <= 0.025, "OU within 5%");
  v.require(rel < 0.10, "GK vs MSD within 10%");
  v.require(traj.max_energy_drift() < 1e-3, "energy drift < 1e-3");
  v.require(traj.max_momentum() < 1e-10, "momentum < 1e-10");
  return v;
}

// 5 ---------------------------------------------------------------------------
Verdict coupled_mixing() {
  Verdict v;
  MixingConfig mc;
  OrchestratorConfig oc;
  oc.speculative_budget = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    oc.seed = seed;
    const MixingRun heated = run_mixing_experiment(Scenario::Heated, mc, oc);
    const MixingRun uniform = run_mixing_experiment(Scenario::Uniform, mc, oc);
    const auto& h = heated.accounting;
    double worst_probe = 1.0;
    std::size_t probed = 0;
    for (const auto& e : h.retrains)
      if (e.success && e.probes > 0) {
        worst_probe = std::min(worst_probe, e.probe_improved_fraction);
        ++probed;
      }
    v.detail << (seed ? "; " : "") << "seed " << seed << ": truth heated " << h.truth << " vs uniform "
             << uniform.accounting.truth << ", " << probed << " retrains, worst probe improvement " << fmt(worst_probe);
    v.require(h.truth > uniform.accounting.truth, "heated has more TruthEval cells");
    v.require(probed > 0 && worst_probe >= 0.8, "retrain lowers spread on >= 80% of probes");
    v.require(h.max_mass_error <= 1e-10 && uniform.accounting.max_mass_error <= 1e-10, "mass conserved");
  }

  const std::size_t cells = 200;
  MixingState s = interface_state(cells, 1.0, 1.0, 0.0, 0.2, 0.0, 10.0);
  const std::vector<double> d(cells, 1.0);
  for (int k = 0; k < 100; ++k) s = coarse_step(s, d, 0.4);
  double err2 = 0.0, dev2 = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double x = static_cast<double>(i) + 0.5;
    const double exact = 0.2 + 0.4 * std::erfc((x - 100.0) / (2.0 * std::sqrt(s.t)));
    err2 += (s.n1[i] - exact) * (s.n1[i] - exact);
    dev2 += (exact - 0.6) * (exact - 0.6);
  }
  const double l2 = std::sqrt(err2 / dev2);
  v.detail << "; erf profile L2 " << fmt(100 * l2) << "%";
  v.require(l2 < 0.02, "erf profile within 2%");
  return v;
}

// 6 ---------------------------------------------------------------------------
Verdict datastore() {
  Verdict v;
  const Domain unit = Domain::box(3, 0, 1);
  ReplicaSet rs(3, unit, 1e-3, 0.5, 7);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(3);
    for (double& c : x) c = std::floor(uniform01(rng) * 30) / 30 + 1e-4;
    rs.node(rng() % 3).put(x, std::vector<double>{uniform01(rng)});
    if (i % 50 == 0) rs.sync_round();
  }
  const std::size_t rounds = rs.sync_until_converged();
  std::ostringstream a, b, c;
  rs.node(0).write_csv(a);
  rs.node(1).write_csv(b);
  rs.node(2).write_csv(c);
  v.detail << "1000 writes on " << rs.node(0).size() << " keys converged in " << rounds << " rounds";
  v.require(a.str() == b.str() && b.str() == c.str(), "byte-identical replicas");

  std::size_t bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 3;
    ReplicaSet r(n, unit, 1e-3, 0.6 * uniform01(rng), rng());
    const int writes = 1 + static_cast<int>(rng() % 80);
    for (int w = 0; w < writes; ++w) {
      const std::vector<double> x{(rng() % 6) / 6.0, (rng() % 6) / 6.0, 0.5};
      r.node(rng() % n).put(x, std::vector<double>{uniform01(rng)});
      if (rng() % 4 == 0) r.sync_round();
    }
    r.sync_until_converged(100000);
    for (std::size_t i = 0; i < n; ++i) {
      const Store& s = r.node(i);
      Store twice(s);
      for (const auto& rec : s.log()) twice.apply(rec);
      if (twice.snapshot() != s.snapshot()) ++bad;
      if (Store::replay(unit, s.node_id(), 1e-3, s.log()).snapshot() != s.snapshot()) ++bad;
    }
  }
  v.detail << "; 200 randomized histories, " << bad << " idempotence/replay violations";
  v.require(bad == 0, "idempotence and replay");

  Store store(unit);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> x{(i % 250) / 250.0, 0.5, 0.5};
    if (!store.lookup(x)) store.put(x, std::vector<double>{1.0});
  }
  v.detail << "; repeated-query dedup " << fmt(dedup_rate(store));
  v.require(dedup_rate(store) >= 0.5, "dedup >= 0.5");
  return v;
}

// 7 ---------------------------------------------------------------------------
Verdict active_learning() {
  Verdict v;
  RosenbrockModel m(2);
  ActiveLearningConfig cfg;
  cfg.rmse_target = 5.0;
  cfg.max_evals = 1200;
  const auto r = acquisition_efficiency(m, m.domain(), cfg, {0, 1, 2, 3, 4});
  std::size_t within_tenth = 0;
  for (double x : r.ratios) within_tenth += x <= 0.1;
  v.detail << "evaluations to RMSE 5: guided";
  for (auto g : r.guided) v.detail << ' ' << g;
  v.detail << ", uniform";
  for (auto u : r.uniform) v.detail << ' ' << u;
  v.detail << "; median ratio " << fmt(r.median_ratio) << "; seeds at <= 10%: " << within_tenth << "/5 (reported only)";
  v.require(r.median_ratio <= 0.5, "median ratio <= 0.5");
  return v;
}

// 8 ---------------------------------------------------------------------------
Verdict upscaler() {
  Verdict v;
  Rng rng(2);
  Eigen::MatrixXd x(2, 300), y(2, 300);
  for (int j = 0; j < 300; ++j) {
    x(0, j) = uniform01(rng);
    x(1, j) = uniform01(rng);
    y(0, j) = x(0, j) + 0.2 * x(0, j) * x(0, j);
    y(1, j) = x(1, j) + 0.3 * x(0, j);
  }
  const EmulatorPair same = train_emulators(x, y, x, y);
  const double identity = (train_upscaler(same, x)(x) - x).colwise().norm().mean();

  const int n = 200;
  Eigen::MatrixXd xs(1, n), ys(1, n), p(1, n);
  for (int j = 0; j < n; ++j) {
    xs(0, j) = (j + 0.5) / n;
    ys(0, j) = std::sin(M_PI * xs(0, j));
    p(0, j) = -0.1 + 1.2 * (j + 0.5) / n;
  }
  const EmulatorPair pair = train_emulators(xs, ys, p, p);
  const Eigen::VectorXd fine0 = pair.fine.parameters(), coarse0 = pair.coarse.parameters();
  const Upscaler u = train_upscaler(pair, xs);
  const double sin_rmse = composite_rmse(pair, u, xs);
  const bool frozen = pair.fine.parameters() == fine0 && pair.coarse.parameters() == coarse0;

  EmulatorPair tiny;
  tiny.fine = Mlp({2, 3, 2}, 1.0, 1);
  tiny.coarse = Mlp({2, 4, 2}, 1.0, 2);
  const Eigen::MatrixXd tx = Eigen::MatrixXd::Random(2, 6), target = Eigen::MatrixXd::Random(2, 6);
  TrainConfig tc;
  tc.hidden = {3};
  Mlp net = make_upscaler_net(tiny, tx, tc);
  const Eigen::MatrixXd txs = net.standardize_inputs(tx);
  Eigen::VectorXd g;
  composite_loss(net, tiny.coarse, txs, target, &g);
  const Eigen::VectorXd p0 = net.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Eigen::VectorXd q = p0;
    q(i) += 1e-6;
    net.set_parameters(q);
    const double fp = composite_loss(net, tiny.coarse, txs, target, nullptr);
    q(i) -= 2e-6;
    net.set_parameters(q);
    const double fm = composite_loss(net, tiny.coarse, txs, target, nullptr);
    const double fd = (fp - fm) / 2e-6;
    worst = std::max(worst, std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)));
  }
  v.detail << "identity error " << fmt(identity) << "; sin composite RMSE " << fmt(sin_rmse) << "; emulators "
           << (frozen ? "bitwise unchanged" : "CHANGED") << "; gradient rel. error " << fmt(worst);
  v.require(identity < 0.05, "identity recovery");
  v.require(sin_rmse < 0.02, "sin composite RMSE < 0.02");
  v.require(frozen, "emulators frozen");
  v.require(worst < 1e-4, "composite gradient");
  return v;
}

// 9 ---------------------------------------------------------------------------
Verdict numerics() {
  Verdict v;
  Rng rng(4);
  double mlp_worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Mlp net({3, 6, 5, 2}, 1.0, rng());
    const Eigen::MatrixXd xs = Eigen::MatrixXd::Random(3, 8), ys = Eigen::MatrixXd::Random(2, 8);
    Eigen::VectorXd g;
    net.loss_and_gradient(xs, ys, &g);
    Mlp probe = net;
    const Eigen::VectorXd p0 = net.parameters();
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
      Eigen::VectorXd q = p0;
      q(i) += 1e-6;
      probe.set_parameters(q);
      const double fp = probe.loss_and_gradient(xs, ys, nullptr);
      q(i) -= 2e-6;
      probe.set_parameters(q);
      const double fm = probe.loss_and_gradient(xs, ys, nullptr);
      const double fd = (fp - fm) / 2e-6;
      mlp_worst = std::max(mlp_worst, std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)));
    }
  }

  double rbf_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng() % 4, n = d + 2 + rng() % 60;
    const auto xs = latin_hypercube(Domain::box(d, 0, 1), n, rng());
    std::vector<double> ys;
    for (const auto& x : xs) ys.push_back(std::sin(3 * x[0]) + (d > 1 ? x[1] * x[1] : 0.0));
    const RbfSurrogate s = rbf_fit(xs, ys, 0.0);
    for (std::size_t i = 0; i < n; ++i) rbf_worst = std::max(rbf_worst, std::abs(rbf_predict(s, xs[i]) - ys[i]));
  }

  std::size_t lhs_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng() % 8, n = 1 + rng() % 300;
    const auto u = latin_hypercube_unit(d, n, rng());
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<int> hits(n, 0);
      for (const auto& p : u) ++hits[std::min<std::size_t>(n - 1, static_cast<std::size_t>(p[k] * static_cast<double>(n)))];
      lhs_bad += static_cast<std::size_t>(std::count_if(hits.begin(), hits.end(), [](int h) { return h != 1; }));
    }
  }
  v.detail << "MLP gradient rel. error " << fmt(mlp_worst) << "; RBF interpolation residual " << fmt(rbf_worst)
           << "; LHS strata violations " << lhs_bad << " over 100 designs";
  v.require(mlp_worst < 1e-4, "MLP gradient");
  v.require(rbf_worst < 1e-8, "RBF residual");
  v.require(lhs_bad == 0, "LHS stratification");
  return v;
}

// 10 --------------------------------------------------------------------------
std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

json manifest_without_volatile(const std::string& text) {
  json m = json::parse(text);
  m.erase("wall_time_seconds");
  m["config"].erase("output_dir");
  return m;
}

Verdict reproducibility(const std::string& cli, const fs::path& configs, const fs::path& work) {
  Verdict v;
  if (cli.empty() || !fs::exists(cli)) {
    v.require(false, "runner binary not found (pass --cli)");
    return v;
  }
  std::size_t compared = 0;
  for (const char* name : {"sample_lhs", "sample_active", "committee", "validity", "abtest", "mix", "upscale", "mdcheck"}) {
    const fs::path cfg = configs / (std::string(name) + ".json");
    const fs::path a = work / name / "first", b = work / name / "rerun";
    fs::remove_all(work / name);
    const std::string quiet = " >> " + (work / (std::string(name) + ".log")).string() + " 2>&1";
    fs::create_directories(work / name);
    const int rc1 = std::system(("\"" + cli + "\" -c \"" + cfg.string() + "\" -o \"" + a.string() + "\" -w 1" + quiet).c_str());
    const int rc2 = std::system(("\"" + cli + "\" -c \"" + (a / "manifest.json").string() + "\" -o \"" + b.string() +
                                 "\" -w 1" + quiet).c_str());
    auto fa = slurp_tree(a), fb = slurp_tree(b);
    bool same = rc1 == rc2 && fa.size() == fb.size() && fa.count("manifest.json") && fb.count("manifest.json");
    if (same) {
      same = manifest_without_volatile(fa["manifest.json"]) == manifest_without_volatile(fb["manifest.json"]);
      fa.erase("manifest.json");
      fb.erase("manifest.json");
      same = same && fa == fb;
    }
    compared += fa.size();
    v.require(same, std::string(name) + " rerun differs");
    v.require(rc1 == 0, std::string(name) + " exited " + std::to_string(rc1));
  }
  v.detail << "8 configs rerun from their manifests with one worker, " << compared
           << " output files compared byte-for-byte";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalebridge acceptance suite"};
  std::string cli, workdir = "acceptance_runs", configs = SCALEBRIDGE_CONFIG_DIR;
  std::vector<int> only;
  app.add_option("--cli", cli, "path to scalebridge_cli");
  app.add_option("--workdir", workdir, "scratch directory for reproducibility runs");
  app.add_option("--configs", configs, "directory holding the shipped configs");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"committee_gate", committee_gate},
      {"optimizer_vs_uniform_sampling", sampling_ab},
      {"validity_convergence", validity_convergence},
      {"green_kubo", green_kubo},
      {"coupled_mixing", coupled_mixing},
      {"datastore", datastore},
      {"active_learning_efficiency", active_learning},
      {"upscaler", upscaler},
      {"numerics_hygiene", numerics},
      {"reproducibility", [&] { return reproducibility(cli, configs, workdir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << id << ' ' << criteria[i].first << " (" << fmt(secs) << " s): "
              << v.detail.str() << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria" << std::endl;
  return failures ? 1 : 0;
}
