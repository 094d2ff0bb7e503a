#pragma once

// Coupled mixing run: every coarse step requests a diffusion closure per cell,
// served by database lookup, then the committee if it is confident, then a
// blocking truth evaluation. Forecast states are evaluated speculatively on the
// worker pool, and the committee is rebuilt after enough new truth data.

#include <mutex>
#include <set>

#include "scalebridge/committee.hpp"
#include "scalebridge/datastore.hpp"
#include "scalebridge/mixing.hpp"
#include "scalebridge/sampling.hpp"

namespace scalebridge {

enum class Scenario { Uniform, Heated };

inline std::string_view to_string(Scenario s) { return s == Scenario::Uniform ? "uniform" : "heated"; }

inline Scenario scenario_from_string(std::string_view s) {
  if (s == "uniform") return Scenario::Uniform;
  if (s == "heated") return Scenario::Heated;
  throw ArgumentError("unknown scenario '" + std::string(s) + "'");
}

struct MixingConfig {
  std::size_t cells = 48;
  std::size_t steps = 100;
  double dx = 1.0;
  double n1_left = 1e24, n2_left = 3e22;
  double n1_right = 3e22, n2_right = 3e23;
  double temperature = 100.0;
  double z1 = 1.0, z2 = 18.0;
  double heating = 150.0;      // eV added to the middle third by the final step
  double dt_fraction = 0.5;    // dt as a fraction of the initial stability limit
  std::size_t closure_output = 1;  // D12 drives interdiffusion

  void validate() const {
    if (cells < 8) throw ArgumentError("MixingConfig: cells must be >= 8");
    if (steps == 0) throw ArgumentError("MixingConfig: steps must be >= 1");
    if (!(dt_fraction > 0.0)) throw ArgumentError("MixingConfig: dt_fraction must be > 0");
  }
};

struct OrchestratorConfig {
  double tau = 0.008;
  std::size_t retrain_batch = 32;
  std::size_t lookup_tol_cells = 1;
  double key_resolution = 1e-3;
  std::size_t horizon = 3;
  std::size_t speculative_budget = 8;
  std::size_t workers = 1;
  std::size_t initial_points = 300;
  double rbf_lambda = 1e-8;
  CommitteeConfig committee;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tau > 0.0)) throw ArgumentError("OrchestratorConfig: tau must be > 0");
    if (retrain_batch < 1) throw ArgumentError("OrchestratorConfig: retrain_batch must be >= 1");
    if (!(key_resolution > 0.0)) throw ArgumentError("OrchestratorConfig: key_resolution must be > 0");
    committee.validate();
  }
};

class CallMap {
public:
  CallMap() = default;
  CallMap(std::size_t steps, std::size_t cells) : cells_(cells), grid_(steps * cells), filled_(steps * cells, 0) {}

  void set(std::size_t step, std::size_t cell, Provenance p) {
    grid_.at(step * cells_ + cell) = p;
    filled_[step * cells_ + cell] = 1;
  }
  Provenance at(std::size_t step, std::size_t cell) const { return grid_.at(step * cells_ + cell); }
  std::size_t steps() const { return cells_ == 0 ? 0 : grid_.size() / cells_; }
  std::size_t cells() const { return cells_; }
  bool complete() const { return std::all_of(filled_.begin(), filled_.end(), [](char c) { return c != 0; }); }

  std::size_t count(Provenance p) const {
    return static_cast<std::size_t>(std::count(grid_.begin(), grid_.end(), p));
  }
  std::size_t count_in_step(std::size_t step, Provenance p) const {
    return static_cast<std::size_t>(
        std::count(grid_.begin() + static_cast<std::ptrdiff_t>(step * cells_),
                   grid_.begin() + static_cast<std::ptrdiff_t>((step + 1) * cells_), p));
  }

  static int code(Provenance p) {
    switch (p) {
      case Provenance::TruthEval: return 0;
      case Provenance::Surrogate: return 1;
      case Provenance::DatabaseHit: return 2;
    }
    return 0;
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t s = 0; s < steps(); ++s) {
      for (std::size_t c = 0; c < cells_; ++c) os << (c ? "," : "") << code(at(s, c));
      os << '\n';
    }
  }

  static CallMap read_csv(std::istream& is) {
    std::vector<std::vector<Provenance>> rows;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<Provenance> row;
      for (const auto& f : split_csv_line(line)) {
        const int v = std::stoi(f);
        if (v < 0 || v > 2) throw IoError("CallMap::read_csv: bad code " + f);
        row.push_back(v == 0 ? Provenance::TruthEval : v == 1 ? Provenance::Surrogate : Provenance::DatabaseHit);
      }
      if (!rows.empty() && row.size() != rows.front().size()) throw IoError("CallMap::read_csv: ragged rows");
      rows.push_back(std::move(row));
    }
    CallMap m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t s = 0; s < rows.size(); ++s)
      for (std::size_t c = 0; c < rows[s].size(); ++c) m.set(s, c, rows[s][c]);
    return m;
  }

  /// Plain PGM: white = truth, grey = surrogate, black = database duplicate.
  void write_pgm(std::ostream& os) const {
    os << "P2\n" << cells_ << ' ' << steps() << "\n255\n";
    for (std::size_t s = 0; s < steps(); ++s) {
      for (std::size_t c = 0; c < cells_; ++c) {
        const int v = at(s, c) == Provenance::TruthEval ? 255 : at(s, c) == Provenance::Surrogate ? 128 : 0;
        os << (c ? " " : "") << v;
      }
      os << '\n';
    }
  }

private:
  std::size_t cells_ = 0;
  std::vector<Provenance> grid_;
  std::vector<char> filled_;
};

inline double dedup_rate(const CallMap& m) {
  const std::size_t n = m.steps() * m.cells();
  return n == 0 ? 0.0 : static_cast<double>(m.count(Provenance::DatabaseHit)) / static_cast<double>(n);
}

/// Per-cell linear extrapolation of (n1, n2, T) for k = 1..h steps ahead.
/// Result[k-1][cell] is a closure input vector.
inline std::vector<std::vector<std::vector<double>>> forecast_requests(const std::vector<MixingState>& history,
                                                                      std::size_t horizon) {
  std::vector<std::vector<std::vector<double>>> out;
  if (history.size() < 2 || horizon == 0) return out;
  const MixingState& cur = history.back();
  const MixingState& prev = history[history.size() - 2];
  auto extrapolate = [](double now, double before, double k) {
    const double v = now + k * (now - before);
    return std::max(v, 0.1 * now);
  };
  for (std::size_t k = 1; k <= horizon; ++k) {
    std::vector<std::vector<double>> cells;
    cells.reserve(cur.cells());
    const double kk = static_cast<double>(k);
    for (std::size_t i = 0; i < cur.cells(); ++i)
      cells.push_back({extrapolate(cur.n1[i], prev.n1[i], kk), extrapolate(cur.n2[i], prev.n2[i], kk),
                       extrapolate(cur.temperature[i], prev.temperature[i], kk), cur.z1, cur.z2});
    out.push_back(std::move(cells));
  }
  return out;
}

struct ClosureResult {
  std::vector<double> y;
  Provenance provenance = Provenance::TruthEval;
  double quality = 0.0;
};

struct RetrainEvent {
  std::int64_t step = 0;
  std::size_t data_size = 0;
  bool success = false;
  std::size_t probes = 0;
  double probe_improved_fraction = 0.0;  // share of probes whose spread decreased
};

class Orchestrator {
public:
  Orchestrator(TruthModelPtr truth, Domain domain, OrchestratorConfig cfg)
      : truth_(std::move(truth)),
        domain_(std::move(domain)),
        cfg_(cfg),
        store_(domain_, 0, cfg.key_resolution),
        pool_(cfg.workers),
        retrain_batch_(cfg.retrain_batch) {
    cfg_.validate();
    trainer_ = Trainer::rbf(cfg_.rbf_lambda);
    trainer_.transform = TargetTransform::Log10;
  }

  /// Initial design: LHS truth evaluations on the pool, stored, then the first committee.
  void initialize() {
    const auto xs = latin_hypercube(domain_, cfg_.initial_points, derive_seed(cfg_.seed, 1));
    std::vector<std::future<std::vector<double>>> futs;
    for (std::size_t i = 0; i < xs.size(); ++i)
      futs.push_back(pool_.submit([this, &xs, i] { return truth_->evaluate(xs[i], derive_seed(cfg_.seed, 10 + i)); }));
    for (std::size_t i = 0; i < xs.size(); ++i) store_.put(xs[i], futs[i].get(), Provenance::TruthEval, -1);
    initial_evals_ = xs.size();
    auto c = std::make_shared<const Committee>(build(0));
    std::lock_guard lock(committee_mutex_);
    committee_ = std::move(c);
  }

  std::shared_ptr<const Committee> committee() const {
    std::lock_guard lock(committee_mutex_);
    return committee_;
  }

  Store& store() noexcept { return store_; }
  const Store& store() const noexcept { return store_; }
  const OrchestratorConfig& config() const noexcept { return cfg_; }
  const Trainer& trainer() const noexcept { return trainer_; }

  ClosureResult closure_for_cell(std::span<const double> x, std::int64_t step, std::size_t cell = 0) {
    if (auto hit = store_.lookup(x, cfg_.lookup_tol_cells)) return {hit->y, Provenance::DatabaseHit, 0.0};
    const auto c = committee();
    if (!c) throw ArgumentError("closure_for_cell: committee not built; call initialize()");
    const auto pred = committee_predict(*c, x);
    if (is_confident(pred, cfg_.tau)) return {pred.mean, Provenance::Surrogate, pred.quality};
    std::vector<double> y;
    try {
      y = evaluate_truth(x);
    } catch (const Error&) {
      try {
        y = evaluate_truth(x);
      } catch (const Error& e) {
        throw Error("closure_for_cell: truth model failed at step " + std::to_string(step) + ", cell " +
                    std::to_string(cell) + ": " + e.what());
      }
    }
    store_.put(x, y, Provenance::TruthEval, step);
    ++new_truth_;
    ++truth_calls_;
    unconfident_.emplace_back(x.begin(), x.end());
    return {y, Provenance::TruthEval, 0.0};
  }

  /// Submits forecast points that are neither stored nor confidently predicted, nearest
  /// horizon first and least confident first, up to the speculative budget.
  std::size_t speculative_prefetch(const std::vector<std::vector<std::vector<double>>>& forecast, std::int64_t step) {
    if (forecast.empty() || cfg_.speculative_budget == 0) return 0;
    const auto c = committee();
    std::size_t issued = 0;
    std::set<QuantizedKey> batch;
    for (const auto& horizon : forecast) {
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t i = 0; i < horizon.size(); ++i) {
        const auto& x = horizon[i];
        const auto key = store_.key(x);
        if (batch.count(key) || pending_keys_.count(key)) continue;
        if (store_.lookup(x, cfg_.lookup_tol_cells, false)) continue;
        const auto pred = committee_predict(*c, x);
        if (is_confident(pred, cfg_.tau)) continue;
        batch.insert(key);
        order.emplace_back(-pred.quality, i);
      }
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [negq, i] : order) {
        if (issued >= cfg_.speculative_budget) return issued;
        const auto x = horizon[i];
        const std::uint64_t seed = derive_seed(cfg_.seed, 1'000'000'000ULL + spec_counter_++);
        pending_.push_back({x, pool_.submit([this, x, seed] { return truth_->evaluate(x, seed); }), step});
        pending_keys_.insert(store_.key(x));
        ++issued;
        ++speculative_calls_;
      }
    }
    return issued;
  }

  /// Speculative results join the store at step boundaries, in submission order.
  std::size_t collect_speculative() {
    std::size_t n = 0;
    for (auto& p : pending_) {
      const auto y = p.result.get();
      store_.put(p.x, y, Provenance::TruthEval, p.step);
      speculative_keys_.insert(store_.key(p.x));
      ++new_truth_;
      ++n;
    }
    pending_.clear();
    pending_keys_.clear();
    return n;
  }

  bool retrain_if_due(std::int64_t step) {
    if (new_truth_ < retrain_batch_) return false;
    RetrainEvent ev;
    ev.step = step;
    const auto old = committee();
    std::vector<std::vector<double>> probes;
    const std::size_t stride = std::max<std::size_t>(1, unconfident_.size() / 64);
    for (std::size_t i = 0; i < unconfident_.size(); i += stride) probes.push_back(unconfident_[i]);
    try {
      auto next = std::make_shared<const Committee>(build(++builds_));
      ev.data_size = next->trained_on_count;
      ev.success = true;
      ev.probes = probes.size();
      std::size_t improved = 0;
      for (const auto& x : probes)
        if (committee_predict(*next, x).quality < committee_predict(*old, x).quality) ++improved;
      ev.probe_improved_fraction = probes.empty() ? 0.0 : static_cast<double>(improved) / static_cast<double>(probes.size());
      {
        std::lock_guard lock(committee_mutex_);
        committee_ = std::move(next);
      }
      new_truth_ = 0;
      unconfident_.clear();
    } catch (const CommitteeBuildError&) {
      retrain_batch_ *= 2;
    }
    events_.push_back(ev);
    return ev.success;
  }

  /// True if a stored speculative result would serve x.
  bool served_by_speculation(std::span<const double> x) const {
    const auto center = store_.key(x);
    const auto t = static_cast<std::int64_t>(cfg_.lookup_tol_cells);
    for (const auto& k : speculative_keys_) {
      bool near = true;
      for (std::size_t i = 0; i < k.cells.size() && near; ++i) near = std::llabs(k.cells[i] - center.cells[i]) <= t;
      if (near) return true;
    }
    return false;
  }

  std::size_t initial_evals() const noexcept { return initial_evals_; }
  std::size_t truth_calls() const noexcept { return truth_calls_; }
  std::size_t speculative_calls() const noexcept { return speculative_calls_; }
  std::size_t retrain_batch() const noexcept { return retrain_batch_; }
  const std::vector<RetrainEvent>& retrain_events() const noexcept { return events_; }

private:
  struct Pending {
    std::vector<double> x;
    std::future<std::vector<double>> result;
    std::int64_t step;
  };

  std::vector<double> evaluate_truth(std::span<const double> x) {
    return truth_->evaluate(x, derive_seed(cfg_.seed, 500'000'000ULL + truth_counter_++));
  }

  Committee build(std::size_t index) {
    Dataset data(domain_);
    for (const auto& [key, r] : store_.snapshot()) data.add(truth_point(r.x, r.y, r.step));
    CommitteeConfig cc = cfg_.committee;
    cc.seed = derive_seed(cfg_.seed, 100 + index);
    return build_committee(data, trainer_, cc, &pool_);
  }

  TruthModelPtr truth_;
  Domain domain_;
  OrchestratorConfig cfg_;
  Trainer trainer_;
  Store store_;
  WorkerPool pool_;
  mutable std::mutex committee_mutex_;
  std::shared_ptr<const Committee> committee_;
  std::vector<Pending> pending_;
  std::set<QuantizedKey> pending_keys_;
  std::set<QuantizedKey> speculative_keys_;
  std::vector<std::vector<double>> unconfident_;
  std::vector<RetrainEvent> events_;
  std::size_t retrain_batch_;
  std::size_t new_truth_ = 0;
  std::size_t builds_ = 0;
  std::size_t initial_evals_ = 0;
  std::size_t truth_calls_ = 0;
  std::size_t speculative_calls_ = 0;
  std::uint64_t truth_counter_ = 0;
  std::uint64_t spec_counter_ = 0;
};

struct MixingAccounting {
  std::size_t requests = 0;
  std::size_t truth = 0;
  std::size_t surrogate = 0;
  std::size_t db_hits = 0;
  std::size_t speculative = 0;
  std::size_t speculative_served = 0;  // database hits that came from speculative results
  std::size_t initial_evals = 0;
  double dedup_rate = 0.0;
  double nominal_cost = 0.0;
  double total_cost = 0.0;             // (truth + speculative) * nominal_cost
  double blocking_per_step = 0.0;
  double max_mass_error = 0.0;         // worst per-step relative change of a species total
  std::size_t substeps = 0;
  std::size_t final_retrain_batch = 0;
  std::vector<RetrainEvent> retrains;
};

struct MixingRun {
  CallMap call_map;
  std::vector<MixingState> states;  // state before each step, then the final state
  std::vector<std::vector<double>> closure;  // per step, the D field used
  MixingAccounting accounting;
};

inline MixingState initial_mixing_state(const MixingConfig& m) {
  return interface_state(m.cells, m.dx, m.n1_left, m.n2_left, m.n1_right, m.n2_right, m.temperature, m.z1, m.z2);
}

inline void apply_heating(MixingState& s, const MixingConfig& m, Scenario scenario, std::size_t step) {
  if (scenario != Scenario::Heated) return;
  const std::size_t lo = m.cells / 3, hi = 2 * m.cells / 3;
  const double dT = m.heating * static_cast<double>(step) / static_cast<double>(m.steps);
  for (std::size_t i = lo; i < hi; ++i) s.temperature[i] = m.temperature + dT;
}

inline MixingRun run_mixing_experiment(Scenario scenario, const MixingConfig& mcfg, const OrchestratorConfig& ocfg,
                                       TruthModelPtr truth = std::make_shared<SyntheticClosureModel>(),
                                       Domain domain = icf_domain()) {
  mcfg.validate();
  Orchestrator orch(truth, domain, ocfg);
  orch.initialize();

  MixingRun run;
  run.call_map = CallMap(mcfg.steps, mcfg.cells);
  MixingState state = initial_mixing_state(mcfg);

  // Fixed outer step from the initial closure field; sub-cycling covers later stiffening.
  std::vector<double> d0(mcfg.cells);
  for (std::size_t i = 0; i < mcfg.cells; ++i) d0[i] = truth->evaluate(state.closure_input(i)).at(mcfg.closure_output);
  const double dt = mcfg.dt_fraction * stable_dt(mcfg.dx, d0);

  std::vector<MixingState> history;
  auto& acc = run.accounting;
  for (std::size_t step = 0; step < mcfg.steps; ++step) {
    const auto si = static_cast<std::int64_t>(step);
    apply_heating(state, mcfg, scenario, step);
    state.step = si;
    history.push_back(state);
    if (history.size() > 2) history.erase(history.begin());
    run.states.push_back(state);

    orch.speculative_prefetch(forecast_requests(history, ocfg.horizon), si);

    std::vector<double> dfield(mcfg.cells);
    for (std::size_t i = 0; i < mcfg.cells; ++i) {
      const auto x = state.closure_input(i);
      const auto r = orch.closure_for_cell(x, si, i);
      run.call_map.set(step, i, r.provenance);
      if (r.provenance == Provenance::DatabaseHit && orch.served_by_speculation(x)) ++acc.speculative_served;
      dfield[i] = r.y.at(mcfg.closure_output);
    }
    run.closure.push_back(dfield);

    const double m1 = state.total_n1(), m2 = state.total_n2();
    const auto nsub = static_cast<std::size_t>(std::ceil(dt / stable_dt(mcfg.dx, dfield)));
    const std::size_t sub = std::max<std::size_t>(1, nsub);
    for (std::size_t k = 0; k < sub; ++k) state = coarse_step(state, dfield, dt / static_cast<double>(sub));
    acc.substeps += sub;
    acc.max_mass_error = std::max({acc.max_mass_error, std::abs(state.total_n1() - m1) / m1,
                                   std::abs(state.total_n2() - m2) / m2});
    state.step = si + 1;

    orch.collect_speculative();
    orch.retrain_if_due(si);
  }
  run.states.push_back(state);

  acc.requests = mcfg.steps * mcfg.cells;
  acc.truth = run.call_map.count(Provenance::TruthEval);
  acc.surrogate = run.call_map.count(Provenance::Surrogate);
  acc.db_hits = run.call_map.count(Provenance::DatabaseHit);
  acc.speculative = orch.speculative_calls();
  acc.initial_evals = orch.initial_evals();
  acc.dedup_rate = dedup_rate(run.call_map);
  acc.nominal_cost = truth->nominal_cost();
  acc.total_cost = static_cast<double>(acc.truth + acc.speculative) * acc.nominal_cost;
  acc.blocking_per_step = static_cast<double>(acc.truth) / static_cast<double>(mcfg.steps);
  acc.final_retrain_batch = orch.retrain_batch();
  acc.retrains = orch.retrain_events();
  return run;
}

inline json to_json(const MixingAccounting& a) {
  json retrains = json::array();
  for (const auto& e : a.retrains)
    retrains.push_back({{"step", e.step},
                        {"data_size", e.data_size},
                        {"success", e.success},
                        {"probes", e.probes},
                        {"probe_improved_fraction", e.probe_improved_fraction}});
  return json{{"requests", a.requests},
              {"truth", a.truth},
              {"surrogate", a.surrogate},
              {"db_hits", a.db_hits},
              {"speculative", a.speculative},
              {"speculative_served", a.speculative_served},
              {"initial_evals", a.initial_evals},
              {"dedup_rate", a.dedup_rate},
              {"nominal_cost", a.nominal_cost},
              {"total_cost", a.total_cost},
              {"blocking_per_step", a.blocking_per_step},
              {"max_mass_error", a.max_mass_error},
              {"substeps", a.substeps},
              {"final_retrain_batch", a.final_retrain_batch},
              {"retrains", retrains}};
}

inline void write_states_csv(std::ostream& os, const MixingRun& run) {
  os << "step,cell,n1,n2,T,D\n";
  for (std::size_t s = 0; s < run.closure.size(); ++s) {
    const auto& st = run.states[s];
    for (std::size_t i = 0; i < st.cells(); ++i)
      os << s << ',' << i << ',' << format_double(st.n1[i]) << ',' << format_double(st.n2[i]) << ','
         << format_double(st.temperature[i]) << ',' << format_double(run.closure[s][i]) << '\n';
  }
}

}  // namespace scalebridge
