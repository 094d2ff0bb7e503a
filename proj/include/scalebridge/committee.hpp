#pragma once

// Query-by-committee ensembles: members trained on random subsets, each gated by
// its R^2 on a withheld calibration split; disagreement is the uncertainty.

#include <filesystem>
#include <optional>

#include "scalebridge/surrogate.hpp"
#include "scalebridge/worker_pool.hpp"

namespace scalebridge {

class CommitteeBuildError : public Error {
public:
  CommitteeBuildError(double best_r2, std::size_t accepted, const std::string& what)
      : Error(what), best_r2_(best_r2), accepted_(accepted) {}
  double best_r2() const noexcept { return best_r2_; }
  std::size_t accepted() const noexcept { return accepted_; }

private:
  double best_r2_;
  std::size_t accepted_;
};

struct CommitteeConfig {
  std::size_t n_ensemble = 5;
  double r2_threshold = 0.7;
  double calibration_fraction = 0.10;
  double subset_fraction = 0.8;
  std::size_t max_attempts = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_ensemble < 2) throw ArgumentError("CommitteeConfig: n_ensemble must be >= 2");
    if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0))
      throw ArgumentError("CommitteeConfig: calibration_fraction must lie in (0, 1)");
    if (!(subset_fraction > 0.0 && subset_fraction < 1.0))
      throw ArgumentError("CommitteeConfig: subset_fraction must lie in (0, 1)");
    if (max_attempts < n_ensemble) throw ArgumentError("CommitteeConfig: max_attempts must be >= n_ensemble");
  }
  bool operator==(const CommitteeConfig&) const = default;
};

struct Committee {
  std::vector<Surrogate> members;
  std::vector<double> calibration_scores;  // per member, min R^2 over outputs
  std::size_t trained_on_count = 0;
  std::vector<double> output_scale;        // IQR of (transformed) training targets per output
  std::size_t rejected_attempts = 0;
  CommitteeConfig config;

  std::size_t size() const { return members.size(); }
  bool operator==(const Committee&) const = default;
};

struct CommitteePrediction {
  std::vector<double> mean;    // model units
  std::vector<double> spread;  // population std dev across members, fitted target space
  double quality = 0.0;        // s_i = max_k spread_k / output_scale_k
};

namespace detail {

struct AttemptResult {
  std::optional<Surrogate> member;
  double score = -std::numeric_limits<double>::infinity();
};

inline AttemptResult committee_attempt(const Dataset& data, const Trainer& trainer, const CommitteeConfig& cfg,
                                       std::size_t attempt) {
  const std::uint64_t seed = derive_seed(cfg.seed, attempt);
  // Random subset without replacement, then a calibration split of that subset.
  auto [rest, subset] = split_random(data, cfg.subset_fraction, derive_seed(seed, 1));
  auto [train, calib] = split_random(subset, cfg.calibration_fraction, derive_seed(seed, 2));
  AttemptResult r;
  try {
    Surrogate s = trainer.fit(train, derive_seed(seed, 3));
    r.score = min_r_squared(s, calib);
    r.member = std::move(s);
  } catch (const FitError&) {
  } catch (const TrainingDiverged&) {
  } catch (const DegenerateMetric&) {
  }
  return r;
}

}  // namespace detail

/// Interquartile range per output column of the fitted targets; zero ranges become 1.
inline std::vector<double> target_iqr(const Dataset& data, TargetTransform t) {
  std::vector<double> scale;
  for (std::size_t j = 0; j < data.output_dims(); ++j) {
    std::vector<double> col;
    col.reserve(data.size());
    for (const auto& p : data) col.push_back(forward_transform(t, p.y[j]));
    double iqr = quantile(col, 0.75) - quantile(col, 0.25);
    if (!(iqr > 0.0)) iqr = 1.0;
    scale.push_back(iqr);
  }
  return scale;
}

/// Draw subset -> withhold calibration split -> train -> accept iff R^2 >= threshold,
/// until n_ensemble members are accepted. Attempts are processed in index order, so the
/// result is the same for any pool size.
inline Committee build_committee(const Dataset& data, const Trainer& trainer, const CommitteeConfig& cfg,
                                 WorkerPool* pool = nullptr) {
  cfg.validate();
  const auto subset_n = static_cast<std::size_t>(std::llround(cfg.subset_fraction * static_cast<double>(data.size())));
  const auto calib_n = static_cast<std::size_t>(std::llround(cfg.calibration_fraction * static_cast<double>(subset_n)));
  if (calib_n < 5)
    throw ArgumentError("build_committee: dataset too small, calibration split would hold " +
                        std::to_string(calib_n) + " < 5 points");

  Committee c;
  c.config = cfg;
  c.trained_on_count = data.size();
  c.output_scale = target_iqr(data, trainer.transform);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t attempt = 0;
  const std::size_t batch = pool ? pool->size() : 1;
  while (c.members.size() < cfg.n_ensemble && attempt < cfg.max_attempts) {
    std::vector<detail::AttemptResult> results;
    if (pool && batch > 1) {
      std::vector<std::future<detail::AttemptResult>> futs;
      for (std::size_t b = 0; b < batch && attempt + b < cfg.max_attempts; ++b)
        futs.push_back(pool->submit([&, a = attempt + b] { return detail::committee_attempt(data, trainer, cfg, a); }));
      for (auto& f : futs) results.push_back(f.get());
    } else {
      results.push_back(detail::committee_attempt(data, trainer, cfg, attempt));
    }
    for (auto& r : results) {
      ++attempt;
      if (c.members.size() == cfg.n_ensemble) break;
      best = std::max(best, r.score);
      if (r.member && r.score >= cfg.r2_threshold) {
        c.members.push_back(std::move(*r.member));
        c.calibration_scores.push_back(r.score);
      } else {
        ++c.rejected_attempts;
      }
    }
  }
  if (c.members.size() < cfg.n_ensemble)
    throw CommitteeBuildError(best, c.members.size(),
                              "build_committee: only " + std::to_string(c.members.size()) + " of " +
                                  std::to_string(cfg.n_ensemble) + " members reached R^2 >= " +
                                  std::to_string(cfg.r2_threshold) + " in " + std::to_string(cfg.max_attempts) +
                                  " attempts (best R^2 " + std::to_string(best) + ")");
  return c;
}

inline CommitteePrediction committee_predict(const Committee& c, std::span<const double> x) {
  if (c.members.empty()) throw ArgumentError("committee_predict: empty committee");
  const std::size_t k = c.members.front().output_dims();
  const TargetTransform t = c.members.front().transform;
  std::vector<std::vector<double>> preds;
  preds.reserve(c.members.size());
  for (const auto& m : c.members) preds.push_back(m.predict_transformed(x));
  CommitteePrediction out;
  out.mean.assign(k, 0.0);
  out.spread.assign(k, 0.0);
  const double n = static_cast<double>(preds.size());
  for (std::size_t j = 0; j < k; ++j) {
    double mu = 0.0;
    for (const auto& p : preds) mu += p[j];
    mu /= n;
    double var = 0.0;
    for (const auto& p : preds) var += (p[j] - mu) * (p[j] - mu);
    out.spread[j] = std::sqrt(var / n);
    out.mean[j] = inverse_transform(t, mu);
    const double scale = j < c.output_scale.size() ? c.output_scale[j] : 1.0;
    out.quality = std::max(out.quality, out.spread[j] / scale);
  }
  return out;
}

inline bool is_confident(const CommitteePrediction& p, double tau) {
  if (tau < 0.0) throw ArgumentError("is_confident: threshold must be >= 0");
  return p.quality <= tau;
}

inline bool is_confident(const Committee& c, std::span<const double> x, double tau) {
  return is_confident(committee_predict(c, x), tau);
}

// ---------------------------------------------------------------------------
// Persistence: manifest.json + one JSON file per member.

inline json to_json(const CommitteeConfig& cfg) {
  return json{{"n_ensemble", cfg.n_ensemble},     {"r2_threshold", cfg.r2_threshold},
              {"calibration_fraction", cfg.calibration_fraction}, {"subset_fraction", cfg.subset_fraction},
              {"max_attempts", cfg.max_attempts}, {"seed", cfg.seed}};
}

inline CommitteeConfig committee_config_from_json(const json& j) {
  CommitteeConfig c;
  c.n_ensemble = j.at("n_ensemble").get<std::size_t>();
  c.r2_threshold = j.at("r2_threshold").get<double>();
  c.calibration_fraction = j.at("calibration_fraction").get<double>();
  c.subset_fraction = j.at("subset_fraction").get<double>();
  c.max_attempts = j.at("max_attempts").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline void save_committee(const std::filesystem::path& dir, const Committee& c) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < c.members.size(); ++i) {
    const std::string name = "member_" + std::to_string(i) + ".json";
    std::ofstream os(dir / name);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    os << to_json(c.members[i]).dump() << '\n';
    files.push_back(name);
  }
  json manifest{{"version", 1},
                {"members", files},
                {"calibration_scores", c.calibration_scores},
                {"trained_on_count", c.trained_on_count},
                {"output_scale", c.output_scale},
                {"rejected_attempts", c.rejected_attempts},
                {"config", to_json(c.config)}};
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write committee manifest");
  os << manifest.dump(2) << '\n';
}

inline Committee load_committee(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("cannot read " + (dir / "manifest.json").string());
  const json m = json::parse(is);
  if (m.at("version").get<int>() != 1) throw IoError("load_committee: unsupported manifest version");
  Committee c;
  for (const auto& f : m.at("members")) {
    std::ifstream ms(dir / f.get<std::string>());
    if (!ms) throw IoError("cannot read committee member " + f.get<std::string>());
    c.members.push_back(surrogate_from_json(json::parse(ms)));
  }
  c.calibration_scores = m.at("calibration_scores").get<std::vector<double>>();
  c.trained_on_count = m.at("trained_on_count").get<std::size_t>();
  c.output_scale = m.at("output_scale").get<std::vector<double>>();
  c.rejected_attempts = m.at("rejected_attempts").get<std::size_t>();
  c.config = committee_config_from_json(m.at("config"));
  return c;
}

}  // namespace scalebridge
