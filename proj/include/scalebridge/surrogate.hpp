#pragma once

// Vector-valued surrogates built from independent scalar regressors, the
// trainers that produce them, scoring, and JSON serialization.

#include <variant>

#include <json.hpp>

#include "scalebridge/metrics.hpp"
#include "scalebridge/mlp.hpp"
#include "scalebridge/rbf.hpp"
#include "scalebridge/truth_models.hpp"

namespace scalebridge {

using ScalarModel = std::variant<RbfSurrogate, Mlp>;

/// Targets may be fit in log10 space (positive quantities spanning decades).
enum class TargetTransform { Identity, Log10 };

inline double forward_transform(TargetTransform t, double y) {
  if (t == TargetTransform::Identity) return y;
  if (!(y > 0.0)) throw ArgumentError("log10 target transform needs positive targets");
  return std::log10(y);
}
inline double inverse_transform(TargetTransform t, double v) {
  return t == TargetTransform::Identity ? v : std::pow(10.0, v);
}

struct Surrogate {
  Domain domain;
  std::vector<ScalarModel> outputs;
  TargetTransform transform = TargetTransform::Identity;

  std::size_t output_dims() const { return outputs.size(); }

  /// Prediction in the fitted (possibly log10) target space. Out-of-box inputs extrapolate.
  std::vector<double> predict_transformed(std::span<const double> x) const {
    const auto u = normalize(domain, x, OutOfBounds::Extrapolate);
    std::vector<double> out;
    out.reserve(outputs.size());
    for (const auto& m : outputs) {
      out.push_back(std::visit(
          [&](const auto& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, RbfSurrogate>) return rbf_predict(model, u);
            else return model.predict(std::span<const double>(u))[0];
          },
          m));
    }
    return out;
  }

  std::vector<double> predict(std::span<const double> x) const {
    auto v = predict_transformed(x);
    for (double& e : v) e = inverse_transform(transform, e);
    return v;
  }

  bool operator==(const Surrogate&) const = default;
};

// ---------------------------------------------------------------------------
// Trainers

enum class TrainerKind { Rbf, Mlp };

struct Trainer {
  TrainerKind kind = TrainerKind::Rbf;
  double rbf_lambda = 1e-10;
  TrainConfig mlp;
  TargetTransform transform = TargetTransform::Identity;

  static Trainer rbf(double lambda = 1e-10) {
    Trainer t;
    t.kind = TrainerKind::Rbf;
    t.rbf_lambda = lambda;
    return t;
  }
  static Trainer network(TrainConfig cfg = {}) {
    Trainer t;
    t.kind = TrainerKind::Mlp;
    t.mlp = std::move(cfg);
    return t;
  }

  std::size_t min_points(std::size_t dims) const { return kind == TrainerKind::Rbf ? dims + 2 : 10; }

  /// One scalar model per output column; inputs normalized to the unit cube.
  Surrogate fit(const Dataset& data, std::uint64_t seed) const {
    if (data.empty()) throw ArgumentError("Trainer::fit: empty dataset");
    const std::size_t k = data.output_dims();
    const std::size_t n = data.size();
    std::vector<std::vector<double>> u;
    u.reserve(n);
    for (const auto& p : data) u.push_back(normalize(data.domain(), p.x, OutOfBounds::Extrapolate));
    Surrogate s;
    s.domain = data.domain();
    s.transform = transform;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = forward_transform(transform, data[i].y.at(j));
      if (kind == TrainerKind::Rbf) {
        s.outputs.emplace_back(rbf_fit(u, y, rbf_lambda));
      } else {
        TrainConfig cfg = mlp;
        cfg.seed = derive_seed(seed, j);
        std::vector<std::vector<double>> yy(n);
        for (std::size_t i = 0; i < n; ++i) yy[i] = {y[i]};
        s.outputs.emplace_back(mlp_train(u, yy, cfg));
      }
    }
    return s;
  }

  /// Hyperparameter grid used for fine-tuning.
  std::vector<Trainer> tuning_grid() const {
    std::vector<Trainer> grid;
    if (kind == TrainerKind::Rbf) {
      for (double lam : {1e-10, 1e-8, 1e-6, 1e-4}) {
        Trainer t = *this;
        t.rbf_lambda = lam;
        grid.push_back(t);
      }
    } else {
      for (double lr : {1e-3, 3e-3, 1e-2}) {
        Trainer t = *this;
        t.mlp.learning_rate = lr;
        grid.push_back(t);
      }
    }
    return grid;
  }
};

// ---------------------------------------------------------------------------
// Scoring

/// Mean |y_hat - y| over points and outputs, in model units.
inline double average_model_error(const Surrogate& s, const Dataset& test) {
  if (test.empty()) throw ArgumentError("average_model_error: empty test set");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : test) {
    const auto yhat = s.predict(p.x);
    for (std::size_t j = 0; j < yhat.size(); ++j) {
      sum += std::abs(yhat[j] - p.y[j]);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

/// Same metric with truth values computed on the fly.
template <class Predictor>
double average_model_error(const Predictor& predict, const TruthModel& truth,
                           const std::vector<std::vector<double>>& test_points) {
  if (test_points.empty()) throw ArgumentError("average_model_error: empty test set");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& x : test_points) {
    const std::vector<double> y = truth.evaluate(x);
    const std::vector<double> yhat = predict(x);
    for (std::size_t j = 0; j < y.size(); ++j) {
      sum += std::abs(yhat[j] - y[j]);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

/// Smallest R^2 across outputs.
inline double min_r_squared(const Surrogate& s, const Dataset& data) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < data.output_dims(); ++j) {
    std::vector<double> yt, yp;
    for (const auto& p : data) {
      yt.push_back(forward_transform(s.transform, p.y[j]));
      yp.push_back(s.predict_transformed(p.x)[j]);
    }
    worst = std::min(worst, r_squared(yt, yp));
  }
  return worst;
}

/// Grid search over the trainer's tuning grid, scored on a random 10% validation
/// split; the winner is refit on all of the data.
inline Surrogate fine_tune(const Trainer& base, const Dataset& data, std::uint64_t seed, Trainer* chosen = nullptr) {
  const auto grid = base.tuning_grid();
  const std::size_t d = data.domain().dims();
  Trainer best = base;
  if (data.size() >= std::max<std::size_t>(10, base.min_points(d) + 2)) {
    auto [train, valid] = split_random(data, 0.1, derive_seed(seed, 101));
    if (train.size() >= base.min_points(d) && !valid.empty()) {
      double best_score = std::numeric_limits<double>::infinity();
      for (const auto& t : grid) {
        try {
          const double score = average_model_error(t.fit(train, seed), valid);
          if (score < best_score) {
            best_score = score;
            best = t;
          }
        } catch (const FitError&) {
          // singular at this lambda; try the next one
        }
      }
    }
  }
  if (chosen) *chosen = best;
  return best.fit(data, seed);
}

// ---------------------------------------------------------------------------
// Serialization

using nlohmann::json;

inline json vector_to_json(const Eigen::MatrixXd& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw IoError("matrix size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

inline json to_json(const RbfSurrogate& s) {
  return json{{"type", "rbf"}, {"version", 1},   {"dims", s.dims},       {"lambda", s.lambda},
              {"centers", s.centers}, {"weights", s.weights}, {"poly", s.poly}, {"fit_residual", s.fit_residual}};
}

inline json to_json(const Mlp& m) {
  json layers = json::array();
  for (std::size_t l = 0; l < m.weights().size(); ++l)
    layers.push_back(json{{"w", vector_to_json(m.weights()[l])}, {"b", vector_to_json(m.biases()[l])}});
  return json{{"type", "mlp"},
              {"version", 1},
              {"layer_sizes", m.layers()},
              {"layers", layers},
              {"in_mean", vector_to_json(m.input_mean())},
              {"in_std", vector_to_json(m.input_std())},
              {"out_mean", vector_to_json(m.output_mean())},
              {"out_std", vector_to_json(m.output_std())}};
}

inline RbfSurrogate rbf_from_json(const json& j) {
  RbfSurrogate s;
  s.dims = j.at("dims").get<std::size_t>();
  s.lambda = j.at("lambda").get<double>();
  s.centers = j.at("centers").get<std::vector<double>>();
  s.weights = j.at("weights").get<std::vector<double>>();
  s.poly = j.at("poly").get<std::vector<double>>();
  s.fit_residual = j.value("fit_residual", 0.0);
  if (s.centers.size() != s.weights.size() * s.dims || s.poly.size() != s.dims + 1)
    throw IoError("rbf_from_json: inconsistent sizes");
  return s;
}

inline Mlp mlp_from_json(const json& j) {
  Mlp m(j.at("layer_sizes").get<std::vector<std::size_t>>(), 1.0, 0);
  Eigen::VectorXd params(static_cast<Eigen::Index>(m.parameter_count()));
  Eigen::Index off = 0;
  for (const auto& layer : j.at("layers")) {
    const Eigen::MatrixXd w = matrix_from_json(layer.at("w"));
    const Eigen::MatrixXd b = matrix_from_json(layer.at("b"));
    params.segment(off, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    off += w.size();
    params.segment(off, b.size()) = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    off += b.size();
  }
  m.set_parameters(params);
  m.set_standardization(matrix_from_json(j.at("in_mean")), matrix_from_json(j.at("in_std")),
                        matrix_from_json(j.at("out_mean")), matrix_from_json(j.at("out_std")));
  return m;
}

inline json to_json(const Domain& d) {
  json b = json::array();
  for (const auto& bd : d.bounds()) b.push_back({bd.lo, bd.hi});
  return json{{"bounds", b}, {"log_scaled", d.log_scaled()}};
}

inline Domain domain_from_json(const json& j) {
  std::vector<Bounds> b;
  for (const auto& e : j.at("bounds")) b.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return Domain(std::move(b), j.at("log_scaled").get<std::vector<bool>>());
}

inline json to_json(const Surrogate& s) {
  json outs = json::array();
  for (const auto& m : s.outputs) std::visit([&](const auto& model) { outs.push_back(to_json(model)); }, m);
  return json{{"version", 1},
              {"domain", to_json(s.domain)},
              {"transform", s.transform == TargetTransform::Log10 ? "log10" : "identity"},
              {"outputs", outs}};
}

inline Surrogate surrogate_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) throw IoError("surrogate_from_json: unsupported version");
  Surrogate s;
  s.domain = domain_from_json(j.at("domain"));
  s.transform = j.at("transform").get<std::string>() == "log10" ? TargetTransform::Log10 : TargetTransform::Identity;
  for (const auto& o : j.at("outputs")) {
    const auto type = o.at("type").get<std::string>();
    if (type == "rbf") s.outputs.emplace_back(rbf_from_json(o));
    else if (type == "mlp") s.outputs.emplace_back(mlp_from_json(o));
    else throw IoError("surrogate_from_json: unknown model type '" + type + "'");
  }
  return s;
}

}  // namespace scalebridge
