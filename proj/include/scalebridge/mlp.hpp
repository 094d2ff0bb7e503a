#pragma once

// Small fully connected network: tanh hidden layers, identity output,
// explicit backpropagation, full-batch gradient descent with momentum.

#include <Eigen/Dense>

#include "scalebridge/core.hpp"

namespace scalebridge {

class TrainingDiverged : public Error {
public:
  TrainingDiverged(std::size_t epoch, const std::string& what) : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

struct TrainConfig {
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t epochs = 2000;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double init_scale = 1.0;
  std::size_t patience = 200;  // epochs without improvement before stopping
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("TrainConfig: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ArgumentError("TrainConfig: momentum must lie in [0, 1)");
    if (!(init_scale > 0.0)) throw ArgumentError("TrainConfig: init_scale must be positive");
  }
};

class Mlp {
public:
  struct Cache {
    std::vector<Eigen::MatrixXd> act;  // act[0] = standardized input, act.back() = standardized output
  };

  Mlp() = default;

  /// layer_sizes = {inputs, hidden..., outputs}.
  Mlp(std::vector<std::size_t> layer_sizes, double init_scale, std::uint64_t seed)
      : layers_(std::move(layer_sizes)) {
    if (layers_.size() < 2) throw ArgumentError("Mlp: need at least input and output layers");
    for (auto s : layers_)
      if (s == 0) throw ArgumentError("Mlp: layer sizes must be positive");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const auto fan_in = static_cast<Eigen::Index>(layers_[l]);
      const auto fan_out = static_cast<Eigen::Index>(layers_[l + 1]);
      Eigen::MatrixXd w(fan_out, fan_in);
      const double sd = init_scale / std::sqrt(static_cast<double>(fan_in));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * standard_normal(rng);
      weights_.push_back(std::move(w));
      biases_.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    in_mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layers_.front()));
    in_std_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(layers_.front()));
    out_mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layers_.back()));
    out_std_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(layers_.back()));
  }

  std::size_t inputs() const { return layers_.front(); }
  std::size_t outputs() const { return layers_.back(); }
  const std::vector<std::size_t>& layers() const { return layers_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  std::vector<double>& loss_history() { return loss_history_; }

  const Eigen::VectorXd& input_mean() const { return in_mean_; }
  const Eigen::VectorXd& input_std() const { return in_std_; }
  const Eigen::VectorXd& output_mean() const { return out_mean_; }
  const Eigen::VectorXd& output_std() const { return out_std_; }

  void set_standardization(Eigen::VectorXd in_mean, Eigen::VectorXd in_std, Eigen::VectorXd out_mean,
                           Eigen::VectorXd out_std) {
    in_mean_ = std::move(in_mean);
    in_std_ = std::move(in_std);
    out_mean_ = std::move(out_mean);
    out_std_ = std::move(out_std);
  }

  /// Sets standardization from data (columns are samples); zero spreads become 1.
  void fit_standardization(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    auto stats = [](const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
      mean = m.rowwise().mean();
      sd = ((m.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(m.cols())).sqrt();
      for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (!(sd(i) > 1e-300)) sd(i) = 1.0;
    };
    stats(x, in_mean_, in_std_);
    stats(y, out_mean_, out_std_);
  }

  Eigen::MatrixXd standardize_inputs(const Eigen::MatrixXd& x) const {
    return (x.colwise() - in_mean_).array().colwise() / in_std_.array();
  }
  Eigen::MatrixXd standardize_outputs(const Eigen::MatrixXd& y) const {
    return (y.colwise() - out_mean_).array().colwise() / out_std_.array();
  }

  /// Standardized-in, standardized-out pass; fills cache when given.
  Eigen::MatrixXd forward_standardized(const Eigen::MatrixXd& xs, Cache* cache = nullptr) const {
    Eigen::MatrixXd a = xs;
    if (cache) {
      cache->act.clear();
      cache->act.push_back(a);
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
      if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->act.push_back(a);
    }
    return a;
  }

  /// Raw-unit prediction; columns are samples.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd ys = forward_standardized(standardize_inputs(x));
    return (ys.array().colwise() * out_std_.array()).colwise() + out_mean_.array();
  }

  std::vector<double> predict(std::span<const double> x) const {
    Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::MatrixXd y = predict(Eigen::MatrixXd(v));
    return std::vector<double>(y.data(), y.data() + y.size());
  }

  /// Backpropagates dL/d(standardized output). Writes the parameter gradient (flat
  /// layout of parameters()) and, optionally, dL/d(raw input).
  void backward_standardized(const Cache& cache, const Eigen::MatrixXd& grad_out, Eigen::VectorXd* param_grad,
                             Eigen::MatrixXd* grad_in_raw = nullptr) const {
    if (param_grad) param_grad->resize(static_cast<Eigen::Index>(parameter_count()));
    std::vector<Eigen::Index> offsets(weights_.size());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      offsets[l] = off;
      off += weights_[l].size() + biases_[l].size();
    }
    Eigen::MatrixXd g = grad_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const Eigen::MatrixXd& a_in = cache.act[l];
      if (param_grad) {
        Eigen::MatrixXd gw = g * a_in.transpose();
        param_grad->segment(offsets[l], gw.size()) = Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
        param_grad->segment(offsets[l] + gw.size(), biases_[l].size()) = g.rowwise().sum();
      }
      if (l == 0 && !grad_in_raw) break;
      Eigen::MatrixXd gp = weights_[l].transpose() * g;
      if (l > 0) gp = (gp.array() * (1.0 - a_in.array().square())).matrix();
      g = std::move(gp);
    }
    if (grad_in_raw) *grad_in_raw = g.array().colwise() / in_std_.array();
  }

  /// Mean squared error over samples and outputs in standardized output space.
  double loss_and_gradient(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, Eigen::VectorXd* grad) const {
    Cache cache;
    const Eigen::MatrixXd out = forward_standardized(xs, grad ? &cache : nullptr);
    const Eigen::MatrixXd diff = out - ys;
    const double denom = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / denom;
    if (grad) backward_standardized(cache, (2.0 / denom) * diff, grad);
    return loss;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
  }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      p.segment(off, weights_[l].size()) = Eigen::Map<const Eigen::VectorXd>(weights_[l].data(), weights_[l].size());
      off += weights_[l].size();
      p.segment(off, biases_[l].size()) = biases_[l];
      off += biases_[l].size();
    }
    return p;
  }

  void set_parameters(const Eigen::VectorXd& p) {
    if (p.size() != static_cast<Eigen::Index>(parameter_count())) throw ArgumentError("Mlp: parameter size mismatch");
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::Map<Eigen::VectorXd>(weights_[l].data(), weights_[l].size()) = p.segment(off, weights_[l].size());
      off += weights_[l].size();
      biases_[l] = p.segment(off, biases_[l].size());
      off += biases_[l].size();
    }
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  bool operator==(const Mlp& o) const {
    if (layers_ != o.layers_ || weights_.size() != o.weights_.size()) return false;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (weights_[l] != o.weights_[l] || biases_[l] != o.biases_[l]) return false;
    return in_mean_ == o.in_mean_ && in_std_ == o.in_std_ && out_mean_ == o.out_mean_ && out_std_ == o.out_std_;
  }

private:
  std::vector<std::size_t> layers_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd in_mean_, in_std_, out_mean_, out_std_;
  std::vector<double> loss_history_;
};

/// Full-batch momentum descent on a differentiable objective over a flat parameter
/// vector. A step that raises the loss is rejected: momentum is cleared and the
/// rate halved. Accepted steps grow the rate by 5% (capped at 10x the base rate).
/// The recorded loss history is therefore non-increasing.
template <class LossGrad>
Eigen::VectorXd momentum_descent(Eigen::VectorXd params, LossGrad&& loss_grad, std::size_t epochs,
                                 double learning_rate, double momentum, std::size_t patience,
                                 std::vector<double>& history) {
  Eigen::VectorXd grad;
  double loss = loss_grad(params, &grad);
  if (!std::isfinite(loss)) throw TrainingDiverged(0, "training diverged: non-finite loss at epoch 0");
  history.clear();
  history.reserve(epochs);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());
  double lr = learning_rate;
  double best = loss;
  std::size_t since_best = 0;
  Eigen::VectorXd trial_grad;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const Eigen::VectorXd next_velocity = momentum * velocity - lr * grad;
    const Eigen::VectorXd trial = params + next_velocity;
    const double trial_loss = loss_grad(trial, &trial_grad);
    if (std::isnan(trial_loss))
      throw TrainingDiverged(epoch, "training diverged: NaN loss at epoch " + std::to_string(epoch));
    if (trial_loss <= loss) {
      params = trial;
      velocity = next_velocity;
      grad.swap(trial_grad);
      loss = trial_loss;
      lr = std::min(lr * 1.05, 10.0 * learning_rate);
    } else {
      velocity.setZero();
      lr *= 0.5;
    }
    history.push_back(loss);
    if (loss < best * (1.0 - 1e-9)) {
      best = loss;
      since_best = 0;
    } else if (++since_best >= patience || lr < 1e-14 * learning_rate) {
      break;
    }
  }
  return params;
}

/// Fits an MLP to columns of x (inputs) and y (targets).
inline Mlp mlp_train(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const TrainConfig& cfg) {
  cfg.validate();
  if (x.cols() != y.cols()) throw ArgumentError("mlp_train: sample count mismatch");
  if (x.cols() < 10) throw ArgumentError("mlp_train: need at least 10 samples");
  std::vector<std::size_t> layers;
  layers.push_back(static_cast<std::size_t>(x.rows()));
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(static_cast<std::size_t>(y.rows()));
  Mlp net(layers, cfg.init_scale, cfg.seed);
  net.fit_standardization(x, y);
  const Eigen::MatrixXd xs = net.standardize_inputs(x);
  const Eigen::MatrixXd ys = net.standardize_outputs(y);
  Mlp work = net;
  auto loss_grad = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
    work.set_parameters(p);
    return work.loss_and_gradient(xs, ys, g);
  };
  std::vector<double> history;
  const Eigen::VectorXd best =
      momentum_descent(net.parameters(), loss_grad, cfg.epochs, cfg.learning_rate, cfg.momentum, cfg.patience, history);
  net.set_parameters(best);
  net.loss_history() = std::move(history);
  if (!net.all_finite()) throw TrainingDiverged(net.loss_history().size(), "training produced non-finite parameters");
  return net;
}

/// Row-major convenience overload: x is N x d, y is N x k.
inline Mlp mlp_train(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                     const TrainConfig& cfg) {
  if (x.empty() || x.size() != y.size()) throw ArgumentError("mlp_train: sample count mismatch");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd xm(static_cast<Eigen::Index>(x.front().size()), n);
  Eigen::MatrixXd ym(static_cast<Eigen::Index>(y.front().size()), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < xm.rows(); ++i) xm(i, j) = x[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < ym.rows(); ++i) ym(i, j) = y[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
  return mlp_train(xm, ym, cfg);
}

}  // namespace scalebridge
