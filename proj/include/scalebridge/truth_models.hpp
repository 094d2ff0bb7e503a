#pragma once

#include <functional>
#include <memory>

#include "scalebridge/core.hpp"

namespace scalebridge {

/// A fine-scale model. evaluate must be a pure function of (x, seed).
class TruthModel {
public:
  virtual ~TruthModel() = default;
  virtual std::size_t dim_in() const = 0;
  virtual std::size_t dim_out() const = 0;
  /// Arbitrary cost units per evaluation, used only for accounting.
  virtual double nominal_cost() const { return 1.0; }
  virtual std::vector<double> evaluate(std::span<const double> x, std::uint64_t seed = 0) const = 0;
  virtual std::string name() const = 0;
};

using TruthModelPtr = std::shared_ptr<const TruthModel>;

/// Wraps a callable; handy for benchmarks and tests.
class FunctionModel final : public TruthModel {
public:
  using Fn = std::function<std::vector<double>(std::span<const double>)>;

  FunctionModel(std::size_t dim_in, std::size_t dim_out, Fn fn, std::string name = "function",
                double cost = 1.0)
      : dim_in_(dim_in), dim_out_(dim_out), fn_(std::move(fn)), name_(std::move(name)), cost_(cost) {}

  std::size_t dim_in() const override { return dim_in_; }
  std::size_t dim_out() const override { return dim_out_; }
  double nominal_cost() const override { return cost_; }
  std::string name() const override { return name_; }

  std::vector<double> evaluate(std::span<const double> x, std::uint64_t = 0) const override {
    if (x.size() != dim_in_) throw ArgumentError(name_ + ": input dimension mismatch");
    auto y = fn_(x);
    if (y.size() != dim_out_) throw Error(name_ + ": output dimension mismatch");
    return y;
  }

private:
  std::size_t dim_in_, dim_out_;
  Fn fn_;
  std::string name_;
  double cost_;
};

// ---------------------------------------------------------------------------
// Rosenbrock

inline double rosenbrock(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("rosenbrock: needs at least 2 dimensions");
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    f += 100.0 * a * a + b * b;
  }
  return f;
}

inline std::vector<double> rosenbrock_gradient(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("rosenbrock_gradient: needs at least 2 dimensions");
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
    g[i + 1] += 200.0 * a;
  }
  return g;
}

class RosenbrockModel final : public TruthModel {
public:
  explicit RosenbrockModel(std::size_t dims) : dims_(dims) {
    if (dims < 2) throw ArgumentError("RosenbrockModel: needs at least 2 dimensions");
  }
  std::size_t dim_in() const override { return dims_; }
  std::size_t dim_out() const override { return 1; }
  std::string name() const override { return "rosenbrock" + std::to_string(dims_); }
  std::vector<double> evaluate(std::span<const double> x, std::uint64_t = 0) const override {
    if (x.size() != dims_) throw ArgumentError("RosenbrockModel: input dimension mismatch");
    return {rosenbrock(x)};
  }

  /// The usual benchmark box [-2, 2]^d.
  Domain domain() const { return Domain::box(dims_, -2.0, 2.0); }
  std::vector<double> minimizer() const { return std::vector<double>(dims_, 1.0); }

private:
  std::size_t dims_;
};

// ---------------------------------------------------------------------------
// Synthetic two-species plasma diffusion closure

struct DiffusionCoefficients {
  double d11 = 0.0;
  double d12 = 0.0;
  double d22 = 0.0;
};

/// Species mass in deuterium-mass units as a function of charge number (A ~ 2Z).
inline double species_mass(double z) { return z; }

inline double coulomb_logarithm(double n_total, double temperature) {
  return std::max(2.0, std::log(1.0 + std::pow(temperature, 1.5) / (std::sqrt(n_total) * 1e10)));
}

/// D_ab = T^(5/2) / ((n1+n2) sqrt(mu_ab) (Z_a Z_b)^2 lnL), synthetic units (C0 = 1).
/// Densities in cm^-3, T in eV. Inputs outside the ICF box are accepted.
inline DiffusionCoefficients synthetic_closure(double n1, double n2, double temperature, double z1,
                                               double z2) {
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw ArgumentError("synthetic_closure: densities must be positive");
  if (!(temperature > 0.0)) throw ArgumentError("synthetic_closure: temperature must be positive");
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw ArgumentError("synthetic_closure: charge numbers must be positive");
  const double n = n1 + n2;
  const double lnl = coulomb_logarithm(n, temperature);
  const double base = std::pow(temperature, 2.5) / (n * lnl);
  auto pair = [&](double za, double zb) {
    const double ma = species_mass(za), mb = species_mass(zb);
    const double mu = ma * mb / (ma + mb);
    const double zz = za * zb;
    return base / (std::sqrt(mu) * zz * zz);
  };
  return {pair(z1, z1), pair(z1, z2), pair(z2, z2)};
}

/// The 5-D input box (n1, n2, T, Z1, Z2). Densities and charges log-scaled.
inline Domain icf_domain() {
  return Domain({{1e22, 1e25}, {1e22, 1e25}, {50.0, 150.0}, {1.0, 18.0}, {1.0, 18.0}},
                {true, true, false, true, true});
}

class SyntheticClosureModel final : public TruthModel {
public:
  explicit SyntheticClosureModel(double cost = 1.0) : cost_(cost) {}
  std::size_t dim_in() const override { return 5; }
  std::size_t dim_out() const override { return 3; }
  double nominal_cost() const override { return cost_; }
  std::string name() const override { return "synthetic_closure"; }
  std::vector<double> evaluate(std::span<const double> x, std::uint64_t = 0) const override {
    if (x.size() != 5) throw ArgumentError("SyntheticClosureModel: expects (n1, n2, T, Z1, Z2)");
    const auto d = synthetic_closure(x[0], x[1], x[2], x[3], x[4]);
    return {d.d11, d.d12, d.d22};
  }

private:
  double cost_;
};

/// Evaluates a model at every x and returns truth-provenance points.
inline Dataset evaluate_all(const TruthModel& model, const Domain& domain,
                            const std::vector<std::vector<double>>& xs, std::uint64_t seed = 0,
                            std::int64_t step = 0) {
  Dataset out(domain);
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.add(truth_point(xs[i], model.evaluate(xs[i], derive_seed(seed, i)), step));
  return out;
}

}  // namespace scalebridge
