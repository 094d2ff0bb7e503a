#pragma once

// Quantized-key result database with tolerance lookup, and an in-process
// simulation of an eventually consistent replica set (last-writer-wins map).

#include <atomic>
#include <compare>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>

#include "scalebridge/core.hpp"

namespace scalebridge {

struct QuantizedKey {
  std::vector<std::int64_t> cells;
  auto operator<=>(const QuantizedKey&) const = default;
};

inline QuantizedKey quantize(const Domain& domain, std::span<const double> x, double q) {
  if (!(q > 0.0)) throw ArgumentError("quantize: q must be > 0");
  const auto u = normalize(domain, x, OutOfBounds::Extrapolate);
  QuantizedKey k;
  k.cells.reserve(u.size());
  for (double v : u) k.cells.push_back(static_cast<std::int64_t>(std::floor(v / q)));
  return k;
}

struct Version {
  std::uint64_t counter = 0;
  std::uint32_t node = 0;
  auto operator<=>(const Version&) const = default;
};

struct Record {
  std::vector<double> x;
  std::vector<double> y;
  Provenance provenance = Provenance::TruthEval;
  Version version;
  std::int64_t step = 0;
  bool operator==(const Record&) const = default;
};

class Store {
public:
  Store(Domain domain, std::uint32_t node_id = 0, double q = 1e-3)
      : domain_(std::move(domain)), node_(node_id), q_(q) {
    if (!(q_ > 0.0)) throw ArgumentError("Store: q must be > 0");
  }

  Store(const Store& o) : domain_(o.domain_), node_(o.node_), q_(o.q_) {
    std::shared_lock lock(o.mutex_);
    map_ = o.map_;
    log_ = o.log_;
    clock_ = o.clock_;
    lookups_ = o.lookups_.load();
    hits_ = o.hits_.load();
  }

  const Domain& domain() const noexcept { return domain_; }
  std::uint32_t node_id() const noexcept { return node_; }
  double resolution() const noexcept { return q_; }
  QuantizedKey key(std::span<const double> x) const { return quantize(domain_, x, q_); }

  /// Local write. Versions increase monotonically per node (Lamport clock).
  Version put(std::span<const double> x, std::span<const double> y, Provenance p = Provenance::TruthEval,
              std::int64_t step = 0) {
    for (double v : x)
      if (!std::isfinite(v)) throw ArgumentError("Store::put: non-finite input");
    for (double v : y)
      if (!std::isfinite(v)) throw ArgumentError("Store::put: non-finite output");
    std::unique_lock lock(mutex_);
    Record r{std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()), p,
             Version{++clock_, node_}, step};
    apply_locked(r);
    return r.version;
  }

  /// Applies a record by last-writer-wins. Returns false if an equal or newer version is present.
  bool apply(const Record& r) {
    std::unique_lock lock(mutex_);
    return apply_locked(r);
  }

  std::optional<Record> get(std::span<const double> x) const {
    const auto k = key(x);
    std::shared_lock lock(mutex_);
    auto it = map_.find(k);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  /// Searches the (2 tol + 1)^d cell neighborhood and serves the record with the nearest
  /// exact input, marked as a database hit. Internal probes pass record = false to keep
  /// them out of the hit statistics.
  std::optional<Record> lookup(std::span<const double> x, std::size_t tol_cells = 0, bool record = true) const {
    const auto center = key(x);
    const std::size_t d = center.cells.size();
    const auto t = static_cast<std::int64_t>(tol_cells);
    std::optional<Record> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    const auto ux = normalize(domain_, x, OutOfBounds::Extrapolate);
    {
      std::shared_lock lock(mutex_);
      if (record) ++lookups_;
      QuantizedKey probe = center;
      std::vector<std::int64_t> off(d, -t);
      for (;;) {
        for (std::size_t i = 0; i < d; ++i) probe.cells[i] = center.cells[i] + off[i];
        if (auto it = map_.find(probe); it != map_.end()) {
          const double d2 = squared_distance(normalize(domain_, it->second.x, OutOfBounds::Extrapolate), ux);
          if (d2 < best_d2) {
            best_d2 = d2;
            best = it->second;
          }
        }
        std::size_t i = 0;
        while (i < d && off[i] == t) off[i++] = -t;
        if (i == d) break;
        ++off[i];
      }
      if (best && record) ++hits_;
    }
    if (best) best->provenance = Provenance::DatabaseHit;
    return best;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }

  std::map<QuantizedKey, Record> snapshot() const {
    std::shared_lock lock(mutex_);
    return map_;
  }

  /// Every applied write, in application order.
  std::vector<Record> log() const {
    std::shared_lock lock(mutex_);
    return log_;
  }

  std::size_t log_size() const {
    std::shared_lock lock(mutex_);
    return log_.size();
  }

  Record log_entry(std::size_t i) const {
    std::shared_lock lock(mutex_);
    return log_.at(i);
  }

  static Store replay(Domain domain, std::uint32_t node_id, double q, const std::vector<Record>& log) {
    Store s(std::move(domain), node_id, q);
    for (const auto& r : log) s.apply(r);
    return s;
  }

  std::size_t lookups() const noexcept { return lookups_.load(); }
  std::size_t hits() const noexcept { return hits_.load(); }

  void write_csv(std::ostream& os) const {
    std::shared_lock lock(mutex_);
    const std::size_t d = domain_.dims();
    const std::size_t k = map_.empty() ? 0 : map_.begin()->second.y.size();
    for (std::size_t i = 0; i < d; ++i) os << 'k' << i << ',';
    for (std::size_t i = 0; i < d; ++i) os << 'x' << i << ',';
    for (std::size_t i = 0; i < k; ++i) os << 'y' << i << ',';
    os << "provenance,counter,node,step\n";
    for (const auto& [key, r] : map_) {
      for (auto c : key.cells) os << c << ',';
      for (double v : r.x) os << format_double(v) << ',';
      for (double v : r.y) os << format_double(v) << ',';
      os << to_string(r.provenance) << ',' << r.version.counter << ',' << r.version.node << ',' << r.step << '\n';
    }
  }

  static Store read_csv(std::istream& is, Domain domain, std::uint32_t node_id, double q) {
    Store s(std::move(domain), node_id, q);
    std::string line;
    if (!std::getline(is, line)) throw IoError("Store::read_csv: missing header");
    const auto header = split_csv_line(line);
    const std::size_t d = s.domain_.dims();
    if (header.size() < 2 * d + 4) throw IoError("Store::read_csv: header too short");
    const std::size_t k = header.size() - 2 * d - 4;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != header.size()) throw IoError("Store::read_csv: ragged row");
      Record r;
      for (std::size_t i = 0; i < d; ++i) r.x.push_back(parse_double(f[d + i]));
      for (std::size_t i = 0; i < k; ++i) r.y.push_back(parse_double(f[2 * d + i]));
      r.provenance = provenance_from_string(f[2 * d + k]);
      r.version.counter = std::stoull(f[2 * d + k + 1]);
      r.version.node = static_cast<std::uint32_t>(std::stoul(f[2 * d + k + 2]));
      r.step = std::stoll(f[2 * d + k + 3]);
      s.apply(r);
    }
    return s;
  }

private:
  bool apply_locked(const Record& r) {
    clock_ = std::max(clock_, r.version.counter);
    const auto k = key(r.x);
    auto it = map_.find(k);
    if (it != map_.end() && !(it->second.version < r.version)) return false;
    map_[k] = r;
    log_.push_back(r);
    return true;
  }

  Domain domain_;
  std::uint32_t node_;
  double q_;
  std::map<QuantizedKey, Record> map_;
  std::vector<Record> log_;
  std::uint64_t clock_ = 0;
  mutable std::atomic<std::size_t> lookups_{0};
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::shared_mutex mutex_;
};

inline double dedup_rate(const Store& s) {
  const auto n = s.lookups();
  return n == 0 ? 0.0 : static_cast<double>(s.hits()) / static_cast<double>(n);
}

/// In-process replica set. Each sync round, every node ships the unsent suffix of its
/// locally originated writes to every peer as one message; a dropped message leaves
/// the ship cursor in place, so delivery is at-least-once.
class ReplicaSet {
public:
  ReplicaSet(std::size_t n, const Domain& domain, double q = 1e-3, double drop_probability = 0.0,
             std::uint64_t seed = 0)
      : drop_(drop_probability), rng_(seed) {
    if (n == 0) throw ArgumentError("ReplicaSet: need at least one node");
    if (!(drop_ >= 0.0 && drop_ < 1.0)) throw ArgumentError("ReplicaSet: drop probability must lie in [0, 1)");
    for (std::size_t i = 0; i < n; ++i) nodes_.emplace_back(domain, static_cast<std::uint32_t>(i), q);
    cursor_.assign(n, std::vector<std::size_t>(n, 0));
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  Store& node(std::size_t i) { return nodes_.at(i); }
  const Store& node(std::size_t i) const { return nodes_.at(i); }

  std::size_t sync_round() {
    std::size_t delivered = 0;
    const std::size_t n = nodes_.size();
    std::vector<std::size_t> end(n);
    for (std::size_t i = 0; i < n; ++i) end[i] = nodes_[i].log_size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || cursor_[i][j] >= end[i]) continue;
        if (drop_ > 0.0 && uniform01(rng_) < drop_) continue;
        for (std::size_t e = cursor_[i][j]; e < end[i]; ++e) {
          const Record r = nodes_[i].log_entry(e);
          if (r.version.node != nodes_[i].node_id()) continue;
          nodes_[j].apply(r);
          ++delivered;
        }
        cursor_[i][j] = end[i];
      }
    }
    return delivered;
  }

  bool converged() const {
    const auto first = nodes_.front().snapshot();
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (nodes_[i].snapshot() != first) return false;
    return true;
  }

  /// Runs rounds until all replicas agree; returns the number of rounds used.
  std::size_t sync_until_converged(std::size_t max_rounds = 1000) {
    for (std::size_t r = 1; r <= max_rounds; ++r) {
      sync_round();
      if (converged()) return r;
    }
    throw Error("ReplicaSet: no convergence within " + std::to_string(max_rounds) + " rounds");
  }

  /// Locally originated log entries not yet shipped, summed over ordered node pairs.
  std::size_t pending() const {
    std::size_t p = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto log = nodes_[i].log();
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (i == j) continue;
        for (std::size_t e = cursor_[i][j]; e < log.size(); ++e) p += log[e].version.node == nodes_[i].node_id();
      }
    }
    return p;
  }

private:
  std::vector<Store> nodes_;
  std::vector<std::vector<std::size_t>> cursor_;
  double drop_;
  Rng rng_;
};

}  // namespace scalebridge
