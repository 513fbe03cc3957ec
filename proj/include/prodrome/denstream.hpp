#pragma once

// DenStream-style online clustering of unit-norm representations.
//
// Potential micro-clusters are dense summaries (weight >= beta * mu);
// outlier micro-clusters buffer sparse points until they densify. Weights
// fade as 2^(-lambda * dt). Macro-clusters are connected components of
// potential micro-clusters whose centers lie within 2 * eps.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "prodrome/autoencoder.hpp"
#include "prodrome/error.hpp"

namespace prodrome {

struct ClusterParams {
  double eps = 0.01;
  double mu = 2.0;
  double lambda = 0.0;
  double beta = 1.0;

  void validate() const {
    if (!(eps > 0.0)) fail(ErrorKind::config, "eps must be > 0");
    if (!(mu >= 1.0)) fail(ErrorKind::config, "mu must be >= 1");
    if (!(lambda >= 0.0)) fail(ErrorKind::config, "lambda must be >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorKind::config, "beta must be in (0, 1]");
  }

  double core_weight() const { return beta * mu; }
};

enum class MicroKind { potential, outlier };

inline const char* to_string(MicroKind k) {
  return k == MicroKind::potential ? "potential" : "outlier";
}

struct MicroCluster {
  std::uint64_t id = 0;
  MicroKind kind = MicroKind::outlier;
  double weight = 0.0;
  Eigen::VectorXd ls;  // linear sum
  double ss = 0.0;     // sum of squared norms
  double t_create = 0.0;
  double t_last = 0.0;

  Eigen::VectorXd center() const { return ls / weight; }

  double radius() const {
    const double r2 = ss / weight - (ls / weight).squaredNorm();
    return std::sqrt(std::max(0.0, r2));
  }

  /// Radius the cluster would have after absorbing p with unit weight.
  double radius_with(const Eigen::VectorXd& p) const {
    const double w = weight + 1.0;
    const double r2 = (ss + p.squaredNorm()) / w - ((ls + p) / w).squaredNorm();
    return std::sqrt(std::max(0.0, r2));
  }

  void absorb(const Eigen::VectorXd& p, double t) {
    weight += 1.0;
    ls += p;
    ss += p.squaredNorm();
    t_last = t;
  }
};

inline constexpr std::int64_t kOutlier = -1;

struct Assignment {
  std::size_t window_id = 0;
  std::int64_t macro_id = kOutlier;  // kOutlier when not in a potential micro-cluster
  std::uint64_t micro_id = 0;
  double stream_time = 0.0;

  bool is_outlier() const { return macro_id == kOutlier; }
};

struct SnapshotRow {
  std::uint64_t micro_id;
  MicroKind kind;
  double weight;
  Eigen::VectorXd center;
  double radius;
  std::int64_t macro_id;
};

class DenStream {
 public:
  explicit DenStream(ClusterParams params = {}) : params_(params) { params_.validate(); }

  const ClusterParams& params() const { return params_; }
  const std::vector<MicroCluster>& micro_clusters() const { return clusters_; }
  double last_time() const { return last_time_; }
  std::uint64_t next_id() const { return next_id_; }

  /// Rebuilds a state from persisted parts.
  static DenStream restore(ClusterParams params, std::vector<MicroCluster> clusters,
                           std::uint64_t next_id, double last_time, bool started) {
    DenStream s(params);
    s.clusters_ = std::move(clusters);
    s.next_id_ = next_id;
    s.last_time_ = last_time;
    s.started_ = started;
    return s;
  }
  bool started() const { return started_; }

  Assignment insert(const Eigen::VectorXd& point, double t, std::size_t window_id = 0) {
    if (!is_unit(point)) fail(ErrorKind::invalid_argument, "unnormalized point");
    if (started_ && t < last_time_) fail(ErrorKind::invalid_argument, "time went backwards");
    apply_decay(t);

    MicroCluster* target = nearest_mergeable(point, MicroKind::potential);
    if (!target) target = nearest_mergeable(point, MicroKind::outlier);
    if (target) {
      target->absorb(point, t);
    } else {
      MicroCluster mc;
      mc.id = next_id_++;
      mc.kind = MicroKind::outlier;
      mc.weight = 1.0;
      mc.ls = point;
      mc.ss = point.squaredNorm();
      mc.t_create = t;
      mc.t_last = t;
      clusters_.push_back(std::move(mc));
      target = &clusters_.back();
    }
    if (target->kind == MicroKind::outlier && target->weight >= params_.core_weight())
      target->kind = MicroKind::potential;

    Assignment a;
    a.window_id = window_id;
    a.micro_id = target->id;
    a.stream_time = t;
    if (target->kind == MicroKind::potential) a.macro_id = macro_id_of(target->id);
    return a;
  }

  /// Fades every micro-cluster to time t. A no-op when lambda == 0.
  void apply_decay(double t) {
    if (started_ && t < last_time_) fail(ErrorKind::invalid_argument, "time went backwards");
    if (started_ && params_.lambda > 0.0 && t > last_time_) {
      const double f = std::exp2(-params_.lambda * (t - last_time_));
      for (auto& mc : clusters_) {
        mc.weight *= f;
        mc.ls *= f;
        mc.ss *= f;
      }
    }
    last_time_ = t;
    started_ = true;
  }

  /// Minimal time span for a potential micro-cluster to fade below beta*mu.
  double maintenance_period() const {
    if (params_.lambda <= 0.0) return std::numeric_limits<double>::infinity();
    const double bm = params_.core_weight();
    if (bm > 1.0) return std::ceil(std::log2(bm / (bm - 1.0)) / params_.lambda);
    return std::ceil(1.0 / params_.lambda);
  }

  /// Removes faded potential micro-clusters and outliers below the
  /// DenStream lower-limit weight. Clusters touched at t are kept.
  void prune(double t) {
    if (params_.lambda <= 0.0) return;
    const double tp = maintenance_period();
    const double denom = std::exp2(-params_.lambda * tp) - 1.0;
    std::erase_if(clusters_, [&](const MicroCluster& mc) {
      if (mc.t_last >= t) return false;
      if (mc.kind == MicroKind::potential) return mc.weight < params_.core_weight();
      const double xi = (std::exp2(-params_.lambda * (t - mc.t_create + tp)) - 1.0) / denom;
      return mc.weight < xi;
    });
  }

  /// micro id -> macro id for every potential micro-cluster.
  std::map<std::uint64_t, std::int64_t> macro_clusters() const {
    std::vector<std::size_t> pot;
    for (std::size_t i = 0; i < clusters_.size(); ++i)
      if (clusters_[i].kind == MicroKind::potential) pot.push_back(i);

    std::vector<std::size_t> parent(pot.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::vector<Eigen::VectorXd> centers;
    centers.reserve(pot.size());
    for (std::size_t i : pot) centers.push_back(clusters_[i].center());
    const double link = 2.0 * params_.eps;
    for (std::size_t a = 0; a < pot.size(); ++a)
      for (std::size_t b = a + 1; b < pot.size(); ++b)
        if ((centers[a] - centers[b]).norm() <= link) parent[find(a)] = find(b);

    std::map<std::size_t, std::uint64_t> lowest;
    for (std::size_t a = 0; a < pot.size(); ++a) {
      const auto root = find(a);
      const auto id = clusters_[pot[a]].id;
      auto [it, inserted] = lowest.emplace(root, id);
      if (!inserted) it->second = std::min(it->second, id);
    }
    std::map<std::uint64_t, std::int64_t> out;
    for (std::size_t a = 0; a < pot.size(); ++a)
      out[clusters_[pot[a]].id] = static_cast<std::int64_t>(lowest[find(a)]);
    return out;
  }

  std::vector<SnapshotRow> snapshot() const {
    const auto macro = macro_clusters();
    std::vector<SnapshotRow> rows;
    rows.reserve(clusters_.size());
    for (const auto& mc : clusters_) {
      const auto it = macro.find(mc.id);
      rows.push_back({mc.id, mc.kind, mc.weight, mc.center(), mc.radius(),
                      it == macro.end() ? kOutlier : it->second});
    }
    return rows;
  }

 private:
  // Nearest cluster of `kind` by center distance (lowest id on ties),
  // provided the merged radius stays within eps.
  MicroCluster* nearest_mergeable(const Eigen::VectorXd& p, MicroKind kind) {
    MicroCluster* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (auto& mc : clusters_) {
      if (mc.kind != kind) continue;
      const double d = (mc.center() - p).squaredNorm();
      if (d < best_d || (d == best_d && best && mc.id < best->id)) {
        best = &mc;
        best_d = d;
      }
    }
    if (best && best->radius_with(p) <= params_.eps) return best;
    return nullptr;
  }

  // Lowest id in the connected component containing micro_id; equivalent to
  // macro_clusters()[micro_id] without building the whole partition.
  std::int64_t macro_id_of(std::uint64_t micro_id) const {
    std::vector<std::size_t> pot;
    std::vector<Eigen::VectorXd> centers;
    std::size_t start = clusters_.size();
    for (std::size_t i = 0; i < clusters_.size(); ++i) {
      if (clusters_[i].kind != MicroKind::potential) continue;
      if (clusters_[i].id == micro_id) start = pot.size();
      pot.push_back(i);
      centers.push_back(clusters_[i].center());
    }
    if (start == clusters_.size()) return kOutlier;
    const double link = 2.0 * params_.eps;
    std::vector<char> seen(pot.size(), 0);
    std::vector<std::size_t> frontier{start};
    seen[start] = 1;
    std::uint64_t lowest = micro_id;
    while (!frontier.empty()) {
      const std::size_t a = frontier.back();
      frontier.pop_back();
      lowest = std::min(lowest, clusters_[pot[a]].id);
      for (std::size_t b = 0; b < pot.size(); ++b) {
        if (seen[b] || (centers[a] - centers[b]).norm() > link) continue;
        seen[b] = 1;
        frontier.push_back(b);
      }
    }
    return static_cast<std::int64_t>(lowest);
  }

  ClusterParams params_;
  std::vector<MicroCluster> clusters_;
  std::uint64_t next_id_ = 0;
  double last_time_ = 0.0;
  bool started_ = false;
};

}  // namespace prodrome
