#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "prodrome/autoencoder.hpp"
#include "prodrome/error.hpp"
#include "prodrome/windows.hpp"

namespace prodrome {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  std::uint64_t seed = 7;
  double weight_decay = 1e-4;  // applied to the output linear layer only
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) fail(ErrorKind::config, "learning rate must be > 0");
    if (epochs < 1) fail(ErrorKind::config, "epochs must be >= 1");
    if (batch_size < 1) fail(ErrorKind::config, "batch size must be >= 1");
    if (!(weight_decay >= 0.0)) fail(ErrorKind::config, "weight decay must be >= 0");
    if (!(clip_norm > 0.0)) fail(ErrorKind::config, "clip norm must be > 0");
  }
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean per-window loss seen during each epoch
};

/// Adam with bias correction over every tensor of a ModelParams.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& like, double lr, double beta1, double beta2, double eps)
      : m_(ModelParams::zeros(like.d_in, like.d_h)),
        v_(ModelParams::zeros(like.d_in, like.d_h)),
        lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ModelParams& p, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<double*> ps, ms, vs;
    std::vector<const double*> gs;
    std::vector<Eigen::Index> sizes;
    p.for_each_tensor([&](std::string_view, auto& t) { ps.push_back(t.data()); sizes.push_back(t.size()); });
    m_.for_each_tensor([&](std::string_view, auto& t) { ms.push_back(t.data()); });
    v_.for_each_tensor([&](std::string_view, auto& t) { vs.push_back(t.data()); });
    g.for_each_tensor([&](std::string_view, const auto& t) { gs.push_back(t.data()); });
    for (std::size_t k = 0; k < ps.size(); ++k) {
      for (Eigen::Index j = 0; j < sizes[k]; ++j) {
        const double gj = gs[k][j];
        ms[k][j] = beta1_ * ms[k][j] + (1.0 - beta1_) * gj;
        vs[k][j] = beta2_ * vs[k][j] + (1.0 - beta2_) * gj * gj;
        ps[k][j] -= lr_ * (ms[k][j] / c1) / (std::sqrt(vs[k][j] / c2) + eps_);
      }
    }
  }

 private:
  ModelParams m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

inline double gradient_norm(const Gradients& g) {
  double s = 0.0;
  g.for_each_tensor([&](std::string_view, const auto& t) { s += t.squaredNorm(); });
  return std::sqrt(s);
}

inline void scale_gradients(Gradients& g, double factor) {
  g.for_each_tensor([&](std::string_view, auto& t) { t *= factor; });
}

/// Mini-batch Adam on mean per-window loss, with global-norm clipping and
/// seeded shuffling. Training runs from `start` (typically init_params).
inline TrainResult train(std::span<const FeatureWindow> windows, const ModelParams& start,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (windows.empty()) fail(ErrorKind::data, "no training data");
  for (const auto& w : windows)
    if (w.dim() != start.d_in) fail(ErrorKind::invalid_argument, "feature dimension mismatch");

  TrainResult result{start, {}};
  ModelParams& p = result.params;
  AdamOptimizer adam(p, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grad = ModelParams::zeros(p.d_in, p.d_h);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      grad.for_each_tensor([](std::string_view, auto& t) { t.setZero(); });
      try {
        for (std::size_t k = b0; k < b1; ++k)
          total += backward(windows[order[k]].features, p, cfg.weight_decay, grad);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::numeric) fail(ErrorKind::numeric, "training diverged");
        throw;
      }
      scale_gradients(grad, 1.0 / static_cast<double>(b1 - b0));
      const double gn = gradient_norm(grad);
      if (!std::isfinite(gn) || !std::isfinite(total)) fail(ErrorKind::numeric, "training diverged");
      if (gn > cfg.clip_norm) scale_gradients(grad, cfg.clip_norm / gn);
      adam.step(p, grad);
    }
    const double mean = total / static_cast<double>(windows.size());
    if (!std::isfinite(mean) || !p.all_finite()) fail(ErrorKind::numeric, "training diverged");
    result.epoch_loss.push_back(mean);
  }
  return result;
}

inline TrainResult train(std::span<const FeatureWindow> windows, std::size_t d_hidden,
                         const TrainConfig& cfg) {
  if (windows.empty()) fail(ErrorKind::data, "no training data");
  return train(windows, init_params(windows.front().dim(), d_hidden, cfg.seed), cfg);
}

}  // namespace prodrome
