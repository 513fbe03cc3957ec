#pragma once

// LSTM encoder/decoder that compresses a feature window into a unit-norm
// representation and reconstructs the window in reverse order.
//
// Encoder: h_t, c_t = LSTM(x_t, h_{t-1}, c_{t-1}) with h_0 = c_0 = 0; the
// representation is the final hidden state, projected onto the unit sphere.
// Decoder: hidden state starts at the unit representation, cell state at 0,
// first input 0. Each step emits y_t = W h_t + b and feeds y_t back as the
// next input; y_t predicts x_{l-1-t}.
//
// Gate rows in every stacked weight matrix are ordered input, forget, cell,
// output.

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

#include "prodrome/error.hpp"
#include "prodrome/windows.hpp"

namespace prodrome {

struct LstmWeights {
  Eigen::MatrixXd wx;  // 4h x d_in
  Eigen::MatrixXd wh;  // 4h x h
  Eigen::VectorXd b;   // 4h
};

struct ModelParams {
  std::size_t d_in = 0;
  std::size_t d_h = 0;
  LstmWeights encoder;
  LstmWeights decoder;
  Eigen::MatrixXd w_out;  // d_in x h
  Eigen::VectorXd b_out;  // d_in

  static ModelParams zeros(std::size_t d_in, std::size_t d_h) {
    const auto i = static_cast<Eigen::Index>(d_in);
    const auto h = static_cast<Eigen::Index>(d_h);
    ModelParams p;
    p.d_in = d_in;
    p.d_h = d_h;
    for (LstmWeights* l : {&p.encoder, &p.decoder}) {
      l->wx = Eigen::MatrixXd::Zero(4 * h, i);
      l->wh = Eigen::MatrixXd::Zero(4 * h, h);
      l->b = Eigen::VectorXd::Zero(4 * h);
    }
    p.w_out = Eigen::MatrixXd::Zero(i, h);
    p.b_out = Eigen::VectorXd::Zero(i);
    return p;
  }

  /// Calls f(name, tensor) for every weight tensor in serialization order.
  template <class F>
  void for_each_tensor(F&& f) {
    f(std::string_view{"encoder.wx"}, encoder.wx);
    f(std::string_view{"encoder.wh"}, encoder.wh);
    f(std::string_view{"encoder.b"}, encoder.b);
    f(std::string_view{"decoder.wx"}, decoder.wx);
    f(std::string_view{"decoder.wh"}, decoder.wh);
    f(std::string_view{"decoder.b"}, decoder.b);
    f(std::string_view{"w_out"}, w_out);
    f(std::string_view{"b_out"}, b_out);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](std::string_view name, const auto& t) { f(name, t); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  bool operator==(const ModelParams& o) const {
    return d_in == o.d_in && d_h == o.d_h && encoder.wx == o.encoder.wx &&
           encoder.wh == o.encoder.wh && encoder.b == o.encoder.b &&
           decoder.wx == o.decoder.wx && decoder.wh == o.decoder.wh &&
           decoder.b == o.decoder.b && w_out == o.w_out && b_out == o.b_out;
  }
};

using Gradients = ModelParams;

/// Uniform init in [-1/sqrt(d_h), 1/sqrt(d_h)], forget-gate biases set to 1.
inline ModelParams init_params(std::size_t d_in, std::size_t d_h, std::uint64_t seed) {
  if (d_in < 1 || d_h < 1) fail(ErrorKind::invalid_argument, "dimensions must be >= 1");
  ModelParams p = ModelParams::zeros(d_in, d_h);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_h));
  std::uniform_real_distribution<double> uni(-bound, bound);
  p.for_each_tensor([&](std::string_view, auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = uni(rng);
  });
  const auto h = static_cast<Eigen::Index>(d_h);
  p.encoder.b.segment(h, h).setOnes();
  p.decoder.b.segment(h, h).setOnes();
  return p;
}

struct Representation {
  Eigen::VectorXd values;
  bool normalized = false;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Activations of one LSTM step, kept for backpropagation.
struct LstmStep {
  Eigen::VectorXd i, f, g, o, c, tanh_c, h;
};

inline void lstm_forward(const LstmWeights& w, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                         LstmStep& s) {
  const Eigen::Index n = h_prev.size();
  Eigen::VectorXd z = w.b;
  z.noalias() += w.wx * x;
  z.noalias() += w.wh * h_prev;
  s.i = z.segment(0, n).unaryExpr(&sigmoid);
  s.f = z.segment(n, n).unaryExpr(&sigmoid);
  s.g = z.segment(2 * n, n).array().tanh();
  s.o = z.segment(3 * n, n).unaryExpr(&sigmoid);
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh();
  s.h = s.o.cwiseProduct(s.tanh_c);
}

// Accumulates parameter gradients of one step into `grad` and returns the
// gradients w.r.t. the step's input, previous hidden and previous cell state.
inline void lstm_backward(const LstmWeights& w, const LstmStep& s,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                          const Eigen::VectorXd& c_prev, const Eigen::VectorXd& dh,
                          const Eigen::VectorXd& dc_next, LstmWeights& grad,
                          Eigen::VectorXd* dx, Eigen::VectorXd& dh_prev,
                          Eigen::VectorXd& dc_prev) {
  const Eigen::Index n = s.h.size();
  const Eigen::VectorXd d_o = dh.cwiseProduct(s.tanh_c);
  const Eigen::VectorXd dc =
      dc_next + dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
  Eigen::VectorXd dz(4 * n);
  dz.segment(0, n) = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
  dz.segment(n, n) = dc.cwiseProduct(c_prev).cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
  dz.segment(2 * n, n) = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
  dz.segment(3 * n, n) = d_o.cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));
  grad.wx.noalias() += dz * x.transpose();
  grad.wh.noalias() += dz * h_prev.transpose();
  grad.b += dz;
  if (dx) dx->noalias() = w.wx.transpose() * dz;
  dh_prev.noalias() = w.wh.transpose() * dz;
  dc_prev = dc.cwiseProduct(s.f);
}

// Full forward pass with every intermediate kept.
struct ForwardTrace {
  std::vector<LstmStep> enc;
  Eigen::VectorXd rep;       // R
  double rep_norm = 0.0;
  Eigen::VectorXd rep_unit;  // R*
  std::vector<LstmStep> dec;
  std::vector<Eigen::VectorXd> dec_in;  // decoder inputs u_t
  Eigen::MatrixXd out;                  // l x d_in, row t = y_t
};

inline void check_window(const Eigen::MatrixXd& x, const ModelParams& p) {
  if (x.rows() < 1) fail(ErrorKind::invalid_argument, "empty window");
  if (static_cast<std::size_t>(x.cols()) != p.d_in)
    fail(ErrorKind::invalid_argument, "feature dimension mismatch");
}

inline Eigen::VectorXd run_encoder(const Eigen::MatrixXd& x, const ModelParams& p,
                                   std::vector<LstmStep>* steps) {
  const auto h = static_cast<Eigen::Index>(p.d_h);
  Eigen::VectorXd hs = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(h);
  LstmStep s;
  if (steps) steps->resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    LstmStep& cur = steps ? (*steps)[static_cast<std::size_t>(t)] : s;
    lstm_forward(p.encoder, x.row(t).transpose(), hs, cs, cur);
    hs = cur.h;
    cs = cur.c;
  }
  return hs;
}

using OutputHook = std::function<void(std::size_t step, Eigen::VectorXd& y)>;

inline Eigen::MatrixXd run_decoder(const Eigen::VectorXd& r_star, std::size_t len,
                                   const ModelParams& p, std::vector<LstmStep>* steps,
                                   std::vector<Eigen::VectorXd>* inputs,
                                   const OutputHook& hook = {}) {
  const auto d = static_cast<Eigen::Index>(p.d_in);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(len), d);
  Eigen::VectorXd hs = r_star;
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(r_star.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  LstmStep s;
  if (steps) steps->resize(len);
  if (inputs) inputs->resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    LstmStep& cur = steps ? (*steps)[t] : s;
    if (inputs) (*inputs)[t] = u;
    lstm_forward(p.decoder, u, hs, cs, cur);
    hs = cur.h;
    cs = cur.c;
    Eigen::VectorXd y = p.b_out;
    y.noalias() += p.w_out * hs;
    if (hook) hook(t, y);
    out.row(static_cast<Eigen::Index>(t)) = y.transpose();
    u = std::move(y);
  }
  return out;
}

}  // namespace detail

/// Final encoder hidden state R (not normalized).
inline Representation encode(const Eigen::MatrixXd& window, const ModelParams& p) {
  detail::check_window(window, p);
  return {detail::run_encoder(window, p, nullptr), false};
}

inline Representation encode(const FeatureWindow& window, const ModelParams& p) {
  return encode(window.features, p);
}

inline Representation unit_normalize(const Representation& r) {
  const double n = r.values.norm();
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::numeric, "degenerate representation");
  return {r.values / n, true};
}

inline constexpr double kUnitTolerance = 1e-9;

inline bool is_unit(const Eigen::VectorXd& v) {
  return std::abs(v.norm() - 1.0) <= kUnitTolerance;
}

/// Autoregressive reconstruction of `len` steps, in reverse window order.
/// The optional hook may inspect or modify each output before it is fed
/// back as the next input.
inline Eigen::MatrixXd decode(const Representation& r_star, std::size_t len,
                              const ModelParams& p, const detail::OutputHook& hook = {}) {
  if (!r_star.normalized || !is_unit(r_star.values))
    fail(ErrorKind::invalid_argument, "expected unit representation");
  if (static_cast<std::size_t>(r_star.values.size()) != p.d_h)
    fail(ErrorKind::invalid_argument, "representation dimension mismatch");
  if (len < 1) fail(ErrorKind::invalid_argument, "decode length must be >= 1");
  return detail::run_decoder(r_star.values, len, p, nullptr, nullptr, hook);
}

inline Eigen::MatrixXd reversed_rows(const Eigen::MatrixXd& x) {
  return x.colwise().reverse();
}

/// Mean squared error between reverse(window) and the reconstruction.
inline double reconstruction_error(const Eigen::MatrixXd& window, const ModelParams& p) {
  detail::check_window(window, p);
  const auto r = unit_normalize(encode(window, p));
  const auto y = decode(r, static_cast<std::size_t>(window.rows()), p);
  return (y - reversed_rows(window)).squaredNorm() / static_cast<double>(window.size());
}

inline double reconstruction_error(const FeatureWindow& window, const ModelParams& p) {
  return reconstruction_error(window.features, p);
}

/// Reconstruction MSE plus weight_decay * ||W_out||_F^2.
inline double loss(const Eigen::MatrixXd& window, const ModelParams& p, double weight_decay) {
  return reconstruction_error(window, p) + weight_decay * p.w_out.squaredNorm();
}

inline double loss(const FeatureWindow& window, const ModelParams& p, double weight_decay) {
  return loss(window.features, p, weight_decay);
}

/// Exact gradient of loss() by backpropagation through time, including the
/// decoder's output feedback and the Jacobian of x / ||x||.
/// Gradients are accumulated into `grad`; the loss value is returned.
inline double backward(const Eigen::MatrixXd& window, const ModelParams& p,
                       double weight_decay, Gradients& grad) {
  detail::check_window(window, p);
  const auto len = static_cast<std::size_t>(window.rows());
  const auto h = static_cast<Eigen::Index>(p.d_h);

  detail::ForwardTrace tr;
  tr.rep = detail::run_encoder(window, p, &tr.enc);
  tr.rep_norm = tr.rep.norm();
  if (!(tr.rep_norm > 0.0) || !std::isfinite(tr.rep_norm))
    fail(ErrorKind::numeric, "degenerate representation");
  tr.rep_unit = tr.rep / tr.rep_norm;
  tr.out = detail::run_decoder(tr.rep_unit, len, p, &tr.dec, &tr.dec_in);

  const Eigen::MatrixXd target = reversed_rows(window);
  const Eigen::MatrixXd diff = tr.out - target;
  const double scale = 2.0 / static_cast<double>(window.size());
  const double value = diff.squaredNorm() / static_cast<double>(window.size()) +
                       weight_decay * p.w_out.squaredNorm();

  // Decoder, newest step first. du carries d loss / d u_{t+1} = d loss / d y_t
  // through the feedback path.
  Eigen::VectorXd du = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.d_in));
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dh_prev(h), dc_prev(h), du_step;
  const Eigen::VectorXd zero_c = Eigen::VectorXd::Zero(h);
  for (std::size_t k = len; k-- > 0;) {
    const auto t = static_cast<Eigen::Index>(k);
    const Eigen::VectorXd dy = scale * diff.row(t).transpose() + du;
    const auto& st = tr.dec[k];
    grad.w_out.noalias() += dy * st.h.transpose();
    grad.b_out += dy;
    Eigen::VectorXd dh = dh_next;
    dh.noalias() += p.w_out.transpose() * dy;
    const Eigen::VectorXd& h_prev = k == 0 ? tr.rep_unit : tr.dec[k - 1].h;
    const Eigen::VectorXd& c_prev = k == 0 ? zero_c : tr.dec[k - 1].c;
    detail::lstm_backward(p.decoder, st, tr.dec_in[k], h_prev, c_prev, dh, dc_next,
                          grad.decoder, &du_step, dh_prev, dc_prev);
    du = du_step;
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  grad.w_out += 2.0 * weight_decay * p.w_out;

  // Through R* = R / ||R||.
  const Eigen::VectorXd& u = tr.rep_unit;
  Eigen::VectorXd dh = (dh_next - u * u.dot(dh_next)) / tr.rep_norm;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(h);

  const Eigen::VectorXd zero_h = Eigen::VectorXd::Zero(h);
  for (std::size_t k = len; k-- > 0;) {
    const auto& st = tr.enc[k];
    const Eigen::VectorXd& h_prev = k == 0 ? zero_h : tr.enc[k - 1].h;
    const Eigen::VectorXd& c_prev = k == 0 ? zero_c : tr.enc[k - 1].c;
    detail::lstm_backward(p.encoder, st, window.row(static_cast<Eigen::Index>(k)).transpose(),
                          h_prev, c_prev, dh, dc, grad.encoder, nullptr, dh_prev, dc_prev);
    dh = dh_prev;
    dc = dc_prev;
  }
  return value;
}

inline Gradients backward(const Eigen::MatrixXd& window, const ModelParams& p,
                          double weight_decay) {
  Gradients g = ModelParams::zeros(p.d_in, p.d_h);
  backward(window, p, weight_decay, g);
  return g;
}

}  // namespace prodrome
