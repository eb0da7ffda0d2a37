#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "dtcell/agent/policy.hpp"

namespace dtcell::agent::detail {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Offsets of every tensor inside the flat parameter vector.
struct Layout {
  int B = 0, H = 0, F = 0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, wih = 0, whh = 0, bl = 0, wa = 0, ba = 0, skip = 0, wv = 0, bv = 0, total = 0;

  explicit Layout(const NetworkShape& shape) : B(shape.num_bs), H(shape.hidden), F(shape.input_size()) {
    std::size_t at = 0;
    auto take = [&at](std::size_t n) {
      const std::size_t o = at;
      at += n;
      return o;
    };
    const auto b = static_cast<std::size_t>(B), h = static_cast<std::size_t>(H), f = static_cast<std::size_t>(F);
    w1 = take(h * f);
    b1 = take(h);
    w2 = take(h * h);
    b2 = take(h);
    wih = take(4 * h * h);
    whh = take(4 * h * h);
    bl = take(4 * h);
    wa = take(b * h);
    ba = take(b);
    skip = take(3);
    wv = take(h);
    bv = take(1);
    total = at;
  }
};

template <typename T>
struct NetMaps {
  using M = std::conditional_t<std::is_const_v<T>, const RowMat, RowMat>;
  using V = std::conditional_t<std::is_const_v<T>, const Eigen::VectorXd, Eigen::VectorXd>;
  using R = std::conditional_t<std::is_const_v<T>, const Eigen::RowVectorXd, Eigen::RowVectorXd>;

  Eigen::Map<M> w1;
  Eigen::Map<V> b1;
  Eigen::Map<M> w2;
  Eigen::Map<V> b2;
  Eigen::Map<M> wih;
  Eigen::Map<M> whh;
  Eigen::Map<V> bl;
  Eigen::Map<M> wa;
  Eigen::Map<V> ba;
  Eigen::Map<V> skip;  // per-BS (sinr, load, assoc) feature weights
  Eigen::Map<R> wv;
  T& bv;

  NetMaps(T* base, const Layout& l)
      : w1(base + l.w1, l.H, l.F),
        b1(base + l.b1, l.H),
        w2(base + l.w2, l.H, l.H),
        b2(base + l.b2, l.H),
        wih(base + l.wih, 4 * l.H, l.H),
        whh(base + l.whh, 4 * l.H, l.H),
        bl(base + l.bl, 4 * l.H),
        wa(base + l.wa, l.B, l.H),
        ba(base + l.ba, l.B),
        skip(base + l.skip, 3),
        wv(base + l.wv, l.H),
        bv(base[l.bv]) {}
};

/// Activations of one recurrent step for a batch of S columns.
struct StepCache {
  Mat x;             // F x S
  Mat e1, e2;        // H x S, post-tanh
  Mat gi, gf, gg, go;  // H x S, post-activation
  Mat c_prev, h_prev;
  Mat c, tc, h;      // tc = tanh(c)
  Mat mask;          // B x S, 1 = allowed
  Mat probs;         // B x S
  Mat log_probs;     // B x S, valid where mask is set
  Eigen::RowVectorXd vn;  // normalized critic output
};

/// Fixed multiplier on the per-BS skip weights. Adam moves every weight by
/// roughly the learning rate per step, so the gain lets the three shared
/// weights reach useful magnitudes within a small sample budget.
inline constexpr double kSkipGain = 10.0;

inline Mat sigmoid(const Mat& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

/// Fills every cache field from cache.x, cache.h_prev, cache.c_prev, cache.mask.
inline void step_forward(const NetMaps<const double>& w, const Layout& l, StepCache& s) {
  const Eigen::Index H = l.H;
  s.e1 = ((w.w1 * s.x).colwise() + w.b1).array().tanh().matrix();
  s.e2 = ((w.w2 * s.e1).colwise() + w.b2).array().tanh().matrix();
  const Mat z = ((w.wih * s.e2 + w.whh * s.h_prev).colwise() + w.bl);
  s.gi = sigmoid(z.topRows(H));
  s.gf = sigmoid(z.middleRows(H, H));
  s.gg = z.middleRows(2 * H, H).array().tanh().matrix();
  s.go = sigmoid(z.bottomRows(H));
  s.c = (s.gf.array() * s.c_prev.array() + s.gi.array() * s.gg.array()).matrix();
  s.tc = s.c.array().tanh().matrix();
  s.h = (s.go.array() * s.tc.array()).matrix();

  const Eigen::Index nb = l.B;
  const double k = kSkipGain;
  const Mat logits = ((w.wa * s.h).colwise() + w.ba) + k * w.skip(0) * s.x.topRows(nb) +
                     k * w.skip(1) * s.x.middleRows(nb, nb) + k * w.skip(2) * s.x.bottomRows(nb);
  const Eigen::Index S = logits.cols(), B = logits.rows();
  s.probs.setZero(B, S);
  s.log_probs.setZero(B, S);
  for (Eigen::Index j = 0; j < S; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < B; ++k)
      if (s.mask(k, j) != 0.0) mx = std::max(mx, logits(k, j));
    double sum = 0.0;
    for (Eigen::Index k = 0; k < B; ++k)
      if (s.mask(k, j) != 0.0) sum += std::exp(logits(k, j) - mx);
    const double log_sum = std::log(sum);
    for (Eigen::Index k = 0; k < B; ++k) {
      if (s.mask(k, j) == 0.0) continue;
      s.log_probs(k, j) = logits(k, j) - mx - log_sum;
      s.probs(k, j) = std::exp(s.log_probs(k, j));
    }
  }
  s.vn = (w.wv * s.h).array() + w.bv;
}

}  // namespace dtcell::agent::detail
