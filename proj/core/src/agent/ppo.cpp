#include "dtcell/agent/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dtcell/common/error.hpp"
#include "network.hpp"

namespace dtcell::agent {

GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ContractViolation("gae_advantages: length mismatch");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap_value;
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    running = delta + gamma * lambda * live * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

LossStats ppo_loss(const PolicyParameters& params, std::span<const Segment* const> segments, const PpoHyper& hyper,
                   std::vector<double>* grad) {
  const detail::Layout l(params.shape());
  const detail::NetMaps<const double> w(params.flat().data(), l);
  const auto S = static_cast<Eigen::Index>(segments.size());
  const auto H = static_cast<std::size_t>(l.H);
  std::size_t T = 0, total = 0;
  for (const auto* seg : segments) {
    const std::size_t len = seg->length();
    if (seg->features.size() != len * static_cast<std::size_t>(l.F) ||
        seg->masks.size() != len * static_cast<std::size_t>(l.B) || seg->old_log_probs.size() != len ||
        seg->advantages.size() != len || seg->returns.size() != len || seg->initial.h.size() != H ||
        seg->initial.c.size() != H)
      throw ContractViolation("ppo_loss: malformed segment");
    T = std::max(T, len);
    total += len;
  }
  LossStats stats;
  if (grad) grad->assign(l.total, 0.0);
  if (total == 0) return stats;
  const double inv_n = 1.0 / static_cast<double>(total);
  const auto& norm = params.value_normalizer();

  std::vector<detail::StepCache> caches(T);
  for (std::size_t t = 0; t < T; ++t) {
    auto& c = caches[t];
    c.x.setZero(l.F, S);
    c.mask.setOnes(l.B, S);
    if (t == 0) {
      c.h_prev.resize(l.H, S);
      c.c_prev.resize(l.H, S);
      for (Eigen::Index j = 0; j < S; ++j)
        for (std::size_t k = 0; k < H; ++k) {
          c.h_prev(k, j) = segments[j]->initial.h[k];
          c.c_prev(k, j) = segments[j]->initial.c[k];
        }
    } else {
      c.h_prev = caches[t - 1].h;
      c.c_prev = caches[t - 1].c;
    }
    for (Eigen::Index j = 0; j < S; ++j) {
      const auto* seg = segments[j];
      if (t >= seg->length()) continue;
      for (int k = 0; k < l.F; ++k) c.x(k, j) = seg->features[t * l.F + k];
      for (int k = 0; k < l.B; ++k) c.mask(k, j) = seg->masks[t * l.B + k] ? 1.0 : 0.0;
    }
    detail::step_forward(w, l, c);
  }

  // Per-step output gradients.
  std::vector<detail::Mat> dlogits(T, detail::Mat::Zero(l.B, S));
  std::vector<Eigen::RowVectorXd> dvalue(T, Eigen::RowVectorXd::Zero(S));
  double clipped = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& c = caches[t];
    for (Eigen::Index j = 0; j < S; ++j) {
      const auto* seg = segments[j];
      if (t >= seg->length()) continue;
      const int a = seg->actions[t];
      if (a < 0 || a >= l.B || c.mask(a, j) == 0.0) throw ContractViolation("ppo_loss: action outside the mask");
      const double logp = c.log_probs(a, j);
      const double ratio = std::exp(logp - seg->old_log_probs[t]);
      const double adv = seg->advantages[t];
      const double clipped_ratio = std::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip);
      const double s1 = ratio * adv, s2 = clipped_ratio * adv;
      const bool unclipped = s1 <= s2;
      const double surrogate = unclipped ? s1 : s2;
      if (std::abs(ratio - 1.0) > hyper.clip) clipped += 1.0;

      double ent = 0.0;
      for (int k = 0; k < l.B; ++k)
        if (c.mask(k, j) != 0.0 && c.probs(k, j) > 0.0) ent -= c.probs(k, j) * c.log_probs(k, j);
      const double target = (seg->returns[t] - norm.mean) / norm.stddev;
      const double verr = c.vn(j) - target;

      stats.policy_loss -= surrogate * inv_n;
      stats.surrogate += surrogate * inv_n;
      stats.value_loss += verr * verr * inv_n;
      stats.entropy += ent * inv_n;
      stats.approx_kl += (seg->old_log_probs[t] - logp) * inv_n;

      if (!grad) continue;
      const double g_logp = unclipped ? -adv * ratio * inv_n : 0.0;
      const double g_ent = hyper.entropy_coef * inv_n;
      for (int k = 0; k < l.B; ++k) {
        if (c.mask(k, j) == 0.0) continue;
        const double p = c.probs(k, j);
        double d = g_logp * ((k == a ? 1.0 : 0.0) - p);
        if (p > 0.0) d += g_ent * p * (c.log_probs(k, j) + ent);
        dlogits[t](k, j) = d;
      }
      dvalue[t](j) = 2.0 * hyper.value_coef * verr * inv_n;
    }
  }
  stats.samples = total;
  stats.clip_fraction = clipped * inv_n;
  stats.loss = stats.policy_loss + hyper.value_coef * stats.value_loss - hyper.entropy_coef * stats.entropy;
  if (!grad) return stats;

  // Accumulate in Eigen-owned storage: its fixed alignment keeps the
  // vectorized reductions below independent of where `grad` was allocated.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.total));
  detail::NetMaps<double> g(acc.data(), l);
  detail::Mat dh_next = detail::Mat::Zero(l.H, S), dc_next = detail::Mat::Zero(l.H, S);
  for (std::size_t t = T; t-- > 0;) {
    const auto& c = caches[t];
    g.wa.noalias() += dlogits[t] * c.h.transpose();
    g.ba += dlogits[t].rowwise().sum();
    g.skip(0) += detail::kSkipGain * (dlogits[t].array() * c.x.topRows(l.B).array()).sum();
    g.skip(1) += detail::kSkipGain * (dlogits[t].array() * c.x.middleRows(l.B, l.B).array()).sum();
    g.skip(2) += detail::kSkipGain * (dlogits[t].array() * c.x.bottomRows(l.B).array()).sum();
    g.wv.noalias() += dvalue[t] * c.h.transpose();
    g.bv += dvalue[t].sum();

    const detail::Mat dh = dh_next + w.wa.transpose() * dlogits[t] + w.wv.transpose() * dvalue[t];
    const auto one = [](const detail::Mat& m) { return (1.0 - m.array().square()).matrix(); };
    const detail::Mat dc = dc_next + (dh.array() * c.go.array() * (1.0 - c.tc.array().square())).matrix();
    detail::Mat dz(4 * l.H, S);
    dz.topRows(l.H) = (dc.array() * c.gg.array() * c.gi.array() * (1.0 - c.gi.array())).matrix();
    dz.middleRows(l.H, l.H) = (dc.array() * c.c_prev.array() * c.gf.array() * (1.0 - c.gf.array())).matrix();
    dz.middleRows(2 * l.H, l.H) = (dc.array() * c.gi.array() * one(c.gg).array()).matrix();
    dz.bottomRows(l.H) = (dh.array() * c.tc.array() * c.go.array() * (1.0 - c.go.array())).matrix();

    g.wih.noalias() += dz * c.e2.transpose();
    g.whh.noalias() += dz * c.h_prev.transpose();
    g.bl += dz.rowwise().sum();
    dh_next.noalias() = w.whh.transpose() * dz;
    dc_next = (dc.array() * c.gf.array()).matrix();

    const detail::Mat da2 = ((w.wih.transpose() * dz).array() * one(c.e2).array()).matrix();
    g.w2.noalias() += da2 * c.e1.transpose();
    g.b2 += da2.rowwise().sum();
    const detail::Mat da1 = ((w.w2.transpose() * da2).array() * one(c.e1).array()).matrix();
    g.w1.noalias() += da1 * c.x.transpose();
    g.b1 += da1.rowwise().sum();
  }
  std::copy(acc.begin(), acc.end(), grad->begin());
  return stats;
}

namespace {

void normalize(std::vector<Segment>& batch) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : batch)
    for (double a : s.advantages) {
      sum += a;
      sq += a * a;
      ++n;
    }
  if (n == 0) return;
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(std::max(sq / static_cast<double>(n) - mean * mean, 0.0));
  for (auto& s : batch)
    for (double& a : s.advantages) a = (a - mean) / (sd + 1e-8);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

UpdateStats ppo_update(PolicyParameters& params, AdamState& adam, std::vector<Segment>& batch, const PpoHyper& hyper,
                       Rng& rng) {
  UpdateStats stats;
  if (batch.empty()) return stats;
  if (hyper.normalize_advantages) normalize(batch);
  std::vector<double> returns;
  for (const auto& s : batch) returns.insert(returns.end(), s.returns.begin(), s.returns.end());
  params.value_normalizer().update(returns);

  const std::size_t n = params.size();
  if (adam.m.size() != n) adam.m.assign(n, 0.0);
  if (adam.v.size() != n) adam.v.assign(n, 0.0);

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  std::vector<const Segment*> mb;
  double entropy_sum = 0.0, kl_sum = 0.0;
  int evaluated = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t pos = 0;
    while (pos < order.size()) {
      mb.clear();
      std::size_t samples = 0;
      while (pos < order.size() && (samples < static_cast<std::size_t>(hyper.minibatch_size) || mb.empty())) {
        mb.push_back(&batch[order[pos]]);
        samples += batch[order[pos]].length();
        ++pos;
      }
      const LossStats ls = ppo_loss(params, mb, hyper, &grad);
      if (evaluated == 0) stats.first = ls;
      stats.last = ls;
      ++evaluated;
      entropy_sum += ls.entropy;
      kl_sum += ls.approx_kl;
      if (!std::isfinite(ls.loss) || !all_finite(grad)) {
        ++stats.steps_rejected;
        continue;
      }
      double norm = 0.0;
      for (double gi : grad) norm += gi * gi;
      norm = std::sqrt(norm);
      stats.grad_norm = norm;
      const double scale = (hyper.max_grad_norm > 0.0 && norm > hyper.max_grad_norm) ? hyper.max_grad_norm / norm : 1.0;
      ++adam.steps;
      const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.steps));
      const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.steps));
      auto p = params.flat();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = grad[i] * scale;
        adam.m[i] = adam.beta1 * adam.m[i] + (1.0 - adam.beta1) * gi;
        adam.v[i] = adam.beta2 * adam.v[i] + (1.0 - adam.beta2) * gi * gi;
        const double mhat = adam.m[i] / bc1, vhat = adam.v[i] / bc2;
        p[i] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + adam.epsilon);
      }
      params.round_to_float();
      ++stats.steps_taken;
    }
  }
  if (evaluated > 0) {
    stats.mean_entropy = entropy_sum / evaluated;
    stats.mean_kl = kl_sum / evaluated;
  }
  return stats;
}

}  // namespace dtcell::agent
