/* Copyright 2026 The osmgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Decentralized parallel SGD harness. Workers sit in a communication ring;
// after each mini-batch every worker averages its parameters with a randomly
// chosen peer. Asynchrony is modeled in deterministic virtual time: the
// gradient of step t is taken on the pre-averaging weights and applied after
// the averaging, which is how compute/communication overlap behaves.

#pragma once

#include <barrier>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "osmgen/error.hpp"
#include "osmgen/util.hpp"

namespace osmgen {

/// Named parameter groups, each a flat vector.
using ParamGroups = std::vector<std::vector<double>>;

/// A finite-sum objective: mean of per-sample losses.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t num_samples() const = 0;
  virtual std::vector<std::string> group_names() const = 0;
  virtual ParamGroups initial_params() const = 0;
  virtual double sample_loss(const ParamGroups& params, std::size_t sample) const = 0;
  /// Adds scale * d loss_sample / d params into grad (same shape as params).
  virtual void add_sample_gradient(const ParamGroups& params, std::size_t sample, double scale,
                                   ParamGroups& grad) const = 0;

  double full_loss(const ParamGroups& params) const {
    double s = 0.0;
    for (std::size_t i = 0; i < num_samples(); ++i) s += sample_loss(params, i);
    return s / static_cast<double>(num_samples());
  }
};

inline ParamGroups zeros_like(const ParamGroups& p) {
  ParamGroups z(p.size());
  for (std::size_t g = 0; g < p.size(); ++g) z[g].assign(p[g].size(), 0.0);
  return z;
}

inline bool same_shape(const ParamGroups& a, const ParamGroups& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t g = 0; g < a.size(); ++g)
    if (a[g].size() != b[g].size()) return false;
  return true;
}

/// Least squares: loss_i = 0.5 * (a_i . w - b_i)^2, one group "w".
class LeastSquares final : public Objective {
 public:
  LeastSquares(std::vector<std::vector<double>> features, std::vector<double> targets)
      : a_(std::move(features)), b_(std::move(targets)) {
    if (a_.empty() || a_.size() != b_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "least squares needs matching non-empty data");
    }
  }

  /// n samples with standard-normal features, targets a . w_true + noise.
  static LeastSquares random(std::size_t n, std::size_t dim, double noise, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x15));
    std::vector<double> w_true(dim);
    for (auto& v : w_true) v = standard_normal(rng);
    std::vector<std::vector<double>> a(n, std::vector<double>(dim));
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        a[i][j] = standard_normal(rng);
        dot += a[i][j] * w_true[j];
      }
      b[i] = dot + noise * standard_normal(rng);
    }
    return LeastSquares(std::move(a), std::move(b));
  }

  std::size_t num_samples() const override { return a_.size(); }
  std::vector<std::string> group_names() const override { return {"w"}; }
  ParamGroups initial_params() const override { return {std::vector<double>(a_[0].size(), 0.0)}; }

  double sample_loss(const ParamGroups& p, std::size_t i) const override {
    const double r = residual(p[0], i);
    return 0.5 * r * r;
  }
  void add_sample_gradient(const ParamGroups& p, std::size_t i, double scale,
                           ParamGroups& grad) const override {
    const double r = residual(p[0], i) * scale;
    for (std::size_t j = 0; j < a_[i].size(); ++j) grad[0][j] += r * a_[i][j];
  }

 private:
  double residual(const std::vector<double>& w, std::size_t i) const {
    double dot = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) dot += a_[i][j] * w[j];
    return dot - b_[i];
  }

  std::vector<std::vector<double>> a_;
  std::vector<double> b_;
};

/// L2-regularized logistic regression with labels in {-1, +1}.
class LogisticRegression final : public Objective {
 public:
  LogisticRegression(std::vector<std::vector<double>> features, std::vector<double> labels,
                     double l2 = 1e-3)
      : x_(std::move(features)), y_(std::move(labels)), l2_(l2) {
    if (x_.empty() || x_.size() != y_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "logistic regression needs matching non-empty data");
    }
  }

  static LogisticRegression random(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x10));
    std::vector<double> w_true(dim);
    for (auto& v : w_true) v = standard_normal(rng);
    std::vector<std::vector<double>> x(n, std::vector<double>(dim));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        x[i][j] = standard_normal(rng);
        dot += x[i][j] * w_true[j];
      }
      const double p = 1.0 / (1.0 + std::exp(-dot));
      y[i] = uniform_unit(rng) < p ? 1.0 : -1.0;
    }
    return LogisticRegression(std::move(x), std::move(y));
  }

  std::size_t num_samples() const override { return x_.size(); }
  std::vector<std::string> group_names() const override { return {"w"}; }
  ParamGroups initial_params() const override { return {std::vector<double>(x_[0].size(), 0.0)}; }

  double sample_loss(const ParamGroups& p, std::size_t i) const override {
    const double m = y_[i] * dot(p[0], i);
    double reg = 0.0;
    for (double v : p[0]) reg += v * v;
    // log(1 + exp(-m)) without overflow.
    const double ll = m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    return ll + 0.5 * l2_ * reg;
  }
  void add_sample_gradient(const ParamGroups& p, std::size_t i, double scale,
                           ParamGroups& grad) const override {
    const double m = y_[i] * dot(p[0], i);
    const double s = -y_[i] / (1.0 + std::exp(m));
    for (std::size_t j = 0; j < p[0].size(); ++j) {
      grad[0][j] += scale * (s * x_[i][j] + l2_ * p[0][j]);
    }
  }

 private:
  double dot(const std::vector<double>& w, std::size_t i) const {
    double d = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) d += x_[i][j] * w[j];
    return d;
  }

  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  double l2_;
};

/// Two coupled groups standing in for generator and discriminator:
///   loss_i = 0.5|u - u_i|^2 + 0.5|v - v_i|^2 + c (u - u_i).(v - v_i)
/// Strongly convex for |c| < 1.
class CoupledQuadratic final : public Objective {
 public:
  CoupledQuadratic(std::vector<std::vector<double>> u_targets,
                   std::vector<std::vector<double>> v_targets, double coupling)
      : u_(std::move(u_targets)), v_(std::move(v_targets)), c_(coupling) {
    if (u_.empty() || u_.size() != v_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "coupled quadratic needs matching non-empty targets");
    }
  }

  static CoupledQuadratic random(std::size_t n, std::size_t dim, double coupling, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xC0));
    std::vector<std::vector<double>> u(n, std::vector<double>(dim)), v(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        u[i][j] = 1.0 + 0.3 * standard_normal(rng);
        v[i][j] = -1.0 + 0.3 * standard_normal(rng);
      }
    return CoupledQuadratic(std::move(u), std::move(v), coupling);
  }

  std::size_t num_samples() const override { return u_.size(); }
  std::vector<std::string> group_names() const override { return {"generator", "discriminator"}; }
  ParamGroups initial_params() const override {
    return {std::vector<double>(u_[0].size(), 0.0), std::vector<double>(v_[0].size(), 0.0)};
  }

  double sample_loss(const ParamGroups& p, std::size_t i) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < p[0].size(); ++j) {
      const double du = p[0][j] - u_[i][j], dv = p[1][j] - v_[i][j];
      s += 0.5 * du * du + 0.5 * dv * dv + c_ * du * dv;
    }
    return s;
  }
  void add_sample_gradient(const ParamGroups& p, std::size_t i, double scale,
                           ParamGroups& grad) const override {
    for (std::size_t j = 0; j < p[0].size(); ++j) {
      const double du = p[0][j] - u_[i][j], dv = p[1][j] - v_[i][j];
      grad[0][j] += scale * (du + c_ * dv);
      grad[1][j] += scale * (dv + c_ * du);
    }
  }

 private:
  std::vector<std::vector<double>> u_;
  std::vector<std::vector<double>> v_;
  double c_;
};

// ---------------------------------------------------------------------------
// Configuration and worker state

enum class Averaging { kRandomPartner, kRingNeighbor, kNone };

inline Averaging averaging_from_string(const std::string& s) {
  if (s == "random_partner" || s == "random-partner") return Averaging::kRandomPartner;
  if (s == "ring_neighbor" || s == "ring-neighbor") return Averaging::kRingNeighbor;
  if (s == "none") return Averaging::kNone;
  throw Error(ErrorCode::kInvalidArgument, "unknown averaging mode '" + s + "'");
}

struct TrainConfig {
  int workers = 1;
  double lr = 0.05;
  /// When set, the step size decays geometrically from lr to lr_final over
  /// the run; otherwise it is constant.
  std::optional<double> lr_final;
  std::size_t batch = 1;  // 0 = full shard
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::kRandomPartner;
  std::size_t trace_every = 1;
  double divergence_threshold = 1e12;

  void validate() const {
    if (workers < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one worker");
    if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
    if (lr_final && !(*lr_final > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr_final must be > 0");
    if (trace_every == 0) throw Error(ErrorCode::kInvalidArgument, "trace_every must be >= 1");
  }
};

inline double learning_rate_at(const TrainConfig& cfg, std::size_t step) {
  if (!cfg.lr_final || cfg.steps <= 1 || cfg.lr == 0.0) return cfg.lr;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
  return cfg.lr * std::pow(*cfg.lr_final / cfg.lr, frac);
}

struct WorkerState {
  int worker_id = 0;
  ParamGroups params;
  Rng sample_rng;  // mini-batch draws
  Rng gossip_rng;  // partner draws
  std::size_t step_count = 0;
  std::size_t shard_begin = 0;
  std::size_t shard_end = 0;

  std::size_t shard_size() const { return shard_end - shard_begin; }
};

/// Worker i owns the contiguous shard [i*N/K, (i+1)*N/K); streams are derived
/// from (seed, i).
inline std::vector<WorkerState> make_workers(const Objective& obj, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = obj.num_samples();
  const std::size_t k = static_cast<std::size_t>(cfg.workers);
  if (n < k) throw Error(ErrorCode::kInvalidArgument, "fewer samples than workers");
  std::vector<WorkerState> ws(k);
  for (std::size_t i = 0; i < k; ++i) {
    ws[i].worker_id = static_cast<int>(i);
    ws[i].params = obj.initial_params();
    ws[i].sample_rng.seed(derive_seed(cfg.seed, 2 * i));
    ws[i].gossip_rng.seed(derive_seed(cfg.seed, 2 * i + 1));
    ws[i].shard_begin = i * n / k;
    ws[i].shard_end = (i + 1) * n / k;
  }
  return ws;
}

/// Mean gradient over a mini-batch drawn (with replacement) from the
/// worker's shard; batch 0 or >= shard size uses the whole shard in order.
inline ParamGroups minibatch_gradient(WorkerState& w, const Objective& obj, const TrainConfig& cfg) {
  ParamGroups grad = zeros_like(w.params);
  const std::size_t shard = w.shard_size();
  if (cfg.batch == 0 || cfg.batch >= shard) {
    const double scale = 1.0 / static_cast<double>(shard);
    for (std::size_t i = w.shard_begin; i < w.shard_end; ++i) obj.add_sample_gradient(w.params, i, scale, grad);
  } else {
    const double scale = 1.0 / static_cast<double>(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const std::size_t i = w.shard_begin + uniform_index(w.sample_rng, shard);
      obj.add_sample_gradient(w.params, i, scale, grad);
    }
  }
  for (const auto& g : grad)
    for (double v : g)
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDivergence,
                    "non-finite gradient on worker " + std::to_string(w.worker_id));
      }
  return grad;
}

/// params <- params - lr * grad for every group at once.
inline void apply_update(WorkerState& w, const ParamGroups& grad, double lr) {
  for (std::size_t g = 0; g < w.params.size(); ++g)
    for (std::size_t j = 0; j < w.params[g].size(); ++j) w.params[g][j] -= lr * grad[g][j];
  ++w.step_count;
}

/// One SGD step. Every group's gradient is taken at the pre-step snapshot,
/// so coupled groups (generator/discriminator) step simultaneously.
inline WorkerState local_step(WorkerState w, const Objective& obj, const TrainConfig& cfg,
                              std::optional<double> lr = std::nullopt) {
  const ParamGroups grad = minibatch_gradient(w, obj, cfg);
  apply_update(w, grad, lr.value_or(learning_rate_at(cfg, w.step_count)));
  return w;
}

inline void pair_average_inplace(WorkerState& a, WorkerState& b) {
  if (!same_shape(a.params, b.params)) {
    throw Error(ErrorCode::kShapeMismatch, "workers hold differently shaped parameters");
  }
  for (std::size_t g = 0; g < a.params.size(); ++g)
    for (std::size_t j = 0; j < a.params[g].size(); ++j) {
      const double m = (a.params[g][j] + b.params[g][j]) * 0.5;
      a.params[g][j] = m;
      b.params[g][j] = m;
    }
}

inline std::pair<WorkerState, WorkerState> pair_average(WorkerState a, WorkerState b) {
  pair_average_inplace(a, b);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Simulation

inline double param_distance(const ParamGroups& a, const ParamGroups& b) {
  double s = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g)
    for (std::size_t j = 0; j < a[g].size(); ++j) {
      const double d = a[g][j] - b[g][j];
      s += d * d;
    }
  return std::sqrt(s);
}

/// max_{i,j} |params_i - params_j|.
inline double consensus_distance(const std::vector<WorkerState>& ws) {
  double best = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = i + 1; j < ws.size(); ++j)
      best = std::max(best, param_distance(ws[i].params, ws[j].params));
  return best;
}

/// Coordinate-wise sum over workers, accumulated in worker order.
inline ParamGroups global_sum(const std::vector<WorkerState>& ws) {
  ParamGroups s = zeros_like(ws.front().params);
  for (const auto& w : ws)
    for (std::size_t g = 0; g < s.size(); ++g)
      for (std::size_t j = 0; j < s[g].size(); ++j) s[g][j] += w.params[g][j];
  return s;
}

inline ParamGroups global_mean(const std::vector<WorkerState>& ws) {
  ParamGroups s = global_sum(ws);
  for (auto& g : s)
    for (auto& v : g) v /= static_cast<double>(ws.size());
  return s;
}

struct TraceRow {
  std::size_t step = 0;
  int worker = 0;
  double loss = 0.0;
  double consensus_distance = 0.0;
};

struct StepSummary {
  std::size_t step = 0;
  double lr = 0.0;
  double consensus_distance = 0.0;
  double global_mean_loss = 0.0;
};

struct AveragingEvent {
  std::size_t step = 0;
  int a = 0;
  int b = 0;
  /// max over coordinates of |global sum after - before|, and the scale
  /// sum_i |w_i| against which that drift is judged.
  double sum_drift = 0.0;
  double sum_scale = 0.0;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  std::vector<StepSummary> steps;
  std::vector<AveragingEvent> averaging;
  std::vector<WorkerState> workers;
  ParamGroups global_mean_params;
  double final_global_mean_loss = 0.0;
  double final_consensus_distance = 0.0;
};

namespace detail {

// Partner draw for every worker (always one draw per worker per step, so
// streams stay aligned), then exclusive pairing in ascending worker id.
inline std::vector<std::pair<int, int>> choose_pairs(std::vector<WorkerState>& ws, Averaging mode) {
  const int k = static_cast<int>(ws.size());
  std::vector<std::pair<int, int>> pairs;
  if (mode == Averaging::kNone || k < 2) return pairs;
  std::vector<int> partner(k);
  for (int i = 0; i < k; ++i) {
    if (mode == Averaging::kRandomPartner) {
      int p = static_cast<int>(uniform_index(ws[i].gossip_rng, static_cast<std::uint64_t>(k - 1)));
      partner[i] = p >= i ? p + 1 : p;
    } else {
      const bool right = uniform_index(ws[i].gossip_rng, 2) == 1;
      partner[i] = right ? (i + 1) % k : (i + k - 1) % k;
    }
  }
  std::vector<char> busy(k, 0);
  for (int i = 0; i < k; ++i) {
    const int p = partner[i];
    if (busy[i] || busy[p]) continue;
    busy[i] = busy[p] = 1;
    pairs.emplace_back(i, p);
  }
  return pairs;
}

inline AveragingEvent average_and_log(std::vector<WorkerState>& ws, std::size_t step, int a, int b) {
  const ParamGroups before = global_sum(ws);
  pair_average_inplace(ws[a], ws[b]);
  const ParamGroups after = global_sum(ws);
  AveragingEvent ev{step, a, b, 0.0, 0.0};
  for (std::size_t g = 0; g < before.size(); ++g)
    for (std::size_t j = 0; j < before[g].size(); ++j)
      ev.sum_drift = std::max(ev.sum_drift, std::abs(after[g][j] - before[g][j]));
  for (const auto& w : ws)
    for (const auto& g : w.params)
      for (double v : g) ev.sum_scale += std::abs(v);
  return ev;
}

inline void record_step(TrainingTrace& trace, const std::vector<WorkerState>& ws, const Objective& obj,
                        const TrainConfig& cfg, std::size_t step, double lr) {
  const double consensus = consensus_distance(ws);
  for (const auto& w : ws) {
    const double loss = obj.full_loss(w.params);
    if (!std::isfinite(loss) || loss > cfg.divergence_threshold) {
      throw Error(ErrorCode::kDivergence, "worker " + std::to_string(w.worker_id) +
                                              " diverged at step " + std::to_string(step));
    }
    trace.rows.push_back({step, w.worker_id, loss, consensus});
  }
  trace.steps.push_back({step, lr, consensus, obj.full_loss(global_mean(ws))});
}

inline void finish_trace(TrainingTrace& trace, std::vector<WorkerState> ws, const Objective& obj) {
  trace.global_mean_params = global_mean(ws);
  trace.final_global_mean_loss = obj.full_loss(trace.global_mean_params);
  trace.final_consensus_distance = consensus_distance(ws);
  trace.workers = std::move(ws);
}

}  // namespace detail

/// Deterministic virtual-time simulation. Per step, for every worker: take
/// the mini-batch gradient on its current (pre-averaging) weights, average
/// with the chosen partner, then apply the gradient.
inline TrainingTrace run_training(const Objective& obj, const TrainConfig& cfg) {
  std::vector<WorkerState> ws = make_workers(obj, cfg);
  TrainingTrace trace;
  std::vector<ParamGroups> grads(ws.size());
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const double lr = learning_rate_at(cfg, t);
    for (std::size_t i = 0; i < ws.size(); ++i) grads[i] = minibatch_gradient(ws[i], obj, cfg);
    for (auto [a, b] : detail::choose_pairs(ws, cfg.averaging)) {
      trace.averaging.push_back(detail::average_and_log(ws, t, a, b));
    }
    for (std::size_t i = 0; i < ws.size(); ++i) apply_update(ws[i], grads[i], lr);
    if (t % cfg.trace_every == 0 || t + 1 == cfg.steps) detail::record_step(trace, ws, obj, cfg, t, lr);
  }
  detail::finish_trace(trace, std::move(ws), obj);
  return trace;
}

/// Same protocol with one thread per worker. Gradients and updates run in
/// parallel; pairing and bookkeeping happen in the barrier completion step,
/// so the result equals run_training.
inline TrainingTrace run_training_threaded(const Objective& obj, const TrainConfig& cfg) {
  std::vector<WorkerState> ws = make_workers(obj, cfg);
  TrainingTrace trace;
  const std::size_t k = ws.size();
  std::vector<ParamGroups> grads(k);
  std::vector<std::exception_ptr> errors(k);
  std::size_t step = 0;
  bool stop = cfg.steps == 0;
  std::exception_ptr fatal;

  auto after_gradients = [&]() noexcept {
    for (auto& e : errors)
      if (e && !fatal) fatal = e;
    if (fatal) {
      stop = true;
      return;
    }
    try {
      for (auto [a, b] : detail::choose_pairs(ws, cfg.averaging)) {
        trace.averaging.push_back(detail::average_and_log(ws, step, a, b));
      }
    } catch (...) {
      fatal = std::current_exception();
      stop = true;
    }
  };
  auto after_updates = [&]() noexcept {
    if (fatal) return;
    try {
      if (step % cfg.trace_every == 0 || step + 1 == cfg.steps) {
        detail::record_step(trace, ws, obj, cfg, step, learning_rate_at(cfg, step));
      }
    } catch (...) {
      fatal = std::current_exception();
    }
    ++step;
    if (fatal || step >= cfg.steps) stop = true;
  };
  std::barrier gradients_done(static_cast<std::ptrdiff_t>(k), after_gradients);
  std::barrier updates_done(static_cast<std::ptrdiff_t>(k), after_updates);

  if (!stop) {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < k; ++i) {
      pool.emplace_back([&, i] {
        while (true) {
          try {
            grads[i] = minibatch_gradient(ws[i], obj, cfg);
          } catch (...) {
            errors[i] = std::current_exception();
          }
          gradients_done.arrive_and_wait();
          if (stop) return;
          apply_update(ws[i], grads[i], learning_rate_at(cfg, step));
          updates_done.arrive_and_wait();
          if (stop) return;
        }
      });
    }
  }
  if (fatal) std::rethrow_exception(fatal);
  detail::finish_trace(trace, std::move(ws), obj);
  return trace;
}

inline std::string trace_to_csv(const TrainingTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "step,worker,loss,consensus_distance\n";
  for (const auto& r : trace.rows) {
    os << r.step << ',' << r.worker << ',' << r.loss << ',' << r.consensus_distance << '\n';
  }
  return os.str();
}

/// Projected speed-up of K overlapped workers over one:
/// K * t_compute / (max(t_compute, t_comm) + sync_overhead).
inline double speedup_model(int workers, double t_compute, double t_comm, double sync_overhead = 0.0) {
  if (workers < 1 || !(t_compute > 0.0) || t_comm < 0.0 || sync_overhead < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "speedup model needs K >= 1 and positive times");
  }
  if (workers == 1) return 1.0;  // nothing to communicate
  return workers * t_compute / (std::max(t_compute, t_comm) + sync_overhead);
}

/// Sync overhead (as a fraction of t_compute, with t_comm <= t_compute) that
/// makes the model reproduce an observed speed-up. A fit, not a prediction.
inline double fit_sync_overhead(int workers, double observed_speedup) {
  if (!(observed_speedup > 0.0) || observed_speedup > workers) {
    throw Error(ErrorCode::kInvalidArgument, "observed speed-up must lie in (0, K]");
  }
  return workers / observed_speedup - 1.0;
}

}  // namespace osmgen
