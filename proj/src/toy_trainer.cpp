/**
 * Copyright 2026 The EDGC Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "edgc/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "edgc/compressor.hpp"
#include "edgc/cqm.hpp"
#include "edgc/errors.hpp"
#include "edgc/text_io.hpp"

namespace edgc {

ToyDataset make_toy_dataset(const ToyModelConfig& model, const ToyDataConfig& data, std::uint64_t seed) {
  if (data.samples < 1 || model.input_dim < 1 || model.num_classes < 2 || data.teacher_hidden < 1) {
    throw RangeError("toy dataset needs samples >= 1, input_dim >= 1, num_classes >= 2");
  }
  Rng rng = make_rng(seed, seed_stream::kToyData);
  ToyDataset d;
  d.x = gaussian_matrix(data.samples, model.input_dim, rng);
  const Matrix t1 = gaussian_matrix(data.teacher_hidden, model.input_dim, rng, 1.0 / std::sqrt(model.input_dim));
  const Matrix t2 = gaussian_matrix(model.num_classes, data.teacher_hidden, rng, 1.0 / std::sqrt(data.teacher_hidden));
  const Matrix logits = (d.x * t1.transpose()).cwiseMax(0.0) * t2.transpose();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_label(0, model.num_classes - 1);
  d.y.resize(static_cast<std::size_t>(data.samples));
  for (int i = 0; i < data.samples; ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    const double u = coin(rng);
    const int noisy = any_label(rng);
    d.y[static_cast<std::size_t>(i)] = u < data.label_noise ? noisy : static_cast<int>(arg);
  }
  return d;
}

ToyParameters init_toy_parameters(const ToyModelConfig& model, std::uint64_t seed) {
  Rng rng = make_rng(seed, seed_stream::kToyInit);
  ToyParameters p;
  p.w1 = gaussian_matrix(model.hidden_dim, model.input_dim, rng, std::sqrt(2.0 / model.input_dim));
  p.b1 = Vector::Zero(model.hidden_dim);
  p.w2 = gaussian_matrix(model.num_classes, model.hidden_dim, rng, std::sqrt(1.0 / model.hidden_dim));
  p.b2 = Vector::Zero(model.num_classes);
  return p;
}

double toy_loss_and_gradient(const ToyParameters& p, const ToyDataset& d, std::span<const int> rows,
                             ToyParameters* grad) {
  const auto B = static_cast<Eigen::Index>(rows.size());
  if (B == 0) throw DegenerateInputError("empty batch");
  Matrix xb(B, d.x.cols());
  for (Eigen::Index i = 0; i < B; ++i) xb.row(i) = d.x.row(rows[static_cast<std::size_t>(i)]);

  const Matrix pre = (xb * p.w1.transpose()).rowwise() + p.b1.transpose();
  const Matrix h = pre.cwiseMax(0.0);
  Matrix logits = (h * p.w2.transpose()).rowwise() + p.b2.transpose();

  double loss = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i).array() -= mx;
    const double lse = std::log(logits.row(i).array().exp().sum());
    const int label = d.y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    loss += lse - logits(i, label);
    // Reuse logits as dL/dlogits.
    logits.row(i) = logits.row(i).array().exp() / std::exp(lse);
    logits(i, label) -= 1.0;
  }
  loss /= static_cast<double>(B);
  if (grad == nullptr) return loss;

  const Matrix dlogits = logits / static_cast<double>(B);
  grad->w2 = dlogits.transpose() * h;
  grad->b2 = dlogits.colwise().sum().transpose();
  Matrix dh = dlogits * p.w2;
  dh = dh.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grad->w1 = dh.transpose() * xb;
  grad->b1 = dh.colwise().sum().transpose();
  return loss;
}

namespace {

constexpr std::size_t kParamCount = 4;

std::vector<Matrix> as_list(const ToyParameters& p) {
  return {p.w1, Matrix(p.b1), p.w2, Matrix(p.b2)};
}

void apply_update(ToyParameters& p, const std::vector<Matrix>& g, double lr) {
  p.w1 -= lr * g[0];
  p.b1 -= lr * g[1].col(0);
  p.w2 -= lr * g[2];
  p.b2 -= lr * g[3].col(0);
}

bool is_compressible(const Matrix& m, std::int64_t min_dim) {
  return m.cols() > 1 && m.rows() > 1 && std::min(m.rows(), m.cols()) >= min_dim;
}

// Per-run compression machinery: one CompressorState per (worker, matrix).
struct CompressionSet {
  std::vector<std::size_t> params;  // indices of compressible parameters
  std::vector<std::vector<CompressorState>> states;  // [worker][k]
  std::int64_t rank = 0;

  void activate(const std::vector<Matrix>& shapes, int workers, std::int64_t r, std::uint64_t seed) {
    states.clear();
    states.resize(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        const Matrix& m = shapes[params[k]];
        const std::int64_t rk = std::min<std::int64_t>(r, std::min(m.rows(), m.cols()));
        states[static_cast<std::size_t>(w)].emplace_back(m.rows(), m.cols(), rk,
                                                         derive_seed(seed, static_cast<std::uint64_t>(w), k));
      }
    }
    rank = r;
  }

  void set_rank(std::int64_t r) {
    for (auto& per_worker : states) {
      for (auto& s : per_worker) s.set_rank(std::min<std::int64_t>(r, std::min(s.rows(), s.cols())));
    }
    rank = r;
  }

  bool active() const { return rank > 0; }
};

double logical_elements(const std::vector<Matrix>& params, const CompressionSet& cs) {
  double e = 0.0;
  std::vector<bool> compressed(params.size(), false);
  if (cs.active()) {
    for (std::size_t k = 0; k < cs.params.size(); ++k) {
      const Matrix& m = params[cs.params[k]];
      const std::int64_t rk = std::min<std::int64_t>(cs.rank, std::min(m.rows(), m.cols()));
      e += static_cast<double>(compressed_element_count(static_cast<std::uint64_t>(m.rows()),
                                                        static_cast<std::uint64_t>(m.cols()),
                                                        static_cast<std::uint64_t>(rk)));
      compressed[cs.params[k]] = true;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!compressed[i]) e += static_cast<double>(params[i].size());
  }
  return e;
}

}  // namespace

ToyTrainResult train_toy(const ToyTrainConfig& config, const GradientObserver& observer) {
  if (config.steps < 0) throw RangeError("steps must be non-negative");
  if (config.dp_workers < 1) throw RangeError("dp_workers must be at least 1");
  if (config.model.hidden_dim < 1) throw RangeError("hidden_dim must be positive");
  const int W = config.dp_workers;
  const ToyDataset data = make_toy_dataset(config.model, config.data, config.seed);
  ToyParameters params = init_toy_parameters(config.model, config.seed);
  const int N = config.data.samples;
  const int batch = config.data.batch_size > 0 ? std::min(config.data.batch_size, N) : N;
  if (batch < W) throw RangeError("batch must hold at least one sample per worker");

  const CompressionPolicy& policy = config.policy;
  const double es = policy.comm_model.element_size;
  const std::vector<Matrix> shapes = as_list(params);

  CompressionSet cs;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (is_compressible(shapes[i], policy.min_compress_dim)) cs.params.push_back(i);
  }
  const std::uint64_t compressor_seed = derive_seed(config.seed, seed_stream::kCompressorBasis);

  ToyTrainResult result;
  std::optional<GradientDataSampler> sampler;
  std::optional<GTable> table;
  std::optional<RankControllerState> ctl;
  CommModel link = policy.comm_model;
  std::size_t ref = 0;  // position in cs.params of the largest compressible matrix

  if (policy.kind == PolicyKind::kFixedRank) {
    if (policy.rank < 1) throw RangeError("fixed-rank policy needs rank >= 1");
    if (!cs.params.empty()) cs.activate(shapes, W, policy.rank, compressor_seed);
    result.warmup_end_step = 0;
  } else if (policy.kind == PolicyKind::kEdgc && !cs.params.empty()) {
    std::vector<MatrixShape> cshapes;
    double original = 0.0;
    for (std::size_t k = 0; k < cs.params.size(); ++k) {
      const Matrix& m = shapes[cs.params[k]];
      cshapes.push_back({m.rows(), m.cols()});
      original += es * static_cast<double>(m.size());
      if (m.size() > shapes[cs.params[ref]].size()) ref = k;
    }
    try {
      result.bounds = compute_rank_bounds(link, original, cshapes);
      std::vector<Measurement> curve;
      double per_rank = 0.0;
      for (const auto& s : cshapes) per_rank += static_cast<double>(s.rows + s.cols);
      for (std::int64_t r : {result.bounds.r_min, result.bounds.r_max}) {
        curve.push_back({r, link.compressed_time(r, per_rank)});
      }
      if (result.bounds.r_min != result.bounds.r_max) link = calibrate_comm_model(curve, link);
      const Matrix& rm = shapes[cs.params[ref]];
      table.emplace(GTable::for_shape(rm.rows(), rm.cols(), policy.g_trials, config.seed));
      ControllerConfig cc = policy.controller;
      cc.total_iterations = static_cast<std::uint64_t>(config.steps);
      ctl = RankControllerState::make(cc, result.bounds);
      SamplerConfig sc = policy.sampler;
      sc.rng_seed = derive_seed(config.seed, seed_stream::kSubsample, sc.rng_seed);
      sampler.emplace(sc, cc.window);
    } catch (const InfeasibleCompressionError&) {
      // Compression never pays off on this link; train uncompressed.
    }
  }

  std::vector<int> rows(static_cast<std::size_t>(N));
  std::iota(rows.begin(), rows.end(), 0);
  Rng batch_rng = make_rng(config.seed, seed_stream::kToyBatch);

  std::vector<std::vector<Matrix>> worker_grads(static_cast<std::size_t>(W));
  std::vector<double> worker_loss(static_cast<std::size_t>(W));
  const double dense_elements = logical_elements(shapes, CompressionSet{});

  for (int step = 0; step < config.steps; ++step) {
    std::vector<int> batch_rows;
    if (batch == N) {
      batch_rows = rows;
    } else {
      // Partial Fisher-Yates on the persistent permutation.
      for (int i = 0; i < batch; ++i) {
        std::uniform_int_distribution<int> pick(i, N - 1);
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(batch_rng))]);
      }
      batch_rows.assign(rows.begin(), rows.begin() + batch);
    }

    double loss = 0.0;
    std::vector<int> shard_sizes(static_cast<std::size_t>(W));
    for (int w = 0; w < W; ++w) {
      const int begin = static_cast<int>(static_cast<std::int64_t>(batch) * w / W);
      const int end = static_cast<int>(static_cast<std::int64_t>(batch) * (w + 1) / W);
      shard_sizes[static_cast<std::size_t>(w)] = end - begin;
      ToyParameters g;
      const double lw = toy_loss_and_gradient(
          params, data, std::span<const int>(batch_rows.data() + begin, static_cast<std::size_t>(end - begin)), &g);
      worker_loss[static_cast<std::size_t>(w)] = lw;
      worker_grads[static_cast<std::size_t>(w)] = as_list(g);
      loss += lw * (end - begin);
    }
    loss /= batch;
    if (!std::isfinite(loss)) {
      throw DivergenceError("training diverged at step " + std::to_string(step) + ": loss is " +
                            format_double(loss) + " (learning rate " + format_double(config.learning_rate) + ")");
    }
    result.loss.push_back(loss);

    if (observer) {
      std::vector<std::vector<GradientMatrix>> view(static_cast<std::size_t>(W));
      for (int w = 0; w < W; ++w) {
        for (std::size_t i = 0; i < kParamCount; ++i) {
          view[static_cast<std::size_t>(w)].emplace_back(worker_grads[static_cast<std::size_t>(w)][i],
                                                          static_cast<int>(i), 0, static_cast<std::uint64_t>(step));
        }
      }
      observer(step, view);
    }

    // Entropy is measured on worker 0's raw gradients, before compression.
    std::optional<EntropyWindow> closed;
    if (sampler) {
      std::vector<GradientMatrix> sampled;
      if (should_sample_iteration(static_cast<std::uint64_t>(step), sampler->config().isr)) {
        for (std::size_t k = 0; k < cs.params.size(); ++k) {
          sampled.emplace_back(worker_grads.front()[cs.params[k]], static_cast<int>(cs.params[k]), 0,
                               static_cast<std::uint64_t>(step));
        }
      }
      closed = sampler->observe(static_cast<std::uint64_t>(step), sampled);
    }
    const Matrix reference_grad = closed && ctl && ctl->phase == Phase::kWarmup
                                      ? worker_grads.front()[cs.params[ref]]
                                      : Matrix();

    // Communicate: per-worker compression, then a weighted average in worker order.
    std::vector<Matrix> avg(kParamCount);
    for (std::size_t i = 0; i < kParamCount; ++i) avg[i] = Matrix::Zero(shapes[i].rows(), shapes[i].cols());
    for (int w = 0; w < W; ++w) {
      const double weight = static_cast<double>(shard_sizes[static_cast<std::size_t>(w)]) / batch;
      auto& gw = worker_grads[static_cast<std::size_t>(w)];
      if (cs.active()) {
        for (std::size_t k = 0; k < cs.params.size(); ++k) {
          auto& state = cs.states[static_cast<std::size_t>(w)][k];
          gw[cs.params[k]] = decompress(compress(gw[cs.params[k]], state));
        }
      }
      for (std::size_t i = 0; i < kParamCount; ++i) avg[i] += weight * gw[i];
    }
    const double step_bytes = es * W * logical_elements(shapes, cs);
    result.ledger.push_back({step, step_bytes, cs.rank});
    result.total_bytes += step_bytes;
    result.uncompressed_bytes += es * W * dense_elements;

    double lr = config.learning_rate;
    if (config.cosine_decay && config.steps > 0) {
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * step / config.steps));
    }
    apply_update(params, avg, lr);

    if (!closed) continue;
    result.windows.push_back(*closed);
    ControllerLogEntry entry;
    entry.window_index = closed->window_index;
    entry.mean_entropy = closed->mean_entropy;
    if (ctl->phase == Phase::kWarmup) {
      const std::int64_t r_max = ctl->bounds.r_max;
      const auto measure = [&] { return optimal_rank_r_error(reference_grad, std::min(r_max, std::min(reference_grad.rows(), reference_grad.cols()))); };
      if (warmup_step(*ctl, closed->mean_entropy, static_cast<std::uint64_t>(step + 1), *table, measure) ==
          Phase::kActive) {
        cs.activate(shapes, W, ctl->r_prev, compressor_seed);
        result.warmup_end_step = step + 1;
        entry.predicted_comm_seconds = link.predict(ctl->r_prev);
      }
    } else {
      const RankDecision d = adjust_rank_window(*ctl, closed->mean_entropy, *table, link);
      cs.set_rank(d.rank);
      entry.predicted_comm_seconds = d.predicted_comm_seconds;
    }
    if (cs.active()) entry.stage_ranks = {cs.rank};
    result.rank_history.push_back(std::move(entry));
  }
  return result;
}

}  // namespace edgc
