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

#ifndef EDGC_TOY_TRAINER_HPP_
#define EDGC_TOY_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edgc/dac.hpp"
#include "edgc/entropy.hpp"
#include "edgc/matrix_core.hpp"

namespace edgc {

/// Two-layer perceptron: logits = W2 relu(W1 x + b1) + b2.
struct ToyModelConfig {
  int input_dim = 64;
  int hidden_dim = 256;
  int num_classes = 10;
};

/// Seeded synthetic classification data labelled by a random teacher MLP.
struct ToyDataConfig {
  int samples = 1024;
  int teacher_hidden = 32;
  double label_noise = 0.1;  // probability of a uniformly random label
  int batch_size = 0;        // 0: full batch every step
};

enum class PolicyKind { kNone, kFixedRank, kEdgc };

struct CompressionPolicy {
  PolicyKind kind = PolicyKind::kNone;
  std::int64_t rank = 0;  // fixed-rank policy
  /// Matrices whose smaller side is below this are always sent dense.
  std::int64_t min_compress_dim = 16;
  ControllerConfig controller{8, 50, 0.10, 0};
  SamplerConfig sampler;
  int g_trials = GTable::kDefaultTrials;
  /// Link model for the rank bounds; zero codec cost by default.
  CommModel comm_model;
};

struct ToyTrainConfig {
  ToyModelConfig model;
  ToyDataConfig data;
  int steps = 2000;
  int dp_workers = 4;
  double learning_rate = 0.2;
  bool cosine_decay = false;
  CompressionPolicy policy;
  std::uint64_t seed = 0;
};

struct LedgerEntry {
  int step = 0;
  double bytes = 0.0;     // logical bytes sent by all workers this step
  std::int64_t rank = 0;  // 0 while uncompressed
};

struct ToyTrainResult {
  std::vector<double> loss;  // full-batch training loss before each update
  std::vector<LedgerEntry> ledger;
  std::vector<EntropyWindow> windows;
  std::vector<ControllerLogEntry> rank_history;
  RankBounds bounds;
  int warmup_end_step = -1;  // first compressed step, -1 if never
  double total_bytes = 0.0;
  double uncompressed_bytes = 0.0;  // what the same run would send dense

  double final_loss() const { return loss.empty() ? 0.0 : loss.back(); }
};

/// Called once per step with the parameter-gradient list of every worker
/// (W1, b1, W2, b2 as matrices; biases are n x 1).
using GradientObserver =
    std::function<void(int step, std::span<const std::vector<GradientMatrix>> per_worker)>;

/// Synchronous data-parallel SGD on the toy model. Workers run sequentially
/// in one thread; averaging sums in worker order. Throws DivergenceError on a
/// non-finite loss.
ToyTrainResult train_toy(const ToyTrainConfig& config, const GradientObserver& observer = {});

// Building blocks, exposed for reference checks.

struct ToyParameters {
  Matrix w1;  // hidden x input
  Vector b1;
  Matrix w2;  // classes x hidden
  Vector b2;
};

struct ToyDataset {
  Matrix x;  // samples x input
  std::vector<int> y;
};

ToyDataset make_toy_dataset(const ToyModelConfig& model, const ToyDataConfig& data, std::uint64_t seed);
ToyParameters init_toy_parameters(const ToyModelConfig& model, std::uint64_t seed);

/// Mean cross-entropy over rows [begin, end) and its gradient.
double toy_loss_and_gradient(const ToyParameters& p, const ToyDataset& d, std::span<const int> rows,
                             ToyParameters* grad);

}  // namespace edgc

#endif  // EDGC_TOY_TRAINER_HPP_
