// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Policy-gradient training of a scheduling policy: epsilon-greedy Bernoulli
// exploration, a running reward baseline with cosine-annealed momentum,
// global-norm gradient clipping, Adam, and best-checkpoint selection on the
// deterministic (top-L) validation reward.

#pragma once

#include "qsched/model.hpp"
#include "qsched/rate.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qsched {

enum class RewardMode { SumRate, ProportionalFair };

std::string to_string(RewardMode mode);
RewardMode reward_mode_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 16;
    double learning_rate = 0.01;
    double clip_norm = 1.0;
    double eps_init = 0.6;
    double eps_floor = 0.05;
    double eps_decay = 0.55; // total decay over the run; per epoch eps_decay / E
    double alpha_max = 0.7;
    double alpha_min = 0.3;
    RewardMode reward_mode = RewardMode::SumRate;
    double pf_alpha = 0.1;
    double pf_epsilon = 1e-6;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool shuffle = true;
    // score sampled actions on their projection onto the L-user budget
    bool budget_projection = true;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_reward = 0.0;
    double val_det = 0.0;
    double val_sto = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;
    double seconds = 0.0;
    bool aborted = false;
};

double eps_schedule(int epoch, const TrainConfig& cfg);
double alpha_schedule(int epoch, const TrainConfig& cfg);

/// Per user: with probability 1 - eps draw Bernoulli(pi_l), else a fair coin.
Schedule sample_policy(std::span<const double> pi, double eps, Rng& rng);

/// Stateful reward evaluator. In PF mode the fairness state advances after
/// every evaluated action.
class RewardFn {
public:
    RewardFn(RewardMode mode, int users, double pf_alpha, double pf_epsilon);
    double operator()(const GainMatrix& g, const Schedule& p);
    RewardMode mode() const { return mode_; }

private:
    RewardMode mode_;
    FairnessState fairness_;
};

double sumrate_reward(const GainMatrix& g, const Schedule& p);

/// Feasible schedule derived from a sampled action: sampled users ranked by
/// logit, truncated or topped up (with the highest-logit unsampled users) to L.
Schedule project_to_budget(const Schedule& p, std::span<const double> logits, int l);

double baseline_update(double b, double alpha, std::span<const double> batch_rewards);

inline constexpr double kProbClamp = 1e-7;

/// -(sum_l p_l ln pi_l + (1 - p_l) ln(1 - pi_l)) * (r - b) for one sample,
/// with pi clamped to [1e-7, 1 - 1e-7].
double policy_loss(std::span<const double> pi, const Schedule& p, double r, double b);

/// d policy_loss / d logits, with pi = sigmoid(logits). The advantage is a constant.
std::vector<double> policy_loss_grad_logits(std::span<const double> logits, const Schedule& p, double r, double b);

/// Scales every block by clip_norm / norm when the global L2 norm exceeds
/// clip_norm. Returns the norm before clipping.
double clip_gradients(std::span<const std::span<double>> grads, double clip_norm);

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;

    bool empty() const { return m.empty(); }
};

void optimizer_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                    AdamState& state, double lr, const TrainConfig& cfg);

enum class ValidationMode { Deterministic, Stochastic };

template <class Params>
struct TrainResult {
    std::vector<EpochMetrics> history;
    Params best;
    AdamState best_optimizer;
    int best_epoch = 0;
    double best_val_det = -std::numeric_limits<double>::infinity();
    std::vector<double> baseline_trace;     // after every batch update
    double batch_reward_min = std::numeric_limits<double>::infinity();
    double batch_reward_max = -std::numeric_limits<double>::infinity();
    std::vector<std::string> diagnostics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

template <class Params>
double validate(const Params& params, std::span<const GainMatrix> val, int l, ValidationMode mode,
                const TrainConfig& cfg, Rng* rng = nullptr);

template <class Params>
TrainResult<Params> train(const Params& init, std::span<const GainMatrix> train_set, std::span<const GainMatrix> val_set,
                          int l, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

} // namespace qsched
