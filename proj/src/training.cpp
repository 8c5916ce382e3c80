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

#include "qsched/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace qsched {

std::string to_string(RewardMode mode)
{
    return mode == RewardMode::SumRate ? "sumrate" : "pf";
}

RewardMode reward_mode_from_string(const std::string& s)
{
    if (s == "sumrate")
        return RewardMode::SumRate;
    if (s == "pf")
        return RewardMode::ProportionalFair;
    throw ConfigError("reward_mode must be 'sumrate' or 'pf', got '" + s + "'");
}

void TrainConfig::validate() const
{
    if (epochs < 0)
        throw ConfigError("epochs must be nonnegative");
    if (batch_size < 1)
        throw ConfigError("batch_size must be positive");
    if (!(learning_rate > 0.0))
        throw ConfigError("learning_rate must be positive");
    if (!(clip_norm > 0.0))
        throw ConfigError("clip_norm must be positive");
    if (!(eps_floor >= 0.0 && eps_floor < eps_init && eps_init <= 1.0))
        throw ConfigError("epsilon schedule requires 0 <= eps_floor < eps_init <= 1");
    if (!(eps_decay > 0.0))
        throw ConfigError("eps_decay must be positive");
    if (!(alpha_min < alpha_max && alpha_min >= 0.0 && alpha_max <= 1.0))
        throw ConfigError("baseline momentum requires 0 <= alpha_min < alpha_max <= 1");
    if (!(pf_alpha > 0.0 && pf_alpha < 1.0))
        throw ConfigError("pf_alpha must lie in (0, 1)");
    if (!(pf_epsilon > 0.0))
        throw ConfigError("pf_epsilon must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("Adam moment factors must lie in [0, 1)");
    if (!(adam_eps > 0.0))
        throw ConfigError("adam_eps must be positive");
}

double eps_schedule(int epoch, const TrainConfig& cfg)
{
    return std::max(cfg.eps_floor, cfg.eps_init - cfg.eps_decay * epoch / cfg.epochs);
}

double alpha_schedule(int epoch, const TrainConfig& cfg)
{
    return cfg.alpha_min +
           0.5 * (cfg.alpha_max - cfg.alpha_min) * (1.0 + std::cos(kPi * epoch / static_cast<double>(cfg.epochs)));
}

Schedule sample_policy(std::span<const double> pi, double eps, Rng& rng)
{
    Schedule p(pi.size());
    for (std::size_t l = 0; l < pi.size(); ++l) {
        // both uniforms are always drawn so the stream layout is independent of eps
        const double explore = uniform01(rng);
        const double u = uniform01(rng);
        const double prob = explore < eps ? 0.5 : pi[l];
        p.bits[l] = u < prob ? 1 : 0;
    }
    return p;
}

RewardFn::RewardFn(RewardMode mode, int users, double pf_alpha, double pf_epsilon)
    : mode_(mode), fairness_(FairnessState::zeros(users, pf_alpha, pf_epsilon))
{
}

double RewardFn::operator()(const GainMatrix& g, const Schedule& p)
{
    if (mode_ == RewardMode::SumRate)
        return sum_rate(g, p);
    const double r = pf_objective(g, p, fairness_);
    fairness_ = update_avg_rates(std::move(fairness_), approx_rates(g, p), p);
    return r;
}

double sumrate_reward(const GainMatrix& g, const Schedule& p)
{
    return sum_rate(g, p);
}

Schedule project_to_budget(const Schedule& p, std::span<const double> logits, int l)
{
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (p[a] != p[b])
            return p[a];
        return logits[a] > logits[b];
    });
    order.resize(static_cast<std::size_t>(l));
    return Schedule::from_indices(p.size(), order);
}

double baseline_update(double b, double alpha, std::span<const double> batch_rewards)
{
    const double mean =
        std::accumulate(batch_rewards.begin(), batch_rewards.end(), 0.0) / static_cast<double>(batch_rewards.size());
    return alpha * b + (1.0 - alpha) * mean;
}

double policy_loss(std::span<const double> pi, const Schedule& p, double r, double b)
{
    double log_lik = 0.0;
    for (std::size_t l = 0; l < pi.size(); ++l) {
        const double q = std::clamp(pi[l], kProbClamp, 1.0 - kProbClamp);
        log_lik += p[l] ? std::log(q) : std::log(1.0 - q);
    }
    return -log_lik * (r - b);
}

std::vector<double> policy_loss_grad_logits(std::span<const double> logits, const Schedule& p, double r, double b)
{
    std::vector<double> d(logits.size(), 0.0);
    for (std::size_t l = 0; l < logits.size(); ++l) {
        const double q = sigmoid(logits[l]);
        if (q < kProbClamp || q > 1.0 - kProbClamp)
            continue; // flat region of the clamp
        const double target = p[l] ? 1.0 : 0.0;
        d[l] = -(target - q) * (r - b);
    }
    return d;
}

double clip_gradients(std::span<const std::span<double>> grads, double clip_norm)
{
    double sq = 0.0;
    for (auto g : grads)
        for (double x : g)
            sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
        const double scale = clip_norm / norm;
        for (auto g : grads)
            for (auto& x : g)
                x *= scale;
    }
    return norm;
}

void optimizer_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                    AdamState& state, double lr, const TrainConfig& cfg)
{
    if (state.empty()) {
        for (auto p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    ++state.step;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t blk = 0; blk < params.size(); ++blk) {
        auto p = params[blk];
        auto g = grads[blk];
        auto& m = state.m[blk];
        auto& v = state.v[blk];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

namespace {

template <class Params>
void accumulate(Params& acc, const Params& g)
{
    auto a = acc.blocks();
    const auto b = g.blocks();
    for (std::size_t blk = 0; blk < a.size(); ++blk)
        for (std::size_t i = 0; i < a[blk].size(); ++i)
            a[blk][i] += b[blk][i];
}

} // namespace

template <class Params>
double validate(const Params& params, std::span<const GainMatrix> val, int l, ValidationMode mode,
                const TrainConfig& cfg, Rng* rng)
{
    if (val.empty())
        throw DataError("validation set is empty");
    if (mode == ValidationMode::Stochastic && rng == nullptr)
        throw std::invalid_argument("stochastic validation requires an RNG");
    RewardFn reward(cfg.reward_mode, val.front().users(), cfg.pf_alpha, cfg.pf_epsilon);
    double total = 0.0;
    for (const auto& g : val) {
        const auto out = forward(params, g);
        Schedule xi;
        if (mode == ValidationMode::Deterministic) {
            xi = top_l_select(out.logits, l);
        } else {
            std::vector<double> pi(out.logits.size());
            std::transform(out.logits.begin(), out.logits.end(), pi.begin(), sigmoid);
            xi = sample_policy(pi, 0.0, *rng);
            if (cfg.budget_projection)
                xi = project_to_budget(xi, out.logits, l);
        }
        total += reward(g, xi);
    }
    return total / static_cast<double>(val.size());
}

template <class Params>
TrainResult<Params> train(const Params& init, std::span<const GainMatrix> train_set, std::span<const GainMatrix> val_set,
                          int l, const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    TrainResult<Params> result;
    result.best = init;
    if (cfg.epochs == 0)
        return result;
    if (train_set.empty())
        throw DataError("training set is empty");
    if (val_set.empty())
        throw DataError("validation set is empty");

    Params params = init;
    AdamState opt;
    double baseline = 0.0;
    const int users = train_set.front().users();
    RewardFn reward(cfg.reward_mode, users, cfg.pf_alpha, cfg.pf_epsilon);
    auto sample_rng = substream(cfg.seed, "policy-sample");

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = epoch;
        m.epsilon = eps_schedule(epoch, cfg);
        m.alpha = alpha_schedule(epoch, cfg);

        if (cfg.shuffle) {
            auto shuffle_rng = substream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
            for (std::size_t i = order.size(); i > 1; --i) {
                const auto j = std::min(static_cast<std::size_t>(uniform01(shuffle_rng) * i), i - 1);
                std::swap(order[i - 1], order[j]);
            }
        }

        double loss_sum = 0.0;
        double reward_sum = 0.0;
        int batches = 0;
        std::size_t samples_seen = 0;
        try {
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                const auto n = static_cast<double>(end - start);

                std::vector<std::vector<double>> logits;
                std::vector<decltype(forward(params, train_set[0]).tape)> tapes;
                std::vector<Schedule> actions;
                std::vector<double> rewards;
                for (std::size_t s = start; s < end; ++s) {
                    const auto& g = train_set[order[s]];
                    auto out = forward(params, g);
                    std::vector<double> pi(out.logits.size());
                    std::transform(out.logits.begin(), out.logits.end(), pi.begin(), sigmoid);
                    auto p = sample_policy(pi, m.epsilon, sample_rng);
                    rewards.push_back(cfg.budget_projection ? reward(g, project_to_budget(p, out.logits, l))
                                                            : reward(g, p));
                    actions.push_back(std::move(p));
                    logits.push_back(std::move(out.logits));
                    tapes.push_back(std::move(out.tape));
                }
                for (double r : rewards) {
                    result.batch_reward_min = std::min(result.batch_reward_min, r);
                    result.batch_reward_max = std::max(result.batch_reward_max, r);
                }

                baseline = baseline_update(baseline, m.alpha, rewards);
                result.baseline_trace.push_back(baseline);

                double batch_loss = 0.0;
                auto grad = zeros_like(params);
                for (std::size_t i = 0; i < rewards.size(); ++i) {
                    std::vector<double> pi(logits[i].size());
                    std::transform(logits[i].begin(), logits[i].end(), pi.begin(), sigmoid);
                    batch_loss += policy_loss(pi, actions[i], rewards[i], baseline) / n;
                    auto d = policy_loss_grad_logits(logits[i], actions[i], rewards[i], baseline);
                    for (auto& x : d)
                        x /= n;
                    accumulate(grad, backward(params, tapes[i], d));
                }
                if (!std::isfinite(batch_loss))
                    throw NumericalError("non-finite policy loss in epoch " + std::to_string(epoch));

                auto gblocks = grad.blocks();
                clip_gradients(gblocks, cfg.clip_norm);
                optimizer_step(params.blocks(), gblocks, opt, cfg.learning_rate, cfg);

                loss_sum += batch_loss;
                reward_sum += std::accumulate(rewards.begin(), rewards.end(), 0.0);
                samples_seen += rewards.size();
                ++batches;
            }
        } catch (const NumericalError& e) {
            m.aborted = true;
            result.diagnostics.push_back(std::string("epoch ") + std::to_string(epoch) + " aborted: " + e.what() +
                                         "; restored checkpoint from epoch " + std::to_string(result.best_epoch));
            params = result.best;
            opt = result.best_optimizer;
        }

        m.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
        m.mean_reward = samples_seen > 0 ? reward_sum / static_cast<double>(samples_seen) : 0.0;
        m.val_det = validate(params, val_set, l, ValidationMode::Deterministic, cfg);
        auto val_rng = substream(cfg.seed, "val-stochastic", static_cast<std::uint64_t>(epoch));
        m.val_sto = validate(params, val_set, l, ValidationMode::Stochastic, cfg, &val_rng);

        if (m.val_det > result.best_val_det) {
            result.best_val_det = m.val_det;
            result.best_epoch = epoch;
            result.best = params;
            result.best_optimizer = opt;
        }
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(m);
        if (on_epoch)
            on_epoch(m);
    }
    return result;
}

template double validate<HybridParams>(const HybridParams&, std::span<const GainMatrix>, int, ValidationMode,
                                       const TrainConfig&, Rng*);
template double validate<CnnParams>(const CnnParams&, std::span<const GainMatrix>, int, ValidationMode,
                                    const TrainConfig&, Rng*);
template TrainResult<HybridParams> train<HybridParams>(const HybridParams&, std::span<const GainMatrix>,
                                                       std::span<const GainMatrix>, int, const TrainConfig&,
                                                       const EpochCallback&);
template TrainResult<CnnParams> train<CnnParams>(const CnnParams&, std::span<const GainMatrix>,
                                                 std::span<const GainMatrix>, int, const TrainConfig&,
                                                 const EpochCallback&);

} // namespace qsched
