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

#include "qsched/rate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace qsched {

Schedule Schedule::from_indices(std::size_t k, const std::vector<int>& idx)
{
    Schedule s(k);
    for (int i : idx)
        s.bits.at(static_cast<std::size_t>(i)) = 1;
    return s;
}

int Schedule::popcount() const
{
    return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

FairnessState FairnessState::zeros(int k, double alpha, double epsilon_div)
{
    FairnessState fs;
    fs.avg_rate.assign(static_cast<std::size_t>(k), 0.0);
    fs.alpha = alpha;
    fs.epsilon_div = epsilon_div;
    return fs;
}

std::vector<double> approx_rates(const GainMatrix& g, const Schedule& xi)
{
    const int k = g.users();
    if (static_cast<int>(xi.size()) != k)
        throw std::invalid_argument("approx_rates: schedule length does not match gain matrix");
    std::vector<double> rates(static_cast<std::size_t>(k), 0.0);
    for (int l = 0; l < k; ++l) {
        if (!xi[l])
            continue;
        double interference = 0.0;
        for (int i = 0; i < k; ++i)
            if (i != l && xi[i])
                interference += g.beta(i) * g.g(l, i);
        const double signal = g.beta(l) * g.g(l, l);
        rates[l] = std::log2((signal + interference + 1.0) / (interference + 1.0));
    }
    return rates;
}

double sum_rate(const GainMatrix& g, const Schedule& xi)
{
    const auto r = approx_rates(g, xi);
    return std::accumulate(r.begin(), r.end(), 0.0);
}

double pf_objective(const GainMatrix& g, const Schedule& xi, const FairnessState& fs)
{
    const auto r = approx_rates(g, xi);
    double total = 0.0;
    for (std::size_t l = 0; l < r.size(); ++l)
        total += r[l] / (fs.avg_rate[l] + fs.epsilon_div);
    return total;
}

FairnessState update_avg_rates(FairnessState fs, const std::vector<double>& rates, const Schedule& xi)
{
    for (std::size_t l = 0; l < fs.avg_rate.size(); ++l)
        if (xi[l])
            fs.avg_rate[l] = (1.0 - fs.alpha) * fs.avg_rate[l] + fs.alpha * rates[l];
    return fs;
}

std::vector<double> mc_ergodic_rate(const std::vector<UserChannelStats>& users, const SystemConfig& cfg,
                                    const Schedule& xi, int n_draws, Rng& rng)
{
    if (n_draws < 1)
        throw std::invalid_argument("mc_ergodic_rate: n_draws must be positive");
    const auto k = users.size();
    const auto w = dft_matrix(cfg.num_antennas);
    const double beta = cfg.beta();
    std::vector<double> acc(k, 0.0);
    std::vector<double> gain(k);
    for (int d = 0; d < n_draws; ++d) {
        for (std::size_t l = 0; l < k; ++l) {
            // one fresh channel per user per draw, drawn in user order
            const Eigen::VectorXcd h = sample_channel(users[l], rng);
            if (!xi[l])
                continue;
            for (std::size_t i = 0; i < k; ++i)
                gain[i] = xi[i] ? std::norm(w.col(users[i].best_beam).dot(h)) : 0.0;
            double interference = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                if (i != l)
                    interference += beta * gain[i];
            acc[l] += std::log2(1.0 + beta * gain[l] / (interference + 1.0));
        }
    }
    for (auto& a : acc)
        a /= n_draws;
    return acc;
}

std::uint64_t binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) {
        c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
        if (c > (1ULL << 62))
            return c; // saturates well past any guard
    }
    return c;
}

namespace {

double evaluate(const GainMatrix& g, const Schedule& xi, Objective objective, const FairnessState* fs)
{
    if (objective == Objective::ProportionalFair) {
        if (fs == nullptr)
            throw std::invalid_argument("proportional-fair objective requires a fairness state");
        return pf_objective(g, xi, *fs);
    }
    return sum_rate(g, xi);
}

} // namespace

ScheduleResult exhaustive_best_schedule(const GainMatrix& g, int l, Objective objective, const FairnessState* fs)
{
    const int k = g.users();
    if (l < 0 || l > k)
        throw std::invalid_argument("exhaustive_best_schedule: L out of range");
    const auto count = binomial(k, l);
    if (count > kMaxCombinations)
        throw std::invalid_argument("exhaustive_best_schedule: C(" + std::to_string(k) + ", " + std::to_string(l) +
                                    ") = " + std::to_string(count) + " exceeds the enumeration guard");

    std::vector<int> idx(static_cast<std::size_t>(l));
    std::iota(idx.begin(), idx.end(), 0);
    ScheduleResult best;
    bool have = false;
    while (true) {
        const auto xi = Schedule::from_indices(static_cast<std::size_t>(k), idx);
        const double v = evaluate(g, xi, objective, fs);
        if (!have || v > best.value) {
            best = {xi, v};
            have = true;
        }
        // next combination in lexicographic order
        int pos = l - 1;
        while (pos >= 0 && idx[pos] == k - l + pos)
            --pos;
        if (pos < 0)
            break;
        ++idx[pos];
        for (int j = pos + 1; j < l; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    return best;
}

Schedule greedy_schedule(const GainMatrix& g, int l)
{
    const int k = g.users();
    Schedule xi(static_cast<std::size_t>(k));
    for (int step = 0; step < l; ++step) {
        int pick = -1;
        double pick_value = 0.0;
        for (int u = 0; u < k; ++u) {
            if (xi[u])
                continue;
            xi.bits[u] = 1;
            const double v = sum_rate(g, xi);
            xi.bits[u] = 0;
            if (pick < 0 || v > pick_value) {
                pick = u;
                pick_value = v;
            }
        }
        xi.bits[pick] = 1;
    }
    return xi;
}

Schedule random_schedule(int k, int l, Rng& rng)
{
    // partial Fisher-Yates
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < l; ++i) {
        const int span = k - i;
        const int j = i + static_cast<int>(uniform01(rng) * span);
        std::swap(perm[i], perm[std::min(j, k - 1)]);
    }
    perm.resize(static_cast<std::size_t>(l));
    return Schedule::from_indices(static_cast<std::size_t>(k), perm);
}

double random_schedule_mean(const GainMatrix& g, int l)
{
    const int k = g.users();
    if (k > 24 || binomial(k, l) > kMaxCombinations)
        throw std::invalid_argument("random_schedule_mean: too many combinations");
    double total = 0.0;
    std::uint64_t n = 0;
    for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
        if (std::popcount(mask) != l)
            continue;
        Schedule xi(static_cast<std::size_t>(k));
        for (int u = 0; u < k; ++u)
            xi.bits[u] = (mask >> u) & 1U;
        total += sum_rate(g, xi);
        ++n;
    }
    return total / static_cast<double>(n);
}

std::vector<double> run_scheduling_horizon(const GainMatrix& g, int l, Objective objective, int steps,
                                           FairnessState fs)
{
    std::vector<double> cumulative(static_cast<std::size_t>(g.users()), 0.0);
    for (int t = 0; t < steps; ++t) {
        const auto pick = exhaustive_best_schedule(g, l, objective, &fs);
        const auto rates = approx_rates(g, pick.schedule);
        for (std::size_t u = 0; u < rates.size(); ++u)
            cumulative[u] += rates[u];
        fs = update_avg_rates(std::move(fs), rates, pick.schedule);
    }
    return cumulative;
}

} // namespace qsched
