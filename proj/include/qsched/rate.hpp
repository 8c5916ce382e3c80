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

// Schedule evaluation: approximate ergodic rates from the beam-domain gain
// matrix, proportional-fair weighting, a Monte-Carlo ergodic-rate reference,
// and the exhaustive / greedy / random reference schedulers.

#pragma once

#include "qsched/channel.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qsched {

/// Binary scheduling indicator. Deterministic policies produce exactly L ones;
/// sampled training actions may have any popcount.
struct Schedule {
    std::vector<std::uint8_t> bits;

    Schedule() = default;
    explicit Schedule(std::size_t k) : bits(k, 0) {}
    static Schedule from_indices(std::size_t k, const std::vector<int>& idx);

    std::size_t size() const { return bits.size(); }
    int popcount() const;
    bool operator[](std::size_t i) const { return bits[i] != 0; }
    bool operator==(const Schedule&) const = default;
};

struct FairnessState {
    std::vector<double> avg_rate;
    double alpha = 0.1;
    double epsilon_div = 1e-6;

    static FairnessState zeros(int k, double alpha = 0.1, double epsilon_div = 1e-6);
};

std::vector<double> approx_rates(const GainMatrix& g, const Schedule& xi);
double sum_rate(const GainMatrix& g, const Schedule& xi);
double pf_objective(const GainMatrix& g, const Schedule& xi, const FairnessState& fs);
FairnessState update_avg_rates(FairnessState fs, const std::vector<double>& rates, const Schedule& xi);

/// Monte-Carlo mean of the instantaneous SINR rate with DFT-column beams
/// B_i = W[:, x_i]. The effective gain is |B_i^H H_l|^2, the same inner product
/// whose expectation forms the beam gains.
std::vector<double> mc_ergodic_rate(const std::vector<UserChannelStats>& users, const SystemConfig& cfg,
                                    const Schedule& xi, int n_draws, Rng& rng);

enum class Objective { SumRate, ProportionalFair };

struct ScheduleResult {
    Schedule schedule;
    double value = 0.0;
};

inline constexpr std::uint64_t kMaxCombinations = 1'000'000;

std::uint64_t binomial(int n, int k);

/// Exact search over all size-L subsets in lexicographic order; the first
/// maximum wins. Throws std::invalid_argument when C(K, L) exceeds the guard.
ScheduleResult exhaustive_best_schedule(const GainMatrix& g, int l, Objective objective = Objective::SumRate,
                                        const FairnessState* fs = nullptr);

Schedule greedy_schedule(const GainMatrix& g, int l);
Schedule random_schedule(int k, int l, Rng& rng);

/// Mean sum rate over all C(K, L) schedules; the expected value of random_schedule.
double random_schedule_mean(const GainMatrix& g, int l);

/// Runs `steps` scheduling rounds on a fixed gain matrix, updating the fairness
/// state after each round. Returns cumulative per-user rates.
std::vector<double> run_scheduling_horizon(const GainMatrix& g, int l, Objective objective, int steps,
                                           FairnessState fs);

} // namespace qsched
