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

// Experiment commands behind the `qsched` CLI. Each command is a pure
// function of its RunConfig; all CSV output is byte-stable for a given config.

#pragma once

#include "qsched/config.hpp"
#include "qsched/io.hpp"

#include <string>
#include <vector>

namespace qsched {

struct GenResult {
    std::string path;
    Dataset dataset;
};
GenResult cmd_gen(const RunConfig& cfg);

struct TrainOutcome {
    std::vector<EpochMetrics> history;
    Checkpoint checkpoint;
    double best_val_det = 0.0;
    std::vector<std::string> diagnostics;
    std::string metrics_path;
    std::string checkpoint_path;
};
/// Loads the dataset at cfg.dataset_path() and trains cfg.model on it.
TrainOutcome cmd_train(const RunConfig& cfg);

struct EvalRow {
    std::size_t sample = 0;
    double det = 0.0;
    double sto = 0.0;
    double oracle = 0.0;
    double greedy = 0.0;
    double random_mean = 0.0;
};
struct EvalResult {
    std::vector<EvalRow> rows;
    EvalRow mean;
    bool has_references = false;
    std::string path;
};
/// Evaluates a checkpoint on the validation split, reporting sum rates.
EvalResult cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path);

struct SweepRow {
    double axis_value = 0.0;
    int users = 0;
    int antennas = 0;
    double snr_db = 0.0;
    int qubits = 0;
    double mean_sumrate = 0.0;
    double std_sumrate = 0.0;
    int seeds = 0;
};
struct SweepResult {
    std::vector<SweepRow> rows;
    std::string path;
};
SweepResult cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values);

struct CompareRow {
    double snr_db = 0.0;
    std::string model;
    std::uint64_t seed = 0;
    double val_det = 0.0;
};
struct CompareSummary {
    double snr_db = 0.0;
    double hybrid_mean = 0.0;
    double cnn_mean = 0.0;
    double random_mean = 0.0;
    double oracle_mean = 0.0;
    int hybrid_wins = 0;
    int cells = 0;
};
struct CompareResult {
    std::vector<CompareRow> rows;
    std::vector<CompareSummary> summary;
    double win_fraction = 0.0;
    std::size_t hybrid_params = 0;
    std::size_t cnn_params = 0;
    std::string path;
    std::string summary_path;
};
CompareResult cmd_compare(const RunConfig& cfg);

/// Trains one model family on a split and returns the best-checkpoint
/// deterministic validation sum rate. Shared by sweep and compare.
struct PolicyRun {
    double val_det = 0.0;
    std::size_t parameter_count = 0;
    std::vector<EpochMetrics> history;
};
PolicyRun train_family(const RunConfig& cfg, const std::string& family, int qubits, const Dataset& ds,
                       std::uint64_t seed);

} // namespace qsched
