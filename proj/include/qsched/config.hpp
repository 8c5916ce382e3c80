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

// Run configuration: one flat `key = value` file fully determines a run.
// Lines starting with '#' are comments. Unknown keys are rejected.

#pragma once

#include "qsched/channel.hpp"
#include "qsched/training.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qsched {

struct RunConfig {
    SystemConfig system;
    TrainConfig train;
    int n_qubits = 8;
    int n_layers = 2;
    int n_train = 200;
    int n_val = 50;
    std::string model = "hybrid";          // hybrid | cnn
    std::string out_dir = "out";
    std::string dataset;                   // empty: <out_dir>/dataset.qsd
    bool record_timing = false;            // wall-clock seconds in train_metrics.csv
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string sweep_policy = "oracle";   // oracle | greedy | random | hybrid | cnn
    std::string sweep_axis = "snr";        // snr | antennas
    std::vector<double> sweep_values;
    int compare_qubits = 10;
    std::vector<double> compare_snr_db{15.0, 20.0, 25.0};

    /// Sets one key from its textual value. Throws ConfigError on unknown keys
    /// or malformed values.
    void set(const std::string& key, const std::string& value);
    void validate() const;

    /// Canonical `key = value` listing in declaration order. Output paths
    /// (out_dir, dataset) are left out unless include_paths is set.
    std::string echo(bool include_paths = false) const;
    /// FNV-1a of echo(), as 16 hex digits.
    std::string hash() const;
    std::string dataset_path() const;

    static const std::vector<std::string>& keys();
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

std::string format_double(double v);

} // namespace qsched
