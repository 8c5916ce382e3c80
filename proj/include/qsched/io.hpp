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

// On-disk formats.
//
// Dataset (.qsd), all integers and floats little-endian:
//
//   char[8]  magic "QSCHDS01"
//   u32      format version (1)
//   u32      header length in bytes
//   char[]   header: run-config echo, `key = value` lines
//   u32      users K
//   u64      sample count
//   u64      training-split size (samples [0, n_train) train, the rest validate)
//   then per sample:
//     u64    sample index (AoD substream index)
//     f64[K] angle of departure per user, radians
//     f64[K*K] gain matrix, row-major
//
// Checkpoint: a text manifest (`key = value`) plus a companion blob of f64
// values. Blob order: every parameter block in blocks() order (hybrid:
// pre_w, pre_b, theta, post_w, post_b; cnn: conv_w, conv_b, head_w, head_b),
// then the Adam first moments and second moments in the same block order when
// optimizer_step > 0.

#pragma once

#include "qsched/config.hpp"
#include "qsched/model.hpp"
#include "qsched/training.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace qsched {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr int kCsvVersion = 1;

struct Dataset {
    std::string header;
    int users = 0;
    std::size_t n_train = 0;
    std::vector<std::uint64_t> indices;
    std::vector<std::vector<double>> aods;
    std::vector<GainMatrix> samples;

    std::span<const GainMatrix> train() const { return std::span(samples).first(n_train); }
    std::span<const GainMatrix> val() const { return std::span(samples).subspan(n_train); }
};

/// Generates n_train + n_val samples from cfg.system (sample indices 0..n-1).
Dataset generate_dataset(const RunConfig& cfg);
void write_dataset(const std::string& path, const Dataset& ds);
/// Gain matrices are restored with beta from `beta` (linear SNR).
Dataset read_dataset(const std::string& path, double beta);

struct Checkpoint {
    std::variant<HybridParams, CnnParams> params;
    AdamState optimizer;
    int epoch = 0;
    std::string config_hash;
    std::vector<EpochMetrics> history;

    std::string family() const;
};

void write_checkpoint(const std::string& manifest_path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& manifest_path);

/// CSV with a leading `# qsched <kind> format=1 config_hash=<hash>` comment.
class CsvWriter {
public:
    CsvWriter(std::string kind, std::string config_hash, std::vector<std::string> columns);

    void row(const std::vector<std::string>& cells);
    void comment(const std::string& text);
    std::string str() const { return out_; }
    void save(const std::string& path) const;

    static std::string num(double v);

private:
    std::size_t columns_;
    std::string out_;
};

void ensure_directory(const std::string& dir);
std::string read_file(const std::string& path);

} // namespace qsched
