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

// Scheduling policies mapping a gain matrix to K user logits.
//
// Hybrid:  standardize -> affine -> pi*tanh -> variational circuit -> affine
// CNN:     standardize -> 3x3 conv (1->4, zero pad 1) -> ReLU -> affine
//
// Both expose their trainable tensors through blocks(), in the order used by
// the optimizer and the checkpoint blob.

#pragma once

#include "qsched/channel.hpp"
#include "qsched/quantum.hpp"
#include "qsched/rate.hpp"

#include <span>
#include <string>
#include <vector>

namespace qsched {

struct Normalizer {
    double mu = 0.0;
    double sigma = 1.0;

    static constexpr double kSigmaFloor = 1e-8;
    /// Scalar mean and (population) standard deviation over every entry of every matrix.
    static Normalizer fit(std::span<const GainMatrix> data);
};

std::vector<double> standardize(const GainMatrix& g, const Normalizer& norm);

Schedule top_l_select(std::span<const double> logits, int l);
double sigmoid(double x);

enum class GradientMethod { Adjoint, ParameterShift };

// --- hybrid ---------------------------------------------------------------

struct HybridParams {
    int users = 0;
    std::vector<double> pre_w;  // n_q x K^2, row-major
    std::vector<double> pre_b;  // n_q
    CircuitParams theta;        // N x n_q x 3
    std::vector<double> post_w; // K x n_q, row-major
    std::vector<double> post_b; // K
    Normalizer norm;

    static HybridParams zeros(int users, int qubits, int layers);
    int qubits() const { return theta.n_qubits; }
    int layers() const { return theta.n_layers; }

    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;
    std::size_t parameter_count() const;
    static constexpr const char* family = "hybrid";
};

struct HybridTape {
    std::vector<double> x;       // standardized input
    std::vector<double> pre_act; // pre_w x + pre_b
    std::vector<double> z_in;
    std::vector<double> z_out;
};

struct HybridOutput {
    std::vector<double> logits;
    HybridTape tape;
};

HybridParams init_hybrid(int users, int qubits, int layers, Rng& rng);
HybridOutput forward(const HybridParams& params, const GainMatrix& g);
HybridParams backward(const HybridParams& params, const HybridTape& tape, std::span<const double> d_logits,
                      GradientMethod method = GradientMethod::Adjoint);

// --- CNN benchmark ----------------------------------------------------------

struct CnnParams {
    static constexpr int kFilters = 4;

    int users = 0;
    std::vector<double> conv_w; // 4 x 3 x 3
    std::vector<double> conv_b; // 4
    std::vector<double> head_w; // K x 4K^2, row-major
    std::vector<double> head_b; // K
    Normalizer norm;

    static CnnParams zeros(int users);

    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;
    std::size_t parameter_count() const;
    static constexpr const char* family = "cnn";
};

struct CnnTape {
    std::vector<double> x;
    std::vector<double> conv_pre; // filter-major, 4 x K x K
    std::vector<double> conv_act;
};

struct CnnOutput {
    std::vector<double> logits;
    CnnTape tape;
};

CnnParams init_cnn(int users, Rng& rng);
CnnOutput forward(const CnnParams& params, const GainMatrix& g);
CnnParams backward(const CnnParams& params, const CnnTape& tape, std::span<const double> d_logits);

/// Zero-initialised gradient bundle of the same shape as `params`.
HybridParams zeros_like(const HybridParams& params);
CnnParams zeros_like(const CnnParams& params);

} // namespace qsched
