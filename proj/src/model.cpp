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

#include "qsched/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsched {

namespace {

const double kMaxEncodingAngle = std::nextafter(kPi, 0.0);

void require_finite(std::span<const double> v, const char* stage)
{
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericalError(std::string("non-finite value in ") + stage);
}

void fill_uniform(std::vector<double>& v, double bound, Rng& rng)
{
    for (auto& x : v)
        x = -bound + 2.0 * bound * uniform01(rng);
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out)
{
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

} // namespace

Normalizer Normalizer::fit(std::span<const GainMatrix> data)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : data) {
        sum += g.g.sum();
        n += static_cast<std::size_t>(g.g.size());
    }
    Normalizer norm;
    if (n == 0)
        return norm;
    norm.mu = sum / static_cast<double>(n);
    double var = 0.0;
    for (const auto& g : data)
        var += (g.g.array() - norm.mu).square().sum();
    norm.sigma = std::max(std::sqrt(var / static_cast<double>(n)), kSigmaFloor);
    return norm;
}

std::vector<double> standardize(const GainMatrix& g, const Normalizer& norm)
{
    const int k = g.users();
    const double sigma = std::max(norm.sigma, Normalizer::kSigmaFloor);
    std::vector<double> x(static_cast<std::size_t>(k) * k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c)
            x[static_cast<std::size_t>(r) * k + c] = (g.g(r, c) - norm.mu) / sigma;
    return x;
}

Schedule top_l_select(std::span<const double> logits, int l)
{
    const auto k = logits.size();
    if (l < 0 || static_cast<std::size_t>(l) > k)
        throw std::invalid_argument("top_l_select: L out of range");
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return logits[a] > logits[b]; });
    order.resize(static_cast<std::size_t>(l));
    return Schedule::from_indices(k, order);
}

double sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// --- hybrid -------------------------------------------------------------------

HybridParams HybridParams::zeros(int users, int qubits, int layers)
{
    HybridParams p;
    p.users = users;
    const auto k2 = static_cast<std::size_t>(users) * users;
    p.pre_w.assign(static_cast<std::size_t>(qubits) * k2, 0.0);
    p.pre_b.assign(static_cast<std::size_t>(qubits), 0.0);
    p.theta = CircuitParams(layers, qubits);
    p.post_w.assign(static_cast<std::size_t>(users) * qubits, 0.0);
    p.post_b.assign(static_cast<std::size_t>(users), 0.0);
    return p;
}

std::vector<std::span<double>> HybridParams::blocks()
{
    return {pre_w, pre_b, theta.theta, post_w, post_b};
}

std::vector<std::span<const double>> HybridParams::blocks() const
{
    return {pre_w, pre_b, theta.theta, post_w, post_b};
}

std::size_t HybridParams::parameter_count() const
{
    std::size_t n = 0;
    for (auto b : blocks())
        n += b.size();
    return n;
}

HybridParams zeros_like(const HybridParams& params)
{
    auto z = HybridParams::zeros(params.users, params.qubits(), params.layers());
    z.norm = params.norm;
    return z;
}

HybridParams init_hybrid(int users, int qubits, int layers, Rng& rng)
{
    auto p = HybridParams::zeros(users, qubits, layers);
    const auto k2 = static_cast<std::size_t>(users) * users;
    fill_uniform(p.pre_w, xavier_bound(k2, static_cast<std::size_t>(qubits)), rng);
    fill_uniform(p.theta.theta, 0.1, rng);
    fill_uniform(p.post_w, xavier_bound(static_cast<std::size_t>(qubits), static_cast<std::size_t>(users)), rng);
    return p;
}

HybridOutput forward(const HybridParams& params, const GainMatrix& g)
{
    const int k = g.users();
    if (k != params.users)
        throw std::invalid_argument("hybrid forward: gain matrix has " + std::to_string(k) + " users, model expects " +
                                    std::to_string(params.users));
    const int nq = params.qubits();
    const auto k2 = static_cast<std::size_t>(k) * k;

    HybridOutput out;
    auto& t = out.tape;
    t.x = standardize(g, params.norm);
    t.pre_act.assign(static_cast<std::size_t>(nq), 0.0);
    t.z_in.assign(static_cast<std::size_t>(nq), 0.0);
    for (int q = 0; q < nq; ++q) {
        double s = params.pre_b[q];
        for (std::size_t j = 0; j < k2; ++j)
            s += params.pre_w[q * k2 + j] * t.x[j];
        t.pre_act[q] = s;
        // tanh saturates to exactly 1 in double precision; keep the angle open
        t.z_in[q] = std::clamp(kPi * std::tanh(s), -kMaxEncodingAngle, kMaxEncodingAngle);
    }
    require_finite(t.z_in, "hybrid pre-layer");

    t.z_out = run_circuit(t.z_in, params.theta);

    out.logits.assign(static_cast<std::size_t>(k), 0.0);
    for (int u = 0; u < k; ++u) {
        double s = params.post_b[u];
        for (int q = 0; q < nq; ++q)
            s += params.post_w[static_cast<std::size_t>(u) * nq + q] * t.z_out[q];
        out.logits[u] = s;
    }
    require_finite(out.logits, "hybrid logits");
    return out;
}

HybridParams backward(const HybridParams& params, const HybridTape& tape, std::span<const double> d_logits,
                      GradientMethod method)
{
    const int k = params.users;
    const int nq = params.qubits();
    const auto k2 = static_cast<std::size_t>(k) * k;
    auto grad = zeros_like(params);

    std::vector<double> d_zout(static_cast<std::size_t>(nq), 0.0);
    for (int u = 0; u < k; ++u) {
        grad.post_b[u] = d_logits[u];
        for (int q = 0; q < nq; ++q) {
            const auto idx = static_cast<std::size_t>(u) * nq + q;
            grad.post_w[idx] = d_logits[u] * tape.z_out[q];
            d_zout[q] += params.post_w[idx] * d_logits[u];
        }
    }

    std::vector<double> d_zin(static_cast<std::size_t>(nq), 0.0);
    if (method == GradientMethod::Adjoint) {
        auto vjp = circuit_vjp(tape.z_in, params.theta, d_zout);
        grad.theta.theta = std::move(vjp.grad_theta);
        d_zin = std::move(vjp.grad_input);
    } else {
        const auto jac = circuit_gradients(tape.z_in, params.theta);
        for (std::size_t p = 0; p < params.theta.size(); ++p)
            for (int i = 0; i < nq; ++i)
                grad.theta.theta[p] += jac.d_theta[p * nq + i] * d_zout[i];
        for (int j = 0; j < nq; ++j)
            for (int i = 0; i < nq; ++i)
                d_zin[j] += jac.d_input[static_cast<std::size_t>(j) * nq + i] * d_zout[i];
    }

    for (int q = 0; q < nq; ++q) {
        const double th = std::tanh(tape.pre_act[q]);
        const double d_pre = d_zin[q] * kPi * (1.0 - th * th);
        grad.pre_b[q] = d_pre;
        for (std::size_t j = 0; j < k2; ++j)
            grad.pre_w[q * k2 + j] = d_pre * tape.x[j];
    }
    return grad;
}

// --- CNN ----------------------------------------------------------------------

CnnParams CnnParams::zeros(int users)
{
    CnnParams p;
    p.users = users;
    const auto k2 = static_cast<std::size_t>(users) * users;
    p.conv_w.assign(kFilters * 9, 0.0);
    p.conv_b.assign(kFilters, 0.0);
    p.head_w.assign(static_cast<std::size_t>(users) * kFilters * k2, 0.0);
    p.head_b.assign(static_cast<std::size_t>(users), 0.0);
    return p;
}

std::vector<std::span<double>> CnnParams::blocks()
{
    return {conv_w, conv_b, head_w, head_b};
}

std::vector<std::span<const double>> CnnParams::blocks() const
{
    return {conv_w, conv_b, head_w, head_b};
}

std::size_t CnnParams::parameter_count() const
{
    std::size_t n = 0;
    for (auto b : blocks())
        n += b.size();
    return n;
}

CnnParams zeros_like(const CnnParams& params)
{
    auto z = CnnParams::zeros(params.users);
    z.norm = params.norm;
    return z;
}

CnnParams init_cnn(int users, Rng& rng)
{
    auto p = CnnParams::zeros(users);
    const auto k2 = static_cast<std::size_t>(users) * users;
    fill_uniform(p.conv_w, xavier_bound(9, CnnParams::kFilters * 9), rng);
    fill_uniform(p.head_w, xavier_bound(CnnParams::kFilters * k2, static_cast<std::size_t>(users)), rng);
    return p;
}

CnnOutput forward(const CnnParams& params, const GainMatrix& g)
{
    const int k = g.users();
    if (k != params.users)
        throw std::invalid_argument("cnn forward: gain matrix has " + std::to_string(k) + " users, model expects " +
                                    std::to_string(params.users));
    const auto k2 = static_cast<std::size_t>(k) * k;
    const auto feat = CnnParams::kFilters * k2;

    CnnOutput out;
    auto& t = out.tape;
    t.x = standardize(g, params.norm);
    t.conv_pre.assign(feat, 0.0);
    t.conv_act.assign(feat, 0.0);
    for (int f = 0; f < CnnParams::kFilters; ++f) {
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) {
                double s = params.conv_b[f];
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = r + dr;
                        const int cc = c + dc;
                        if (rr < 0 || rr >= k || cc < 0 || cc >= k)
                            continue;
                        s += params.conv_w[f * 9 + (dr + 1) * 3 + (dc + 1)] * t.x[static_cast<std::size_t>(rr) * k + cc];
                    }
                }
                const auto idx = f * k2 + static_cast<std::size_t>(r) * k + c;
                t.conv_pre[idx] = s;
                t.conv_act[idx] = s > 0.0 ? s : 0.0;
            }
        }
    }

    out.logits.assign(static_cast<std::size_t>(k), 0.0);
    for (int u = 0; u < k; ++u) {
        double s = params.head_b[u];
        for (std::size_t j = 0; j < feat; ++j)
            s += params.head_w[u * feat + j] * t.conv_act[j];
        out.logits[u] = s;
    }
    require_finite(out.logits, "cnn logits");
    return out;
}

CnnParams backward(const CnnParams& params, const CnnTape& tape, std::span<const double> d_logits)
{
    const int k = params.users;
    const auto k2 = static_cast<std::size_t>(k) * k;
    const auto feat = CnnParams::kFilters * k2;
    auto grad = zeros_like(params);

    std::vector<double> d_act(feat, 0.0);
    for (int u = 0; u < k; ++u) {
        grad.head_b[u] = d_logits[u];
        for (std::size_t j = 0; j < feat; ++j) {
            grad.head_w[u * feat + j] = d_logits[u] * tape.conv_act[j];
            d_act[j] += params.head_w[u * feat + j] * d_logits[u];
        }
    }

    for (int f = 0; f < CnnParams::kFilters; ++f) {
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) {
                const auto idx = f * k2 + static_cast<std::size_t>(r) * k + c;
                if (tape.conv_pre[idx] <= 0.0)
                    continue;
                const double d = d_act[idx];
                grad.conv_b[f] += d;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = r + dr;
                        const int cc = c + dc;
                        if (rr < 0 || rr >= k || cc < 0 || cc >= k)
                            continue;
                        grad.conv_w[f * 9 + (dr + 1) * 3 + (dc + 1)] += d * tape.x[static_cast<std::size_t>(rr) * k + cc];
                    }
                }
            }
        }
    }
    return grad;
}

} // namespace qsched
