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

#include "qsched/quantum.hpp"

#include <cmath>
#include <string>

namespace qsched {

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits)
{
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw std::invalid_argument("StateVector: qubit count " + std::to_string(n_qubits) + " outside [1, " +
                                    std::to_string(kMaxQubits) + "]");
    amps_.assign(std::size_t{1} << n_qubits, cd(0.0, 0.0));
    amps_[0] = 1.0;
}

void StateVector::check_qubit(int q) const
{
    if (q < 0 || q >= n_qubits_)
        throw std::invalid_argument("qubit index " + std::to_string(q) + " out of range");
}

void StateVector::apply_rz(int qubit, double theta)
{
    check_qubit(qubit);
    const cd lo = std::polar(1.0, -theta / 2.0);
    const cd hi = std::polar(1.0, theta / 2.0);
    const std::size_t mask = std::size_t{1} << qubit;
    for (std::size_t b = 0; b < amps_.size(); ++b)
        amps_[b] *= (b & mask) ? hi : lo;
}

void StateVector::apply_ry(int qubit, double theta)
{
    check_qubit(qubit);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const std::size_t mask = std::size_t{1} << qubit;
    for (std::size_t b = 0; b < amps_.size(); ++b) {
        if (b & mask)
            continue;
        const cd a0 = amps_[b];
        const cd a1 = amps_[b | mask];
        amps_[b] = c * a0 - s * a1;
        amps_[b | mask] = s * a0 + c * a1;
    }
}

void StateVector::apply_cnot(int control, int target)
{
    check_qubit(control);
    check_qubit(target);
    if (control == target)
        throw std::invalid_argument("apply_cnot: control and target must differ");
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    for (std::size_t b = 0; b < amps_.size(); ++b)
        if ((b & cmask) && !(b & tmask))
            std::swap(amps_[b], amps_[b | tmask]);
}

double StateVector::norm() const
{
    double s = 0.0;
    for (const auto& a : amps_)
        s += std::norm(a);
    return std::sqrt(s);
}

std::vector<double> StateVector::expectations_z() const
{
    std::vector<double> z(static_cast<std::size_t>(n_qubits_), 0.0);
    for (std::size_t b = 0; b < amps_.size(); ++b) {
        const double p = std::norm(amps_[b]);
        for (int q = 0; q < n_qubits_; ++q)
            z[q] += ((b >> q) & 1U) ? -p : p;
    }
    return z;
}

StateVector encode(std::span<const double> z_in)
{
    StateVector s(static_cast<int>(z_in.size()));
    for (std::size_t q = 0; q < z_in.size(); ++q)
        s.apply_ry(static_cast<int>(q), z_in[q]);
    return s;
}

void variational_layer(StateVector& state, const CircuitParams& params, int layer)
{
    const int n = params.n_qubits;
    for (int q = 0; q < n; ++q) {
        state.apply_rz(q, params.at(layer, q, 0));
        state.apply_ry(q, params.at(layer, q, 1));
        state.apply_rz(q, params.at(layer, q, 2));
    }
    if (n == 1)
        return;
    for (int q = 0; q < n; ++q)
        state.apply_cnot(q, (q + 1) % n);
}

namespace {

void check_shapes(std::span<const double> z_in, const CircuitParams& params)
{
    if (static_cast<int>(z_in.size()) != params.n_qubits)
        throw std::invalid_argument("circuit input length does not match qubit count");
    if (params.theta.size() != std::size_t(params.n_layers) * params.n_qubits * 3)
        throw std::invalid_argument("circuit parameter tensor has the wrong shape");
}

} // namespace

std::vector<double> run_circuit(std::span<const double> z_in, const CircuitParams& params)
{
    check_shapes(z_in, params);
    auto state = encode(z_in);
    for (int l = 0; l < params.n_layers; ++l)
        variational_layer(state, params, l);
    return state.expectations_z();
}

namespace {

using Mat2 = Eigen::Matrix2cd;

Eigen::MatrixXcd lift_single(const Mat2& g, int qubit, int n)
{
    // Kronecker order: qubit n-1 leftmost, qubit 0 rightmost (little-endian index)
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) {
        const Mat2 f = (q == qubit) ? g : Mat2::Identity();
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (int r = 0; r < out.rows(); ++r)
            for (int c = 0; c < out.cols(); ++c)
                next.block(r * 2, c * 2, 2, 2) = out(r, c) * f;
        out = std::move(next);
    }
    return out;
}

Eigen::MatrixXcd cnot_matrix(int control, int target, int n)
{
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index b = 0; b < dim; ++b) {
        Eigen::Index out = b;
        if ((b >> control) & 1)
            out = b ^ (Eigen::Index{1} << target);
        m(out, b) = 1.0;
    }
    return m;
}

Mat2 rz_matrix(double t)
{
    Mat2 m;
    m << std::polar(1.0, -t / 2.0), 0.0, 0.0, std::polar(1.0, t / 2.0);
    return m;
}

Mat2 ry_matrix(double t)
{
    Mat2 m;
    m << std::cos(t / 2.0), -std::sin(t / 2.0), std::sin(t / 2.0), std::cos(t / 2.0);
    return m;
}

} // namespace

Eigen::MatrixXcd circuit_unitary_dense(const CircuitParams& params)
{
    const int n = params.n_qubits;
    if (n < 1 || n > kMaxDenseQubits)
        throw std::invalid_argument("circuit_unitary_dense: qubit count exceeds dense-oracle guard");
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    for (int l = 0; l < params.n_layers; ++l) {
        for (int q = 0; q < n; ++q) {
            u = lift_single(rz_matrix(params.at(l, q, 0)), q, n) * u;
            u = lift_single(ry_matrix(params.at(l, q, 1)), q, n) * u;
            u = lift_single(rz_matrix(params.at(l, q, 2)), q, n) * u;
        }
        if (n > 1)
            for (int q = 0; q < n; ++q)
                u = cnot_matrix(q, (q + 1) % n, n) * u;
    }
    return u;
}

CircuitJacobian circuit_gradients(std::span<const double> z_in, const CircuitParams& params)
{
    check_shapes(z_in, params);
    const auto nq = static_cast<std::size_t>(params.n_qubits);
    constexpr double shift = kPi / 2.0;
    CircuitJacobian jac;
    jac.d_theta.assign(params.size() * nq, 0.0);
    jac.d_input.assign(nq * nq, 0.0);

    CircuitParams shifted = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        shifted.theta[p] = params.theta[p] + shift;
        const auto plus = run_circuit(z_in, shifted);
        shifted.theta[p] = params.theta[p] - shift;
        const auto minus = run_circuit(z_in, shifted);
        shifted.theta[p] = params.theta[p];
        for (std::size_t i = 0; i < nq; ++i)
            jac.d_theta[p * nq + i] = 0.5 * (plus[i] - minus[i]);
    }

    std::vector<double> z(z_in.begin(), z_in.end());
    for (std::size_t j = 0; j < nq; ++j) {
        z[j] = z_in[j] + shift;
        const auto plus = run_circuit(z, params);
        z[j] = z_in[j] - shift;
        const auto minus = run_circuit(z, params);
        z[j] = z_in[j];
        for (std::size_t i = 0; i < nq; ++i)
            jac.d_input[j * nq + i] = 0.5 * (plus[i] - minus[i]);
    }
    return jac;
}

namespace {

enum class OpKind { RY, RZ, CNOT };

struct Op {
    OpKind kind;
    int a;          // qubit, or control for CNOT
    int b;          // CNOT target
    bool is_input;  // angle comes from z_in rather than theta
    std::size_t index;
};

std::vector<Op> circuit_ops(const CircuitParams& params)
{
    const int n = params.n_qubits;
    std::vector<Op> ops;
    ops.reserve(std::size_t(n) * (1 + 4 * std::size_t(params.n_layers)));
    for (int q = 0; q < n; ++q)
        ops.push_back({OpKind::RY, q, 0, true, std::size_t(q)});
    for (int l = 0; l < params.n_layers; ++l) {
        for (int q = 0; q < n; ++q) {
            ops.push_back({OpKind::RZ, q, 0, false, params.index(l, q, 0)});
            ops.push_back({OpKind::RY, q, 0, false, params.index(l, q, 1)});
            ops.push_back({OpKind::RZ, q, 0, false, params.index(l, q, 2)});
        }
        if (n > 1)
            for (int q = 0; q < n; ++q)
                ops.push_back({OpKind::CNOT, q, (q + 1) % n, false, 0});
    }
    return ops;
}

void apply_op(StateVector& s, const Op& op, double angle)
{
    switch (op.kind) {
    case OpKind::RY: s.apply_ry(op.a, angle); break;
    case OpKind::RZ: s.apply_rz(op.a, angle); break;
    case OpKind::CNOT: s.apply_cnot(op.a, op.b); break;
    }
}

// Im <lambda | P_q | psi> for the rotation generator P in {Y, Z}.
double generator_overlap_imag(std::span<const cd> lambda, std::span<const cd> psi, OpKind kind, int q)
{
    const std::size_t mask = std::size_t{1} << q;
    cd acc(0.0, 0.0);
    if (kind == OpKind::RZ) {
        for (std::size_t b = 0; b < psi.size(); ++b) {
            const cd t = std::conj(lambda[b]) * psi[b];
            acc += (b & mask) ? -t : t;
        }
    } else {
        const cd i(0.0, 1.0);
        for (std::size_t b = 0; b < psi.size(); ++b) {
            if (b & mask)
                continue;
            // (Y psi)_0 = -i psi_1, (Y psi)_1 = i psi_0
            acc += std::conj(lambda[b]) * (-i * psi[b | mask]);
            acc += std::conj(lambda[b | mask]) * (i * psi[b]);
        }
    }
    return acc.imag();
}

} // namespace

CircuitVjp circuit_vjp(std::span<const double> z_in, const CircuitParams& params, std::span<const double> v)
{
    check_shapes(z_in, params);
    if (v.size() != z_in.size())
        throw std::invalid_argument("circuit_vjp: cotangent length does not match qubit count");
    const auto ops = circuit_ops(params);
    auto angle_of = [&](const Op& op) { return op.is_input ? z_in[op.index] : params.theta[op.index]; };

    StateVector psi(params.n_qubits);
    for (const auto& op : ops)
        apply_op(psi, op, angle_of(op));

    CircuitVjp out;
    out.z_out = psi.expectations_z();
    out.grad_theta.assign(params.size(), 0.0);
    out.grad_input.assign(z_in.size(), 0.0);

    StateVector lambda = psi;
    {
        auto la = lambda.amplitudes();
        for (std::size_t b = 0; b < la.size(); ++b) {
            double w = 0.0;
            for (std::size_t q = 0; q < v.size(); ++q)
                w += ((b >> q) & 1U) ? -v[q] : v[q];
            la[b] *= w;
        }
    }

    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const Op& op = *it;
        if (op.kind == OpKind::CNOT) {
            psi.apply_cnot(op.a, op.b);
            lambda.apply_cnot(op.a, op.b);
            continue;
        }
        const double g = generator_overlap_imag(lambda.amplitudes(), psi.amplitudes(), op.kind, op.a);
        (op.is_input ? out.grad_input : out.grad_theta)[op.index] += g;
        const double angle = angle_of(op);
        apply_op(psi, op, -angle);
        apply_op(lambda, op, -angle);
    }
    return out;
}

} // namespace qsched
