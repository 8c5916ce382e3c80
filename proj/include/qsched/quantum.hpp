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

// State-vector simulator for the angle-encoded variational circuit:
//
//   |0..0> --R_Y(z_i)--> [ R_Z R_Y R_Z on every qubit, CNOT ring ] x N --> <Z_i>
//
// Qubit 0 is the least significant bit of the basis-state index.

#pragma once

#include "qsched/common.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qsched {

using cd = std::complex<double>;

inline constexpr int kMaxQubits = 20;
inline constexpr int kMaxDenseQubits = 6;

class StateVector {
public:
    explicit StateVector(int n_qubits);

    int qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const cd> amplitudes() const { return amps_; }
    std::span<cd> amplitudes() { return amps_; }

    void apply_rz(int qubit, double theta);
    void apply_ry(int qubit, double theta);
    void apply_cnot(int control, int target);

    double norm() const;
    /// <Z_i> for every qubit.
    std::vector<double> expectations_z() const;

private:
    void check_qubit(int q) const;

    int n_qubits_;
    std::vector<cd> amps_;
};

/// Variational angles, layer-major: theta[(layer * n_qubits + qubit) * 3 + k],
/// k = 0, 1, 2 for R_Z, R_Y, R_Z.
struct CircuitParams {
    int n_layers = 0;
    int n_qubits = 0;
    std::vector<double> theta;

    CircuitParams() = default;
    CircuitParams(int layers, int qubits) : n_layers(layers), n_qubits(qubits), theta(std::size_t(layers) * qubits * 3, 0.0) {}

    std::size_t size() const { return theta.size(); }
    double& at(int layer, int qubit, int k) { return theta[index(layer, qubit, k)]; }
    double at(int layer, int qubit, int k) const { return theta[index(layer, qubit, k)]; }
    std::size_t index(int layer, int qubit, int k) const { return (std::size_t(layer) * n_qubits + qubit) * 3 + k; }
};

StateVector encode(std::span<const double> z_in);
void variational_layer(StateVector& state, const CircuitParams& params, int layer);
std::vector<double> run_circuit(std::span<const double> z_in, const CircuitParams& params);

/// Dense 2^n x 2^n matrix of the variational block (encoding excluded), built
/// from Kronecker-lifted gate matrices. Test oracle; refuses n > kMaxDenseQubits.
Eigen::MatrixXcd circuit_unitary_dense(const CircuitParams& params);

/// Full Jacobian of z_out by parameter shift.
/// d_theta[p * n_q + i] = d z_out[i] / d theta[p]
/// d_input[j * n_q + i] = d z_out[i] / d z_in[j]
struct CircuitJacobian {
    std::vector<double> d_theta;
    std::vector<double> d_input;
};
CircuitJacobian circuit_gradients(std::span<const double> z_in, const CircuitParams& params);

/// Vector-Jacobian product v^T (d z_out / d angles) by adjoint differentiation:
/// one forward pass plus one reverse sweep for the observable sum_i v_i Z_i.
struct CircuitVjp {
    std::vector<double> z_out;
    std::vector<double> grad_theta;
    std::vector<double> grad_input;
};
CircuitVjp circuit_vjp(std::span<const double> z_in, const CircuitParams& params, std::span<const double> v);

} // namespace qsched
