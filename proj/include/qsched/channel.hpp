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

// Correlated Rician downlink channel for a half-wavelength ULA and the
// beam-domain gain features derived from it via the unitary DFT codebook.

#pragma once

#include "qsched/common.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace qsched {

using cd = std::complex<double>;

struct SystemConfig {
    int num_antennas = 16;        // M
    int num_users = 4;            // K
    int num_scheduled = 2;        // L, 1 <= L <= K
    double snr_db = 20.0;         // per scheduled user, P/L over noise
    double rician_k = 10.0;       // linear K-factor shared by all users
    std::vector<double> rician_k_per_user; // overrides rician_k when non-empty
    double rho = 0.5;             // exponential correlation coefficient
    double aod_range_deg = 60.0;  // AoD ~ U[-range, +range]
    std::uint64_t seed = 1;

    double k_factor(int user) const;
    double beta() const; // linear SNR
    void validate() const;
};

struct UserChannelStats {
    double aod_rad = 0.0;
    double k_factor = 0.0;
    Eigen::VectorXcd los;        // h_l
    Eigen::MatrixXcd corr;       // R_l
    Eigen::MatrixXcd corr_sqrt;  // Hermitian PSD square root of R_l
    Eigen::MatrixXcd cov;        // E[H H^H]
    Eigen::VectorXd beam_gains;  // diag(W^H cov W), clamped >= 0
    int best_beam = 0;
};

/// Beam-domain gain matrix: g(l, i) is user l's gain on the beam chosen for
/// user i. Rows observe, columns transmit.
struct GainMatrix {
    Eigen::MatrixXd g;
    Eigen::VectorXd beta;

    int users() const { return static_cast<int>(g.rows()); }
};

Eigen::MatrixXcd dft_matrix(int m);
Eigen::VectorXcd steering_vector(int m, double aod_rad);
Eigen::MatrixXcd correlation_matrix(int m, double rho);
Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& a);

/// LoS steering, correlation and analytic covariance for one user. Beam gains
/// are filled from the DFT codebook.
UserChannelStats make_user_stats(const SystemConfig& cfg, double aod_rad, double k_factor);

/// One realization H_l (column vector), with H^T = a h^T + b h_n^T R^{1/2}.
/// K-factors at or above this are treated as pure line of sight.
inline constexpr double kLosOnlyK = 1e12;
/// (K/(K+1), 1/(K+1)) power split between LoS and scattered parts.
std::pair<double, double> rician_weights(double k_factor);
Eigen::VectorXcd sample_channel(const UserChannelStats& stats, Rng& rng);

/// E[H H^H] = K/(K+1) h h^H + 1/(K+1) R^T. The transpose comes from the
/// row-vector form of the NLoS term.
Eigen::MatrixXcd analytic_covariance(const UserChannelStats& stats);

struct BeamSelection {
    Eigen::VectorXd gains;
    int best_beam = 0;
    double clamped_magnitude = 0.0; // largest negative value zeroed
};

BeamSelection beam_gains(const Eigen::MatrixXcd& cov, const Eigen::MatrixXcd& w);

GainMatrix feature_matrix(const std::vector<UserChannelStats>& users, const SystemConfig& cfg);

std::vector<double> sample_aods(const SystemConfig& cfg, Rng& rng);

/// Full pipeline for dataset sample `index`: AoDs from the (seed, "aod", index)
/// substream, per-user statistics, then G_in.
struct ChannelSample {
    std::vector<double> aods;
    std::vector<UserChannelStats> users;
    GainMatrix gains;
};
ChannelSample generate_sample(const SystemConfig& cfg, std::uint64_t index);
std::vector<UserChannelStats> users_from_aods(const SystemConfig& cfg, const std::vector<double>& aods);

} // namespace qsched
