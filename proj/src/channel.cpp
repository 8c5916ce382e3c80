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

#include "qsched/channel.hpp"

#include <cmath>
#include <string>

namespace qsched {

namespace {
constexpr double kClampGuard = 1e-9;
}

double SystemConfig::k_factor(int user) const
{
    if (rician_k_per_user.empty())
        return rician_k;
    return rician_k_per_user.at(static_cast<std::size_t>(user));
}

double SystemConfig::beta() const
{
    return std::pow(10.0, snr_db / 10.0);
}

void SystemConfig::validate() const
{
    if (num_antennas < 1)
        throw ConfigError("num_antennas must be positive");
    if (num_users < 1)
        throw ConfigError("num_users must be positive");
    if (num_scheduled < 1 || num_scheduled > num_users)
        throw ConfigError("num_scheduled must satisfy 1 <= L <= K (L=" + std::to_string(num_scheduled) +
                          ", K=" + std::to_string(num_users) + ")");
    if (!(rho >= 0.0 && rho < 1.0))
        throw ConfigError("rho must lie in [0, 1)");
    if (!(rician_k >= 0.0))
        throw ConfigError("rician_k must be nonnegative");
    if (!rician_k_per_user.empty()) {
        if (static_cast<int>(rician_k_per_user.size()) != num_users)
            throw ConfigError("rician_k_per_user must have one entry per user");
        for (double k : rician_k_per_user)
            if (!(k >= 0.0))
                throw ConfigError("rician_k_per_user entries must be nonnegative");
    }
    if (!(aod_range_deg >= 0.0 && aod_range_deg <= 90.0))
        throw ConfigError("aod_range_deg must lie in [0, 90]");
    if (!std::isfinite(snr_db))
        throw ConfigError("snr_db must be finite");
}

Eigen::MatrixXcd dft_matrix(int m)
{
    if (m < 1)
        throw std::invalid_argument("dft_matrix: size must be positive");
    Eigen::MatrixXcd w(m, m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            // reduce m*n mod M first so the phase argument stays small
            const auto k = (static_cast<long long>(r) * c) % m;
            const double phase = -2.0 * kPi * static_cast<double>(k) / m;
            w(r, c) = scale * cd(std::cos(phase), std::sin(phase));
        }
    }
    return w;
}

Eigen::VectorXcd steering_vector(int m, double aod_rad)
{
    Eigen::VectorXcd h(m);
    const double s = std::sin(aod_rad);
    for (int k = 0; k < m; ++k)
        h(k) = std::polar(1.0, kPi * k * s);
    return h;
}

Eigen::MatrixXcd correlation_matrix(int m, double rho)
{
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("correlation_matrix: rho must lie in [0, 1)");
    Eigen::MatrixXcd r(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            r(a, b) = std::pow(rho, std::abs(a - b));
    return r;
}

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& a)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

UserChannelStats make_user_stats(const SystemConfig& cfg, double aod_rad, double k_factor)
{
    UserChannelStats s;
    s.aod_rad = aod_rad;
    s.k_factor = k_factor;
    s.los = steering_vector(cfg.num_antennas, aod_rad);
    s.corr = correlation_matrix(cfg.num_antennas, cfg.rho);
    s.corr_sqrt = hermitian_sqrt(s.corr);
    s.cov = analytic_covariance(s);
    const auto sel = beam_gains(s.cov, dft_matrix(cfg.num_antennas));
    s.beam_gains = sel.gains;
    s.best_beam = sel.best_beam;
    return s;
}

std::pair<double, double> rician_weights(double k_factor)
{
    if (k_factor >= kLosOnlyK)
        return {1.0, 0.0};
    return {k_factor / (k_factor + 1.0), 1.0 / (k_factor + 1.0)};
}

Eigen::VectorXcd sample_channel(const UserChannelStats& stats, Rng& rng)
{
    const auto m = stats.los.size();
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::VectorXcd hn(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        hn(k) = cd(re, im);
    }
    const auto [a2, b2] = rician_weights(stats.k_factor);
    const double a = std::sqrt(a2);
    const double b = std::sqrt(b2);
    // H^T = a h^T + b hn^T S  =>  H = a h + b S^T hn
    return a * stats.los + b * (stats.corr_sqrt.transpose() * hn);
}

Eigen::MatrixXcd analytic_covariance(const UserChannelStats& stats)
{
    const auto [a2, b2] = rician_weights(stats.k_factor);
    return a2 * (stats.los * stats.los.adjoint()) + b2 * stats.corr.transpose();
}

BeamSelection beam_gains(const Eigen::MatrixXcd& cov, const Eigen::MatrixXcd& w)
{
    BeamSelection sel;
    const Eigen::MatrixXcd u = w.adjoint() * cov * w;
    const auto m = u.rows();
    sel.gains.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        double v = u(k, k).real();
        if (v < 0.0) {
            if (-v > kClampGuard * std::max(1.0, cov.trace().real()))
                throw NumericalError("beam_gains: negative beam gain " + std::to_string(v) +
                                     " exceeds clamp guard; covariance is not PSD");
            sel.clamped_magnitude = std::max(sel.clamped_magnitude, -v);
            v = 0.0;
        }
        sel.gains(k) = v;
    }
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < m; ++k)
        if (sel.gains(k) > sel.gains(best))
            best = k;
    sel.best_beam = static_cast<int>(best);
    return sel;
}

GainMatrix feature_matrix(const std::vector<UserChannelStats>& users, const SystemConfig& cfg)
{
    const auto k = static_cast<Eigen::Index>(users.size());
    GainMatrix out;
    out.g.resize(k, k);
    for (Eigen::Index l = 0; l < k; ++l)
        for (Eigen::Index i = 0; i < k; ++i)
            out.g(l, i) = users[l].beam_gains(users[i].best_beam);
    out.beta = Eigen::VectorXd::Constant(k, cfg.beta());
    return out;
}

std::vector<double> sample_aods(const SystemConfig& cfg, Rng& rng)
{
    const double range = cfg.aod_range_deg * kPi / 180.0;
    std::vector<double> aods(static_cast<std::size_t>(cfg.num_users));
    for (auto& a : aods)
        a = -range + 2.0 * range * uniform01(rng);
    return aods;
}

std::vector<UserChannelStats> users_from_aods(const SystemConfig& cfg, const std::vector<double>& aods)
{
    std::vector<UserChannelStats> users;
    users.reserve(aods.size());
    for (std::size_t l = 0; l < aods.size(); ++l)
        users.push_back(make_user_stats(cfg, aods[l], cfg.k_factor(static_cast<int>(l))));
    return users;
}

ChannelSample generate_sample(const SystemConfig& cfg, std::uint64_t index)
{
    ChannelSample s;
    auto rng = substream(cfg.seed, "aod", index);
    s.aods = sample_aods(cfg, rng);
    s.users = users_from_aods(cfg, s.aods);
    s.gains = feature_matrix(s.users, cfg);
    return s;
}

} // namespace qsched
