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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsched/channel.hpp"

#include <cmath>

using namespace qsched;

namespace {

Eigen::MatrixXcd empirical_covariance(const UserChannelStats& s, int draws, Rng& rng)
{
    const auto m = s.los.size();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
    for (int d = 0; d < draws; ++d) {
        const auto h = sample_channel(s, rng);
        acc.noalias() += h * h.adjoint();
    }
    return acc / static_cast<double>(draws);
}

SystemConfig small_config(int m, double rho)
{
    SystemConfig cfg;
    cfg.num_antennas = m;
    cfg.rho = rho;
    return cfg;
}

} // namespace

TEST_CASE("dft_matrix small cases")
{
    const auto w1 = dft_matrix(1);
    CHECK(w1.rows() == 1);
    CHECK(std::abs(w1(0, 0) - cd(1, 0)) < 1e-15);

    const auto w2 = dft_matrix(2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(w2(0, 0) - cd(r, 0)) < 1e-15);
    CHECK(std::abs(w2(0, 1) - cd(r, 0)) < 1e-15);
    CHECK(std::abs(w2(1, 0) - cd(r, 0)) < 1e-15);
    CHECK(std::abs(w2(1, 1) - cd(-r, 0)) < 1e-15);

    const auto w4 = dft_matrix(4);
    CHECK(std::abs(w4(1, 1) - cd(0, -0.5)) < 1e-15);

    CHECK_THROWS_AS(dft_matrix(0), std::invalid_argument);
}

TEST_CASE("dft_matrix is unitary")
{
    for (int m : {1, 2, 4, 8, 16, 32, 64}) {
        const auto w = dft_matrix(m);
        const Eigen::MatrixXcd e = w * w.adjoint() - Eigen::MatrixXcd::Identity(m, m);
        CHECK(e.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("steering_vector")
{
    const auto h0 = steering_vector(4, 0.0);
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(h0(k) - cd(1, 0)) < 1e-15);

    const auto h1 = steering_vector(2, kPi / 2);
    CHECK(std::abs(h1(0) - cd(1, 0)) < 1e-15);
    CHECK(std::abs(h1(1) - cd(-1, 0)) < 1e-15);

    for (int m : {1, 3, 16, 33})
        for (double aod : {-1.2, -0.3, 0.0, 0.7, 1.5}) {
            const auto h = steering_vector(m, aod);
            for (int k = 0; k < m; ++k)
                CHECK(std::abs(std::abs(h(k)) - 1.0) < 1e-14);
        }
}

TEST_CASE("correlation_matrix")
{
    CHECK(correlation_matrix(5, 0.0).isApprox(Eigen::MatrixXcd::Identity(5, 5)));

    const auto r2 = correlation_matrix(2, 0.5);
    CHECK(r2(0, 0).real() == 1.0);
    CHECK(r2(0, 1).real() == 0.5);
    CHECK(r2(1, 0).real() == 0.5);
    CHECK(r2(1, 1).real() == 1.0);

    const auto r8 = correlation_matrix(8, 0.9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r8);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    for (int k = 0; k < 8; ++k)
        CHECK(r8(k, k).real() == 1.0);

    CHECK_THROWS_AS(correlation_matrix(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(correlation_matrix(4, -0.1), std::invalid_argument);
}

TEST_CASE("hermitian_sqrt squares back")
{
    const auto r = correlation_matrix(6, 0.7);
    const auto s = hermitian_sqrt(r);
    CHECK((s * s - r).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s - s.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample_channel LoS-only limit")
{
    const auto cfg = small_config(8, 0.5);
    for (double kf : {1e12, 1e15, static_cast<double>(INFINITY)}) {
        const auto s = make_user_stats(cfg, 0.4, kf);
        auto rng = substream(7, "test");
        for (int d = 0; d < 20; ++d)
            CHECK((sample_channel(s, rng) - s.los).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((analytic_covariance(s) - s.los * s.los.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sample_channel Rayleigh energy matches M")
{
    const int m = 16;
    const auto s = make_user_stats(small_config(m, 0.0), 0.2, 0.0);
    auto rng = substream(11, "energy");
    const int draws = 100000;
    double acc = 0.0;
    for (int d = 0; d < draws; ++d)
        acc += sample_channel(s, rng).squaredNorm();
    CHECK(std::abs(acc / draws - m) / m < 0.02);
}

TEST_CASE("sample_channel is deterministic per seed")
{
    const auto s = make_user_stats(small_config(8, 0.5), -0.3, 2.0);
    auto a = substream(3, "det", 9);
    auto b = substream(3, "det", 9);
    for (int d = 0; d < 5; ++d) {
        const auto ha = sample_channel(s, a);
        const auto hb = sample_channel(s, b);
        CHECK(ha == hb);
    }
}

TEST_CASE("analytic_covariance limits")
{
    const auto iid = make_user_stats(small_config(6, 0.0), 0.5, 0.0);
    CHECK((analytic_covariance(iid) - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic_covariance matches Monte-Carlo covariance")
{
    const int draws = 200000;
    SUBCASE("K=1, rho=0.5, M=4")
    {
        const auto s = make_user_stats(small_config(4, 0.5), 0.6, 1.0);
        auto rng = substream(5, "mc-cov");
        const auto emp = empirical_covariance(s, draws, rng);
        const auto ana = analytic_covariance(s);
        CHECK((emp - ana).norm() / ana.norm() < 0.02);
    }
    SUBCASE("ten random configurations")
    {
        auto pick = substream(99, "cov-configs");
        for (int c = 0; c < 10; ++c) {
            const int m = 2 + static_cast<int>(uniform01(pick) * 7);
            const double rho = 0.95 * uniform01(pick);
            const double kf = 5.0 * uniform01(pick);
            const double aod = (uniform01(pick) - 0.5) * 2.0;
            const auto s = make_user_stats(small_config(m, rho), aod, kf);
            auto rng = substream(100 + c, "mc-cov");
            const auto emp = empirical_covariance(s, draws, rng);
            const auto ana = analytic_covariance(s);
            INFO("config " << c << " m=" << m << " rho=" << rho << " K=" << kf);
            CHECK((emp - ana).norm() / ana.norm() < 0.02);
        }
    }
}

TEST_CASE("beam_gains examples")
{
    const int m = 8;
    const auto w = dft_matrix(m);

    const auto id = beam_gains(Eigen::MatrixXcd::Identity(m, m), w);
    for (int k = 0; k < m; ++k)
        CHECK(std::abs(id.gains(k) - 1.0) < 1e-12);
    CHECK(id.best_beam == 0);

    for (int c = 0; c < m; ++c) {
        const Eigen::VectorXcd h = w.col(c) * std::sqrt(static_cast<double>(m));
        const auto sel = beam_gains(h * h.adjoint(), w);
        CHECK(sel.best_beam == c);
        CHECK(std::abs(sel.gains(c) - m) < 1e-10);
        for (int k = 0; k < m; ++k)
            if (k != c)
                CHECK(sel.gains(k) < 1e-10);
        CHECK(sel.clamped_magnitude <= 1e-9);
    }
}

TEST_CASE("beam_gains preserves trace")
{
    auto rng = substream(21, "psd");
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int m = 1 + t % 12;
        Eigen::MatrixXcd a(m, m + 2);
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                a(i, j) = cd(n(rng), n(rng));
        const Eigen::MatrixXcd cov = a * a.adjoint();
        const auto sel = beam_gains(cov, dft_matrix(m));
        const double tr = cov.trace().real();
        CHECK(std::abs(sel.gains.sum() - tr) / tr < 1e-9);
        CHECK(sel.gains.minCoeff() >= 0.0);
        CHECK(sel.gains(sel.best_beam) == sel.gains.maxCoeff());
    }
}

TEST_CASE("beam_gains rejects a clearly indefinite covariance")
{
    Eigen::MatrixXcd cov = -Eigen::MatrixXcd::Identity(4, 4);
    CHECK_THROWS_AS(beam_gains(cov, dft_matrix(4)), NumericalError);
}

TEST_CASE("user stats invariants")
{
    SystemConfig cfg;
    for (double aod : {-1.0, -0.2, 0.0, 0.5, 1.0}) {
        const auto s = make_user_stats(cfg, aod, cfg.rician_k);
        CHECK(s.beam_gains.minCoeff() >= 0.0);
        const double tr = s.cov.trace().real();
        CHECK(std::abs(s.beam_gains.sum() - tr) / tr < 1e-9);
        CHECK(s.beam_gains(s.best_beam) == s.beam_gains.maxCoeff());
        for (int k = 0; k < s.best_beam; ++k)
            CHECK(s.beam_gains(k) < s.beam_gains(s.best_beam));
    }
}

TEST_CASE("feature_matrix")
{
    SUBCASE("single user")
    {
        SystemConfig cfg;
        cfg.num_users = 1;
        cfg.num_scheduled = 1;
        const auto users = users_from_aods(cfg, {0.3});
        const auto g = feature_matrix(users, cfg);
        CHECK(g.g.rows() == 1);
        CHECK(g.g(0, 0) == users[0].beam_gains(users[0].best_beam));
        CHECK(g.beta(0) == doctest::Approx(100.0));
    }
    SUBCASE("identical users give equal rows and columns")
    {
        SystemConfig cfg;
        cfg.num_users = 2;
        const auto users = users_from_aods(cfg, {0.25, 0.25});
        const auto g = feature_matrix(users, cfg);
        CHECK(g.g(0, 0) == g.g(0, 1));
        CHECK(g.g(1, 0) == g.g(1, 1));
        CHECK(g.g(0, 0) == g.g(1, 0));
    }
    SUBCASE("K=4, M=16, seed 42 matches recomputation")
    {
        SystemConfig cfg;
        cfg.seed = 42;
        const auto sample = generate_sample(cfg, 0);
        const auto w = dft_matrix(cfg.num_antennas);
        std::vector<BeamSelection> sel;
        for (double aod : sample.aods) {
            auto st = make_user_stats(cfg, aod, cfg.rician_k);
            sel.push_back(beam_gains(analytic_covariance(st), w));
        }
        for (int l = 0; l < 4; ++l)
            for (int i = 0; i < 4; ++i)
                CHECK(sample.gains.g(l, i) == doctest::Approx(sel[l].gains(sel[i].best_beam)).epsilon(1e-12));
        CHECK(sample.gains.g.minCoeff() >= 0.0);
    }
}

TEST_CASE("beta follows snr_db")
{
    SystemConfig cfg;
    cfg.snr_db = 10.0;
    CHECK(cfg.beta() == doctest::Approx(10.0));
    cfg.snr_db = 0.0;
    CHECK(cfg.beta() == doctest::Approx(1.0));
}

TEST_CASE("pipeline is deterministic and order independent")
{
    SystemConfig cfg;
    cfg.seed = 1234;
    const auto a = generate_sample(cfg, 5);
    generate_sample(cfg, 3);
    const auto b = generate_sample(cfg, 5);
    CHECK(a.aods == b.aods);
    CHECK(a.gains.g == b.gains.g);
    const auto c = generate_sample(cfg, 6);
    CHECK(a.aods != c.aods);
    for (double aod : a.aods)
        CHECK(std::abs(aod) <= cfg.aod_range_deg * kPi / 180.0);
}

TEST_CASE("SystemConfig validation")
{
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.num_scheduled = 5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.num_scheduled = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.rho = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.num_antennas = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.rician_k = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.rician_k_per_user = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.rician_k_per_user = {1.0, 2.0, 3.0, 4.0};
    CHECK_NOTHROW(bad.validate());
    CHECK(bad.k_factor(2) == 3.0);
}
