// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - uplink analysis of scalable cell-free massive MIMO with
// finite-resolution converters over correlated Rician fading.
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
// ------------------------------------------------------------------------

#include <cfmimo/cfmimo.hpp>

#include <gtest/gtest.h>

using namespace cfmimo;

namespace {

// Midpoint rule over [-20 sd, 20 sd] with a million nodes.
cplx riemann_entry(int d, double theta, double asd) {
    const int nodes = 1000000;
    const double half = 20.0 * asd;
    const double h = 2.0 * half / nodes;
    cplx acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double delta = -half + (i + 0.5) * h;
        const double w = std::exp(-delta * delta / (2.0 * asd * asd)) / (std::sqrt(2.0 * pi) * asd);
        acc += w * std::polar(1.0, pi * d * std::sin(theta + delta));
    }
    return acc * h;
}

} // namespace

TEST(Scenario, SizesAndBounds) {
    SimConfig cfg;
    const Scenario s = generate_scenario(cfg, 9);
    ASSERT_EQ(s.num_aps(), 64u);
    ASSERT_EQ(s.num_ues(), 40u);
    for (const auto& p : s.ap_positions) {
        EXPECT_GE(p[0], 0.0);
        EXPECT_LE(p[0], 1000.0);
        EXPECT_GE(p[1], 0.0);
        EXPECT_LE(p[1], 1000.0);
    }
    SimConfig one = cfg;
    one.num_aps = 1;
    one.num_ues = 1;
    EXPECT_EQ(generate_scenario(one, 1).num_aps(), 1u);
}

TEST(Scenario, SameSeedSamePositions) {
    SimConfig cfg;
    const Scenario a = generate_scenario(cfg, 5);
    const Scenario b = generate_scenario(cfg, 5);
    const Scenario c = generate_scenario(cfg, 6);
    EXPECT_EQ(a.ap_positions, b.ap_positions);
    EXPECT_EQ(a.ue_positions, b.ue_positions);
    EXPECT_NE(a.ue_positions, c.ue_positions);
}

TEST(LargeScale, PathlossValues) {
    EXPECT_NEAR(linear_to_db(large_scale_fading(1.0, 0.0)), -30.5, 1e-12);
    EXPECT_NEAR(linear_to_db(large_scale_fading(1000.0, 0.0)), -140.6, 1e-9);
    EXPECT_NEAR(linear_to_db(large_scale_fading(10.0, 3.0)), -30.5 - 36.7 + 3.0, 1e-12);
    EXPECT_THROW(large_scale_fading(0.0, 0.0), ConfigError);
}

TEST(LargeScale, ShadowingStandardDeviation) {
    const auto s = draw_shadowing(100, 1000, 4.0, 3);
    double m = 0.0, v = 0.0;
    for (double x : s) m += x;
    m /= static_cast<double>(s.size());
    for (double x : s) v += (x - m) * (x - m);
    v /= static_cast<double>(s.size() - 1);
    EXPECT_NEAR(std::sqrt(v), 4.0, 0.05);
    EXPECT_NEAR(m, 0.0, 0.05);
}

TEST(Rician, FactorValues) {
    EXPECT_NEAR(rician_factor(100.0), 10.0, 1e-12);
    EXPECT_NEAR(rician_factor(13.0 / 0.03), 1.0, 1e-12);
    EXPECT_EQ(rician_factor(50.0, true), 0.0);
}

TEST(Los, SteeringVector) {
    const CVec h0 = los_steering(0.0, 5, 2.0);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(std::abs(h0(i) - std::sqrt(2.0)), 0.0, 1e-15);
    const CVec h = los_steering(0.77, 7, 3.0);
    EXPECT_NEAR(h.squaredNorm(), 21.0, 1e-12);
    const CVec h6 = los_steering(pi / 6.0, 2, 1.0);
    EXPECT_NEAR(std::arg(h6(1)), -pi / 2.0, 1e-12);
}

TEST(Correlation, SingleAntennaIsBetaNlos) {
    const CMat r = spatial_correlation(0.4, 15.0 * pi / 180.0, 2.5e-9, 1);
    EXPECT_NEAR(r(0, 0).real(), 2.5e-9, 1e-8 * 2.5e-9);
}

TEST(Correlation, DiagonalAndHermitian) {
    const CMat r = spatial_correlation(-1.1, 10.0 * pi / 180.0, 4.0, 6);
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(std::abs(r(i, i) - cplx(4.0, 0.0)), 0.0, 4e-8);
    EXPECT_LT((r - r.adjoint()).norm(), 1e-14);
    EXPECT_TRUE(is_hermitian_psd(r, 1e-12, 1e-9));
}

TEST(Correlation, MatchesRiemannOracle) {
    const double theta = 30.0 * pi / 180.0;
    const double asd = 15.0 * pi / 180.0;
    const CMat r = spatial_correlation(theta, asd, 1.0, 4);
    for (int d = 1; d < 4; ++d) {
        const cplx want = riemann_entry(d, theta, asd);
        EXPECT_LT(std::abs(r(d, 0) - want), 1e-8 * std::abs(want)) << "lag " << d;
        EXPECT_LT(std::abs(r(0, d) - std::conj(want)), 1e-8 * std::abs(want)) << "lag " << d;
    }
}

TEST(Statistics, LinkFieldsConsistent) {
    SimConfig cfg;
    cfg.num_aps = 5;
    cfg.num_ues = 3;
    const Scenario s = generate_scenario(cfg, 2);
    const ChannelStatistics st = build_statistics(s, cfg, 2);
    for (const auto& link : st.links) {
        EXPECT_NEAR(link.beta_los + link.beta_nlos, link.beta, 1e-12 * link.beta);
        EXPECT_NEAR(link.h_bar.squaredNorm(), 2.0 * link.beta_los, 1e-10 * link.beta);
        EXPECT_NEAR(link.R.trace().real(), 2.0 * link.beta_nlos, 1e-7 * link.beta_nlos);
    }
    SimConfig ray = cfg;
    ray.fading = Fading::rayleigh;
    const ChannelStatistics sr = build_statistics(s, ray, 2);
    for (const auto& link : sr.links) EXPECT_EQ(link.h_bar.norm(), 0.0);
}

TEST(Sampling, PureLosIsDeterministic) {
    LinkStatistics link;
    link.h_bar = los_steering(0.3, 3, 1.0);
    link.R = CMat::Zero(3, 3);
    Rng rng = make_stream(1, "t");
    EXPECT_EQ(sample_channel(link, rng), link.h_bar);
}

TEST(Sampling, RayleighCovarianceMatchesR) {
    LinkStatistics link;
    link.h_bar = CVec::Zero(3);
    link.R = spatial_correlation(0.5, 0.3, 1.0, 3);
    Rng rng = make_stream(2, "t");
    const int n = 100000;
    CMat acc = CMat::Zero(3, 3);
    Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(3, 3);
    for (int t = 0; t < n; ++t) {
        const CVec h = sample_channel(link, rng);
        const CMat o = h * h.adjoint();
        acc += o;
        acc2 += o.cwiseAbs2();
    }
    const CMat mean = acc / static_cast<double>(n);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double var = acc2(i, j) / n - std::norm(mean(i, j));
            EXPECT_LT(std::abs(mean(i, j) - link.R(i, j)), 3.0 * std::sqrt(var / n) + 1e-12);
        }
    }
}

TEST(Sampling, FixedSeedSameDraw) {
    LinkStatistics link;
    link.h_bar = CVec::Zero(2);
    link.R = CMat::Identity(2, 2);
    Rng a = make_stream(4, "t");
    Rng b = make_stream(4, "t");
    EXPECT_EQ(sample_channel(link, a), sample_channel(link, b));
}
