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

#include "support.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <gtest/gtest.h>

using namespace cfmimo;
using cfmimo::testing::make_system;
using cfmimo::testing::small_config;

TEST(Kernel, RayleighNonCopilotDistinctApsVanishes) {
    SimConfig cfg = small_config(2, 2, 4, 2);
    cfg.fading = Fading::rayleigh;
    auto s = make_system(cfg, 1, true);
    EXPECT_EQ(std::abs(theorem1_kernel(0, 1, 0, 1, *s->ctx)), 0.0);
}

TEST(Kernel, NonCopilotDistinctApsIsLosProduct) {
    SimConfig cfg = small_config(2, 2, 4, 2);
    auto s = make_system(cfg, 2, true);
    const auto& c = *s->ctx;
    const cplx want = c.link(0, 0).h_bar.dot(c.link(1, 0).h_bar) * c.link(1, 1).h_bar.dot(c.link(0, 1).h_bar);
    EXPECT_LT(std::abs(theorem1_kernel(0, 1, 0, 1, c) - want), 1e-12 * std::abs(want));
}

TEST(ClosedForm, MaxEqualsWeightedWithOptimalWeights) {
    SimConfig cfg = small_config(4, 2, 6, 3);
    auto s = make_system(cfg, 3);
    const auto& c = *s->ctx;
    for (std::size_t k = 0; k < c.K; ++k) {
        const LsfdIngredients g = build_ingredients(k, c, s->cluster);
        const double best = se_distributed_closed_max(g, c, cfg.prelog());
        const CVec a = lsfd_mr(g);
        EXPECT_NEAR(se_distributed_closed(g, a, c, cfg.prelog()), best, 1e-10 * best);
        EXPECT_NEAR(se_distributed_closed(g, cplx(5.0, 0.0) * a, c, cfg.prelog()), best, 1e-10 * best);
        EXPECT_LE(se_distributed_closed(g, l2_lsfd(g.size()), c, cfg.prelog()), best * (1 + 1e-12));
        EXPECT_LE(se_distributed_closed(g, p_lsfd(g), c, cfg.prelog()), best * (1 + 1e-12));
    }
}

TEST(ClosedForm, SingleApSingleUeLosHandEvaluation) {
    SimConfig cfg = small_config(1, 2, 1, 1);
    cfg.b_da = Resolution::ideal();
    cfg.b_ad = Resolution::ideal();
    auto s = make_system(cfg, 4, true);
    s->stats->at(0, 0).R = CMat::Zero(2, 2);
    s->rebuild_context();
    const auto& c = *s->ctx;
    const LsfdIngredients g = build_ingredients(0, c, s->cluster);
    const double h2 = c.link(0, 0).h_bar.squaredNorm();
    const double sinr = c.p[0] * h2 * h2 / (c.sigma2 * h2);
    EXPECT_NEAR(se_distributed_closed_max(g, c, cfg.prelog()), cfg.prelog() * std::log2(1 + sinr), 1e-9);
}

TEST(ClosedForm, ZeroPowerGivesZero) {
    SimConfig cfg = small_config(3, 2, 4, 2);
    auto s = make_system(cfg, 5, true);
    s->power.p_eff[1] = 0.0;
    s->power.p_tx[1] = 0.0;
    s->rebuild_context();
    const auto& c = *s->ctx;
    EXPECT_EQ(se_distributed_closed_all(c, s->cluster, Weighting::lsfd, cfg.prelog()).se[1], 0.0);
    McOptions opt;
    opt.trials = 200;
    EXPECT_EQ(se_distributed_mc(c, s->cluster, Detector::l_mmse, Weighting::lsfd, cfg.prelog(), opt).se[1], 0.0);
    EXPECT_EQ(se_centralized_mc_exact(c, s->cluster, Detector::mmse, cfg.prelog(), opt).se[1], 0.0);
}

TEST(Distributed, MonteCarloMatchesClosedForm) {
    SimConfig cfg = small_config(4, 2, 6, 3);
    auto s = make_system(cfg, 6);
    const auto& c = *s->ctx;
    McOptions opt;
    opt.trials = 20000;
    opt.seed = 3;
    const SEReport closed = se_distributed_closed_all(c, s->cluster, Weighting::lsfd, cfg.prelog());
    const SEReport mc = se_distributed_mc(c, s->cluster, Detector::mrc, Weighting::lsfd, cfg.prelog(), opt);
    for (std::size_t k = 0; k < c.K; ++k) EXPECT_LT(std::abs(closed.se[k] - mc.se[k]), 0.02 * closed.se[k]) << "UE " << k;
    const SEReport pclosed = se_distributed_closed_all(c, s->cluster, Weighting::p_lsfd, cfg.prelog());
    const SEReport pmc = se_distributed_mc(c, s->cluster, Detector::mrc, Weighting::p_lsfd, cfg.prelog(), opt);
    for (std::size_t k = 0; k < c.K; ++k) EXPECT_LT(std::abs(pclosed.se[k] - pmc.se[k]), 0.02 * pclosed.se[k]) << "UE " << k;
}

class LocalMmseVsMrc : public ::testing::TestWithParam<int> {};

// Per-UE dominance where the distortion is not carried by a strong LOS path.
TEST_P(LocalMmseVsMrc, PerUeNotWorse) {
    SimConfig cfg = small_config(6, 4, 6, 3);
    if (GetParam() == 0) cfg.b_da = Resolution::ideal();
    if (GetParam() == 1) cfg.fading = Fading::rayleigh;
    auto s = make_system(cfg, 7);
    McOptions opt;
    opt.trials = 2000;
    const auto& c = *s->ctx;
    const SEReport mrc = se_distributed_mc(c, s->cluster, Detector::mrc, Weighting::lsfd, cfg.prelog(), opt);
    const SEReport mmse = se_distributed_mc(c, s->cluster, Detector::l_mmse, Weighting::lsfd, cfg.prelog(), opt);
    for (std::size_t k = 0; k < c.K; ++k) EXPECT_GE(mmse.se[k], mrc.se[k] - 3.0 * (mmse.std_err[k] + mrc.std_err[k])) << "UE " << k;
}

INSTANTIATE_TEST_SUITE_P(Hardware, LocalMmseVsMrc, ::testing::Values(0, 1));

TEST(Distributed, LocalMmseBeatsMrcInAggregate) {
    SimConfig cfg = small_config(6, 4, 6, 3);
    auto s = make_system(cfg, 7);
    McOptions opt;
    opt.trials = 2000;
    const auto& c = *s->ctx;
    const SEReport mrc = se_distributed_mc(c, s->cluster, Detector::mrc, Weighting::lsfd, cfg.prelog(), opt);
    const SEReport mmse = se_distributed_mc(c, s->cluster, Detector::l_mmse, Weighting::lsfd, cfg.prelog(), opt);
    EXPECT_GT(mmse.sum(), mrc.sum());
    EXPECT_GT(median_of(mmse.se), median_of(mrc.se));
}

TEST(Distributed, ReproducibleAcrossWorkers) {
    SimConfig cfg = small_config(4, 2, 5, 2);
    auto s = make_system(cfg, 8);
    McOptions a;
    a.trials = 600;
    a.workers = 1;
    McOptions b = a;
    b.workers = 4;
    const auto& c = *s->ctx;
    const SEReport x = se_distributed_mc(c, s->cluster, Detector::lp_mmse, Weighting::p_lsfd, cfg.prelog(), a);
    const SEReport y = se_distributed_mc(c, s->cluster, Detector::lp_mmse, Weighting::p_lsfd, cfg.prelog(), b);
    EXPECT_EQ(x.se, y.se);
    EXPECT_EQ(x.std_err, y.std_err);
    const SEReport u = se_centralized_mc_exact(c, s->cluster, Detector::p_mmse, cfg.prelog(), a);
    const SEReport v = se_centralized_mc_exact(c, s->cluster, Detector::p_mmse, cfg.prelog(), b);
    EXPECT_EQ(u.se, v.se);
}

TEST(Centralized, MmseNotWorseThanMrc) {
    SimConfig cfg = small_config(6, 2, 6, 3);
    auto s = make_system(cfg, 9);
    McOptions opt;
    opt.trials = 2000;
    const auto& c = *s->ctx;
    const SEReport mrc = se_centralized_mc_exact(c, s->cluster, Detector::mrc, cfg.prelog(), opt);
    const SEReport mmse = se_centralized_mc_exact(c, s->cluster, Detector::mmse, cfg.prelog(), opt);
    for (std::size_t k = 0; k < c.K; ++k) EXPECT_GE(mmse.se[k], mrc.se[k]) << "UE " << k;
}

TEST(Centralized, SingleUeRayleighScalarExpectation) {
    SimConfig cfg = small_config(1, 1, 1, 1);
    cfg.b_da = Resolution::ideal();
    cfg.b_ad = Resolution::ideal();
    cfg.fading = Fading::rayleigh;
    auto s = make_system(cfg, 10, true);
    const auto& c = *s->ctx;
    const double beta = c.link(0, 0).R(0, 0).real();
    const double gamma = c.chat[0](0, 0).real();
    // |hhat|^2 ~ gamma Exp(1); E[log2(1 + s X)] = exp(1/s) E1(1/s) / ln 2.
    const double snr = c.p[0] * gamma / (c.p[0] * (beta - gamma) + c.sigma2);
    const double want = cfg.prelog() * std::exp(1.0 / snr) * boost::math::expint(1, 1.0 / snr) / std::log(2.0);
    McOptions opt;
    opt.trials = 100000;
    const SEReport r = se_centralized_mc_exact(c, s->cluster, Detector::mrc, cfg.prelog(), opt);
    EXPECT_LT(std::abs(r.se[0] - want), 3.0 * r.std_err[0]);
}

TEST(Centralized, RayleighLosTermsVanish) {
    SimConfig cfg = small_config(3, 2, 4, 2);
    cfg.fading = Fading::rayleigh;
    auto s = make_system(cfg, 11, true);
    const auto& c = *s->ctx;
    const CentralizedTerms t = centralized_terms(0, c, s->cluster);
    for (std::size_t i = 0; i < c.K; ++i) {
        if (!s->pilots.share_pilot(i, 0)) {
            EXPECT_EQ(t.fe[i], 0.0);
        } else {
            cplx trsum = 0.0;
            for (std::size_t l : s->cluster.serving[0]) trsum += (c.link(i, l).R * c.psi_inv_of(0, l) * c.link(0, l).R).trace();
            const double a2 = c.adc() * c.adc();
            const double want = a2 * a2 * 4.0 * c.p[0] * c.p[i] * std::norm(trsum);
            if (i != 0) EXPECT_NEAR(t.fe[i], want, 1e-9 * want);
        }
        double fg = 0.0;
        for (std::size_t l : s->cluster.serving[0]) fg += (c.chat[0 * c.L + l] * c.chat[i * c.L + l]).trace().real();
        EXPECT_NEAR(t.fg[i], fg, 1e-9 * fg);
    }
}

TEST(Centralized, ClosedFormNearExact) {
    SimConfig cfg = small_config(4, 2, 6, 3);
    auto s = make_system(cfg, 12);
    const auto& c = *s->ctx;
    McOptions opt;
    opt.trials = 20000;
    const SEReport exact = se_centralized_mc_exact(c, s->cluster, Detector::mrc, cfg.prelog(), opt);
    const SEReport approx = se_centralized_closed_all(c, s->cluster, cfg.prelog());
    EXPECT_LT(std::abs(approx.sum() - exact.sum()), 0.05 * exact.sum());
}

TEST(Jackknife, ConstantStatisticHasZeroError) {
    std::vector<double> blocks(10, 2.0);
    EXPECT_EQ(detail::jackknife_stderr(blocks, 20.0, [](double x) { return x; }), 0.0);
}
