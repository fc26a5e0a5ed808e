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

#include <gtest/gtest.h>

using namespace cfmimo;
using cfmimo::testing::make_system;
using cfmimo::testing::small_config;

namespace {

struct Stat {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double se() const { return std::sqrt(std::max(0.0, sum_sq / n - mean() * mean()) / n); }
};

void expect_within(const Stat& s, double want, double k = 3.0) {
    EXPECT_LT(std::abs(s.mean() - want), k * s.se()) << "mean " << s.mean() << " want " << want << " se " << s.se();
}

} // namespace

TEST(Pilots, DftBook) {
    EXPECT_EQ(dft_pilot_matrix(1)(0, 0), cplx(1.0, 0.0));
    const CMat p4 = dft_pilot_matrix(4);
    EXPECT_LT((p4.adjoint() * p4 - 4.0 * CMat::Identity(4, 4)).norm(), 1e-12);
    const CMat p10 = dft_pilot_matrix(10);
    for (Eigen::Index t = 0; t < 10; ++t) EXPECT_NEAR(p10.col(t).squaredNorm(), 10.0, 1e-12);
}

TEST(Pilots, CopilotSets) {
    const PilotPlan p = PilotPlan::make(2, {0, 1, 0, 1, 1});
    EXPECT_EQ(p.copilot[0], (IndexSet{0, 2}));
    EXPECT_EQ(p.copilot[4], (IndexSet{1, 3, 4}));
    EXPECT_THROW(PilotPlan::make(2, {0, 2}), ConfigError);
}

TEST(Psi, IdealSingleUe) {
    SimConfig cfg = small_config(1, 3, 1, 1);
    cfg.b_da = Resolution::ideal();
    cfg.b_ad = Resolution::ideal();
    auto s = make_system(cfg, 1, true);
    const auto& link = s->stats->at(0, 0);
    const CMat want = s->power.p_eff[0] * 1.0 * link.R + cfg.sigma2_mw() * CMat::Identity(3, 3);
    EXPECT_LT((s->ctx->psi[0] - want).norm(), 1e-12 * want.norm());
}

TEST(Psi, TwoCopilotsDirectFormula) {
    SimConfig cfg = small_config(2, 2, 3, 2);
    auto s = make_system(cfg, 3, true);
    const auto& c = *s->ctx;
    const auto q = cfg.quantizer();
    const double a2 = (1 - q.rho_ad) * (1 - q.rho_ad);
    for (std::size_t l = 0; l < 2; ++l) {
        CMat g = CMat::Zero(2, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& li = s->stats->at(i, l);
            g += c.p[i] * (li.h_bar * li.h_bar.adjoint() + li.R);
        }
        CMat cn = (a2 * q.rho_da / (1 - q.rho_da)) * g;
        for (int r = 0; r < 2; ++r) cn(r, r) += q.rho_ad * (1 - q.rho_ad) / (1 - q.rho_da) * g(r, r) + (1 - q.rho_ad) * c.sigma2;
        const CMat want = cn + a2 * 2.0 * (c.p[0] * s->stats->at(0, l).R + c.p[2] * s->stats->at(2, l).R);
        EXPECT_LT((c.psi[0 * 2 + l] - want).norm(), 1e-12 * want.norm());
        EXPECT_GE(min_eigenvalue(c.psi[l] - c.cn[l]), -1e-12 * c.psi[l].norm());
        EXPECT_TRUE(is_hermitian_psd(c.cn[l], 1e-12, 1e-9));
    }
}

TEST(Estimate, PureLosLinkReturnsMean) {
    SimConfig cfg = small_config(1, 2, 1, 1);
    auto s = make_system(cfg, 2, true);
    s->stats->at(0, 0).R = CMat::Zero(2, 2);
    s->rebuild_context();
    const CVec z = CVec::Constant(2, cplx(0.3, -0.1));
    EXPECT_LT((estimate_local(z, 0, 0, *s->ctx) - s->stats->at(0, 0).h_bar).norm(), 1e-15);
}

class JointSampling : public ::testing::TestWithParam<PilotNoise> {};

TEST_P(JointSampling, EstimateCovarianceAndOrthogonality) {
    SimConfig cfg = small_config(2, 2, 4, 2);
    auto s = make_system(cfg, 5, true);
    const auto& c = *s->ctx;
    const std::size_t k = 0, l = 1;
    const CMat& chat = c.chat[k * c.L + l];
    Stat tr, off_re, off_im, cross_re, cross_im;
    Rng rng = make_stream(17, "t");
    for (int t = 0; t < 100000; ++t) {
        const JointSample js = sample_joint(c, GetParam(), rng);
        const CVec hw = js.hhat.col(static_cast<Eigen::Index>(k * c.L + l)) - c.link(k, l).h_bar;
        const CVec err = js.h.col(static_cast<Eigen::Index>(k * c.L + l)) - js.hhat.col(static_cast<Eigen::Index>(k * c.L + l));
        tr.add(hw.squaredNorm() / chat.trace().real());
        const cplx o = hw(0) * std::conj(hw(1));
        off_re.add(o.real());
        off_im.add(o.imag());
        const cplx x = err.dot(hw);
        cross_re.add(x.real());
        cross_im.add(x.imag());
    }
    expect_within(tr, 1.0);
    expect_within(off_re, chat(0, 1).real());
    expect_within(off_im, chat(0, 1).imag());
    expect_within(cross_re, 0.0);
    expect_within(cross_im, 0.0);
}

TEST_P(JointSampling, CopilotCrossMoment) {
    SimConfig cfg = small_config(2, 2, 4, 2);
    auto s = make_system(cfg, 7, true);
    const auto& c = *s->ctx;
    const std::size_t k = 0, i = 2, l = 0;
    ASSERT_TRUE(s->pilots.share_pilot(i, k));
    const cplx want = c.adc() * c.adc() * 2.0 * std::sqrt(c.p[k] * c.p[i]) *
                      (c.link(i, l).R * c.psi_inv_of(k, l) * c.link(k, l).R).trace();
    Stat re, im, orth;
    Rng rng = make_stream(19, "t");
    for (int t = 0; t < 100000; ++t) {
        const JointSample js = sample_joint(c, GetParam(), rng);
        const CVec wk = js.hhat.col(static_cast<Eigen::Index>(k * c.L + l)) - c.link(k, l).h_bar;
        const CVec wi = js.hhat.col(static_cast<Eigen::Index>(i * c.L + l)) - c.link(i, l).h_bar;
        const CVec w1 = js.hhat.col(static_cast<Eigen::Index>(1 * c.L + l)) - c.link(1, l).h_bar;
        const cplx x = wk.dot(wi) / std::abs(want);
        re.add(x.real());
        im.add(x.imag());
        orth.add(wk.dot(w1).real() / std::abs(want));
    }
    expect_within(re, want.real() / std::abs(want));
    expect_within(im, want.imag() / std::abs(want));
    expect_within(orth, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Modes, JointSampling, ::testing::Values(PilotNoise::gaussian, PilotNoise::constructive));

TEST(Estimate, IdealRayleighReducesToStandardMmse) {
    SimConfig cfg = small_config(1, 3, 2, 1);
    cfg.b_da = Resolution::ideal();
    cfg.b_ad = Resolution::ideal();
    cfg.fading = Fading::rayleigh;
    auto s = make_system(cfg, 8, true);
    const auto& c = *s->ctx;
    const double tau = 1.0;
    const CMat& r0 = c.link(0, 0).R;
    const CMat psi = tau * (c.p[0] * r0 + c.p[1] * c.link(1, 0).R) + c.sigma2 * CMat::Identity(3, 3);
    const CMat want = c.p[0] * tau * r0 * psi.inverse() * r0;
    EXPECT_LT((c.chat[0] - want).norm(), 1e-10 * want.norm());
    const CVec z = CVec::Constant(3, cplx(1e-5, 2e-6));
    const CVec est = std::sqrt(c.p[0] * tau) * r0 * psi.inverse() * z;
    EXPECT_LT((estimate_local(z, 0, 0, c) - est).norm(), 1e-10 * est.norm());
}

TEST(Stacking, SingleApAndBlockDiagonal) {
    SimConfig cfg = small_config(2, 2, 2, 2);
    auto s = make_system(cfg, 9, true);
    const auto& c = *s->ctx;
    CMat cols = CMat::Random(2, 4);
    const CVec v = stack_centralized(cols, 1, 2);
    EXPECT_EQ(v.segment(0, 2), cols.col(2));
    EXPECT_EQ(v.segment(2, 2), cols.col(3));
    EXPECT_EQ(stack_centralized(cols, 1, 1 * 2).size(), 4);
    const CMat b = stacked_chat(c, 0);
    EXPECT_EQ(b.block(0, 0, 2, 2), c.chat[0]);
    EXPECT_EQ(b.block(2, 2, 2, 2), c.chat[1]);
    EXPECT_EQ(b.block(0, 2, 2, 2).norm(), 0.0);
    const CVec single = stack_centralized(std::vector<CVec>{c.link(0, 0).h_bar});
    EXPECT_EQ(single, c.link(0, 0).h_bar);
}

TEST(Stacking, SampledStackCovarianceIsBlockDiagonal) {
    SimConfig cfg = small_config(2, 2, 3, 2);
    auto s = make_system(cfg, 10, true);
    const auto& c = *s->ctx;
    const CMat want = stacked_chat(c, 1);
    const CVec mean = stacked_hbar(c, 1);
    Stat diag0, cross;
    Rng rng = make_stream(23, "t");
    for (int t = 0; t < 100000; ++t) {
        const CMat hhat = sample_estimates(c, rng);
        const CVec v = stack_centralized(hhat, 1, c.L) - mean;
        diag0.add(std::norm(v(0)) / want(0, 0).real());
        cross.add((v(0) * std::conj(v(2))).real() / want(0, 0).real());
    }
    expect_within(diag0, 1.0);
    expect_within(cross, 0.0);
}
