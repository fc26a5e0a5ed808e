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

#ifndef CFMIMO_ESTIMATION_HPP
#define CFMIMO_ESTIMATION_HPP

#include "cfmimo/channel_model.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/plans.hpp"
#include "cfmimo/quantization.hpp"
#include "cfmimo/rng.hpp"

#include <vector>

namespace cfmimo {

/// AP load G_l = Hbar_l P Hbar_l^H + sum_i p_i R_il with effective powers.
inline CMat ap_load(const ChannelStatistics& st, std::size_t l, const std::vector<double>& p_eff) {
    const auto n = static_cast<Eigen::Index>(st.N);
    CMat g = CMat::Zero(n, n);
    for (std::size_t i = 0; i < st.K; ++i) {
        const auto& link = st.at(i, l);
        g.noalias() += p_eff[i] * (link.h_bar * link.h_bar.adjoint() + link.R);
    }
    return g;
}

inline CMat received_noise_covariance(std::size_t l, const ChannelStatistics& st, const PowerPlan& w,
                                      const QuantizerConfig& q, double sigma2) {
    return received_noise_covariance(ap_load(st, l, w.p_eff), sigma2, q);
}

/// Psi = (1-rho_ad)^2 sum_{i on pilot t} p_i tau R_il + C_n,l.
inline CMat psi_matrix(std::size_t t, std::size_t l, const ChannelStatistics& st, const PilotPlan& pp,
                       const PowerPlan& w, const QuantizerConfig& q, const CMat& cn) {
    const double a2 = (1.0 - q.rho_ad) * (1.0 - q.rho_ad);
    CMat psi = cn;
    for (std::size_t i = 0; i < st.K; ++i) {
        if (pp.pilot[i] == t) psi.noalias() += a2 * w.p_eff[i] * static_cast<double>(pp.tau) * st.at(i, l).R;
    }
    return psi;
}

/// Everything the estimator and the closed forms need, precomputed once
/// per (statistics, pilots, powers, hardware). Holds references to the
/// statistics and pilot plan, which must outlive it.
struct EstimationContext {
    const ChannelStatistics* stats = nullptr;
    const PilotPlan* pilots = nullptr;
    QuantizerConfig q;
    double sigma2 = 0.0;
    std::size_t K = 0, L = 0, N = 0, tau = 0;
    std::vector<double> p;

    std::vector<CMat> load;
    std::vector<CMat> cn;
    std::vector<CMat> cx;
    std::vector<CMat> cn_sqrt;
    // Indexed t * L + l.
    std::vector<CMat> psi;
    std::vector<CMat> psi_inv;
    std::vector<CMat> psi_sqrt;
    // Indexed k * L + l.
    std::vector<CMat> r_sqrt;
    std::vector<CMat> gain;
    std::vector<CMat> chat;

    const LinkStatistics& link(std::size_t k, std::size_t l) const { return stats->at(k, l); }
    const CMat& psi_of(std::size_t k, std::size_t l) const { return psi[pilots->pilot[k] * L + l]; }
    const CMat& psi_inv_of(std::size_t k, std::size_t l) const { return psi_inv[pilots->pilot[k] * L + l]; }
    double adc() const { return 1.0 - q.rho_ad; }
};

inline CMat hermitian_inverse(const CMat& a) {
    const CMat h = hermitian_part(a);
    Eigen::LLT<CMat> llt(h);
    if (llt.info() != Eigen::Success) throw NumericalError("Psi is not positive definite");
    return hermitian_part(llt.solve(CMat::Identity(h.rows(), h.cols())));
}

inline EstimationContext build_context(const ChannelStatistics& st, const PilotPlan& pp, const PowerPlan& w,
                                       const QuantizerConfig& q, double sigma2) {
    if (pp.num_ues() != st.K) throw ConfigError("pilot plan: size does not match K");
    if (w.p_eff.size() != st.K) throw ConfigError("power plan: size does not match K");
    EstimationContext c;
    c.stats = &st;
    c.pilots = &pp;
    c.q = q;
    c.sigma2 = sigma2;
    c.K = st.K;
    c.L = st.L;
    c.N = st.N;
    c.tau = pp.tau;
    c.p = w.p_eff;
    for (std::size_t l = 0; l < st.L; ++l) {
        c.load.push_back(ap_load(st, l, c.p));
        c.cn.push_back(received_noise_covariance(c.load.back(), sigma2, q));
        c.cx.push_back(adc_thermal_covariance(c.load.back(), sigma2, q));
        c.cn_sqrt.push_back(psd_sqrt_factor(c.cn.back()));
    }
    c.psi.resize(pp.tau * st.L);
    c.psi_inv.resize(pp.tau * st.L);
    c.psi_sqrt.resize(pp.tau * st.L);
    for (std::size_t t = 0; t < pp.tau; ++t) {
        for (std::size_t l = 0; l < st.L; ++l) {
            const std::size_t idx = t * st.L + l;
            c.psi[idx] = psi_matrix(t, l, st, pp, w, q, c.cn[l]);
            c.psi_inv[idx] = hermitian_inverse(c.psi[idx]);
            c.psi_sqrt[idx] = psd_sqrt_factor(c.psi[idx]);
        }
    }
    const double tau = static_cast<double>(pp.tau);
    c.r_sqrt.resize(st.K * st.L);
    c.gain.resize(st.K * st.L);
    c.chat.resize(st.K * st.L);
    for (std::size_t k = 0; k < st.K; ++k) {
        for (std::size_t l = 0; l < st.L; ++l) {
            const auto& link = st.at(k, l);
            const std::size_t idx = k * st.L + l;
            c.r_sqrt[idx] = psd_sqrt_factor(link.R);
            c.gain[idx] = c.adc() * std::sqrt(c.p[k] * tau) * link.R * c.psi_inv_of(k, l);
            c.chat[idx] = hermitian_part(c.adc() * c.adc() * c.p[k] * tau * link.R * c.psi_inv_of(k, l) * link.R);
        }
    }
    return c;
}

/// hhat_kl = hbar_kl + (1-rho_ad) sqrt(p_k tau) R_kl Psi^{-1} z^w.
inline CVec estimate_local(const CVec& z_w, std::size_t k, std::size_t l, const EstimationContext& c) {
    return c.link(k, l).h_bar + c.gain[k * c.L + l] * z_w;
}

/// One joint draw. Column k * L + l of `h` and `hhat` holds the true
/// channel and its estimate for UE k at AP l.
struct JointSample {
    CMat h;
    CMat hhat;
    CVec h_col(std::size_t k, std::size_t l, std::size_t L) const { return h.col(static_cast<Eigen::Index>(k * L + l)); }
};

namespace detail {

inline void fill_estimates(const EstimationContext& c, const CMat& zw, CMat& hhat) {
    for (std::size_t k = 0; k < c.K; ++k) {
        for (std::size_t l = 0; l < c.L; ++l) {
            const auto idx = static_cast<Eigen::Index>(k * c.L + l);
            hhat.col(idx).noalias() = c.gain[idx] * zw.col(static_cast<Eigen::Index>(c.pilots->pilot[k] * c.L + l));
            hhat.col(idx) += c.link(k, l).h_bar;
        }
    }
}

} // namespace detail

/// Draws NLOS channels and pilot-phase noise, forms the LOS-stripped
/// observation for every (pilot, AP) and returns consistent true and
/// estimated channels. UEs sharing a pilot share the observation.
inline JointSample sample_joint(const EstimationContext& c, PilotNoise mode, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(c.N);
    const double tau = static_cast<double>(c.tau);
    const double a = c.adc();
    JointSample s;
    s.h.resize(n, static_cast<Eigen::Index>(c.K * c.L));
    s.hhat.resize(n, static_cast<Eigen::Index>(c.K * c.L));
    CMat hw(n, static_cast<Eigen::Index>(c.K * c.L));
    for (std::size_t idx = 0; idx < c.K * c.L; ++idx) {
        const CVec w = complex_normal_vector(rng, n);
        hw.col(static_cast<Eigen::Index>(idx)).noalias() = c.r_sqrt[idx] * w;
    }
    for (std::size_t k = 0; k < c.K; ++k) {
        for (std::size_t l = 0; l < c.L; ++l) {
            const auto idx = static_cast<Eigen::Index>(k * c.L + l);
            s.h.col(idx) = c.link(k, l).h_bar + hw.col(idx);
        }
    }

    CMat zw = CMat::Zero(n, static_cast<Eigen::Index>(c.tau * c.L));
    if (mode == PilotNoise::gaussian) {
        for (std::size_t t = 0; t < c.tau; ++t) {
            for (std::size_t l = 0; l < c.L; ++l) {
                const CVec w = complex_normal_vector(rng, n);
                auto z = zw.col(static_cast<Eigen::Index>(t * c.L + l));
                z.noalias() = c.cn_sqrt[l] * w;
                for (std::size_t i = 0; i < c.K; ++i) {
                    if (c.pilots->pilot[i] == t) z += a * std::sqrt(c.p[i] * tau) * hw.col(static_cast<Eigen::Index>(i * c.L + l));
                }
            }
        }
    } else {
        // Symbol-level construction: per-UE DAC noise, thermal noise and
        // ADC noise on the N x tau received pilot matrix.
        const auto taun = static_cast<Eigen::Index>(c.tau);
        const CMat& phi = c.pilots->phi;
        std::vector<CVec> nda(c.K);
        const double rho_da = c.q.rho_da;
        for (std::size_t i = 0; i < c.K; ++i) {
            const double p_tx = c.p[i] / (1.0 - rho_da);
            nda[i] = std::sqrt(rho_da * p_tx) * complex_normal_vector(rng, taun);
        }
        const double rho_ad = c.q.rho_ad;
        for (std::size_t l = 0; l < c.L; ++l) {
            CMat x = CMat::Zero(n, taun);
            for (std::size_t i = 0; i < c.K; ++i) {
                const CVec hcol = s.h.col(static_cast<Eigen::Index>(i * c.L + l));
                const CVec sym = std::sqrt(c.p[i]) * phi.col(static_cast<Eigen::Index>(c.pilots->pilot[i])) + nda[i];
                x.noalias() += hcol * sym.transpose();
            }
            for (Eigen::Index col = 0; col < taun; ++col) x.col(col) += std::sqrt(c.sigma2) * complex_normal_vector(rng, n);
            CMat z_mat = a * x;
            for (Eigen::Index r = 0; r < n; ++r) {
                const double ex = c.load[l](r, r).real() / (1.0 - rho_da) + c.sigma2;
                const double sd = std::sqrt(rho_ad * (1.0 - rho_ad) * ex);
                for (Eigen::Index col = 0; col < taun; ++col) z_mat(r, col) += sd * complex_normal(rng);
            }
            for (std::size_t t = 0; t < c.tau; ++t) {
                auto z = zw.col(static_cast<Eigen::Index>(t * c.L + l));
                z.noalias() = z_mat * phi.col(static_cast<Eigen::Index>(t)).conjugate() / std::sqrt(tau);
                for (std::size_t i = 0; i < c.K; ++i) {
                    if (c.pilots->pilot[i] == t) z -= a * std::sqrt(c.p[i] * tau) * c.link(i, l).h_bar;
                }
            }
        }
    }
    detail::fill_estimates(c, zw, s.hhat);
    return s;
}

/// Draws estimates only: z^w ~ CN(0, Psi) per (pilot, AP).
inline CMat sample_estimates(const EstimationContext& c, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(c.N);
    CMat zw(n, static_cast<Eigen::Index>(c.tau * c.L));
    for (std::size_t idx = 0; idx < c.tau * c.L; ++idx) {
        const CVec w = complex_normal_vector(rng, n);
        zw.col(static_cast<Eigen::Index>(idx)).noalias() = c.psi_sqrt[idx] * w;
    }
    CMat hhat(n, static_cast<Eigen::Index>(c.K * c.L));
    detail::fill_estimates(c, zw, hhat);
    return hhat;
}

/// Stacks UE k's per-AP columns into one LN vector.
inline CVec stack_centralized(const CMat& cols, std::size_t k, std::size_t L) {
    const Eigen::Index n = cols.rows();
    CVec out(n * static_cast<Eigen::Index>(L));
    for (std::size_t l = 0; l < L; ++l) {
        out.segment(static_cast<Eigen::Index>(l) * n, n) = cols.col(static_cast<Eigen::Index>(k * L + l));
    }
    return out;
}

inline CVec stack_centralized(const std::vector<CVec>& per_ap) {
    Eigen::Index total = 0;
    for (const auto& v : per_ap) total += v.size();
    CVec out(total);
    Eigen::Index off = 0;
    for (const auto& v : per_ap) {
        out.segment(off, v.size()) = v;
        off += v.size();
    }
    return out;
}

/// Block-diagonal C_hhat of UE k over all L APs.
inline CMat stacked_chat(const EstimationContext& c, std::size_t k) {
    std::vector<CMat> blocks;
    for (std::size_t l = 0; l < c.L; ++l) blocks.push_back(c.chat[k * c.L + l]);
    return block_diagonal(blocks);
}

inline CVec stacked_hbar(const EstimationContext& c, std::size_t k) {
    std::vector<CVec> parts;
    for (std::size_t l = 0; l < c.L; ++l) parts.push_back(c.link(k, l).h_bar);
    return stack_centralized(parts);
}

} // namespace cfmimo

#endif // CFMIMO_ESTIMATION_HPP
