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

#ifndef CFMIMO_DETECTORS_HPP
#define CFMIMO_DETECTORS_HPP

#include "cfmimo/config.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/lsfd.hpp"
#include "cfmimo/plans.hpp"

#include <vector>

namespace cfmimo {

/// UEs whose instantaneous estimates enter AP l's system matrix.
inline IndexSet local_estimate_set(Detector d, std::size_t l, const ClusterPlan& c) {
    switch (d) {
    case Detector::mrc: return {};
    case Detector::l_mmse: return all_ues(c.K);
    case Detector::lp_mmse: return c.served_primary[l];
    case Detector::lp_mmse_original: return c.served[l];
    default: throw ConfigError("detector: " + to_string(d) + " is not a local detector");
    }
}

/// UEs whose instantaneous estimates enter UE k's centralized system matrix.
inline IndexSet central_estimate_set(Detector d, std::size_t k, const ClusterPlan& c) {
    switch (d) {
    case Detector::mrc: return {};
    case Detector::mmse: return all_ues(c.K);
    case Detector::p_mmse: return set_intersection(c.overlap[k], c.served[c.primary[k]]);
    case Detector::p_mmse_original: return c.overlap[k];
    default: throw ConfigError("detector: " + to_string(d) + " is not a centralized detector");
    }
}

/// Hardware-noise part restricted to the UE set `users`:
/// (1-rho_ad) sigma2 I + (1-rho_ad)^2 rho_da/(1-rho_da) S + rho_ad(1-rho_ad)/(1-rho_da) diag(S),
/// S = sum_{i in users} p_i (hbar hbar^H + R). With all UEs this is C_n,l.
inline CMat restricted_noise(std::size_t l, const IndexSet& users, const EstimationContext& c) {
    const auto n = static_cast<Eigen::Index>(c.N);
    CMat s = CMat::Zero(n, n);
    for (std::size_t i : users) {
        const auto& link = c.link(i, l);
        s.noalias() += c.p[i] * (link.h_bar * link.h_bar.adjoint() + link.R);
    }
    return received_noise_covariance(s, c.sigma2, c.q);
}

/// v = MRC: the estimate itself.
inline CVec mrc_local(const CVec& hhat) { return hhat; }

/// AP l's combining matrix for the local MMSE family. UEs in `est` enter
/// through hhat hhat^H + R - C_hhat, UEs in `stat` through hbar hbar^H + R,
/// and the hardware noise is restricted to `noise`.
inline CMat local_system_matrix(std::size_t l, const IndexSet& est, const IndexSet& stat, const IndexSet& noise,
                                const CMat& hhat, const EstimationContext& c) {
    const double a2 = c.adc() * c.adc();
    CMat m = noise.size() == c.K ? c.cn[l] : restricted_noise(l, noise, c);
    for (std::size_t i : est) {
        const CVec h = hhat.col(static_cast<Eigen::Index>(i * c.L + l));
        m.noalias() += a2 * c.p[i] * (h * h.adjoint() + c.link(i, l).R - c.chat[i * c.L + l]);
    }
    for (std::size_t i : stat) {
        const auto& link = c.link(i, l);
        m.noalias() += a2 * c.p[i] * (link.h_bar * link.h_bar.adjoint() + link.R);
    }
    return hermitian_part(m);
}

inline CMat local_system_matrix(Detector d, std::size_t l, const CMat& hhat, const EstimationContext& c,
                                const ClusterPlan& cl) {
    switch (d) {
    case Detector::l_mmse: return local_system_matrix(l, all_ues(c.K), {}, all_ues(c.K), hhat, c);
    case Detector::lp_mmse:
        return local_system_matrix(l, cl.served_primary[l], cl.served_secondary[l], cl.served[l], hhat, c);
    case Detector::lp_mmse_original: return local_system_matrix(l, cl.served[l], {}, cl.served[l], hhat, c);
    default: throw ConfigError("detector: " + to_string(d) + " has no local system matrix");
    }
}

inline CVec l_mmse_local(std::size_t k, std::size_t l, const CMat& hhat, const EstimationContext& c) {
    const CMat m = local_system_matrix(l, all_ues(c.K), {}, all_ues(c.K), hhat, c);
    return hermitian_solve(m, hhat.col(static_cast<Eigen::Index>(k * c.L + l)));
}

inline CVec lp_mmse_local(std::size_t k, std::size_t l, const CMat& hhat, const EstimationContext& c,
                          const ClusterPlan& cl) {
    if (!contains(cl.served[l], k)) throw ConfigError("cluster: UE " + std::to_string(k) + " not served by AP " + std::to_string(l));
    const CMat m = local_system_matrix(Detector::lp_mmse, l, hhat, c, cl);
    return hermitian_solve(m, hhat.col(static_cast<Eigen::Index>(k * c.L + l)));
}

/// Local combiners for every served (k, l) pair in one pass; column
/// k * L + l, zero where AP l does not serve UE k.
inline CMat local_combiners(Detector d, const CMat& hhat, const EstimationContext& c, const ClusterPlan& cl) {
    const auto n = static_cast<Eigen::Index>(c.N);
    CMat v = CMat::Zero(n, static_cast<Eigen::Index>(c.K * c.L));
    for (std::size_t l = 0; l < c.L; ++l) {
        if (cl.served[l].empty()) continue;
        if (d == Detector::mrc) {
            for (std::size_t k : cl.served[l]) v.col(static_cast<Eigen::Index>(k * c.L + l)) = hhat.col(static_cast<Eigen::Index>(k * c.L + l));
            continue;
        }
        const CMat m = local_system_matrix(d, l, hhat, c, cl);
        Eigen::LLT<CMat> llt(m);
        for (std::size_t k : cl.served[l]) {
            const CVec b = hhat.col(static_cast<Eigen::Index>(k * c.L + l));
            v.col(static_cast<Eigen::Index>(k * c.L + l)) = llt.info() == Eigen::Success ? CVec(llt.solve(b)) : hermitian_solve(m, b);
        }
    }
    return v;
}

/// Concatenation of UE i's per-AP columns over the AP set `aps`.
inline CVec gather_blocks(const CMat& cols, std::size_t i, const IndexSet& aps, std::size_t L) {
    const Eigen::Index n = cols.rows();
    CVec out(n * static_cast<Eigen::Index>(aps.size()));
    for (std::size_t j = 0; j < aps.size(); ++j) out.segment(static_cast<Eigen::Index>(j) * n, n) = cols.col(static_cast<Eigen::Index>(i * L + aps[j]));
    return out;
}

inline CVec gather_hbar(const EstimationContext& c, std::size_t i, const IndexSet& aps) {
    const auto n = static_cast<Eigen::Index>(c.N);
    CVec out(n * static_cast<Eigen::Index>(aps.size()));
    for (std::size_t j = 0; j < aps.size(); ++j) out.segment(static_cast<Eigen::Index>(j) * n, n) = c.link(i, aps[j]).h_bar;
    return out;
}

/// Adds `scale * blk_l` on the diagonal block of every AP in `aps`.
template <class BlockFn>
void add_block_diagonal(CMat& m, const IndexSet& aps, Eigen::Index n, BlockFn&& blk) {
    for (std::size_t j = 0; j < aps.size(); ++j) {
        const auto off = static_cast<Eigen::Index>(j) * n;
        m.block(off, off, n, n) += blk(aps[j]);
    }
}

/// UE k's centralized system matrix on its serving subspace (|M_k| N).
/// UEs in `est` enter through hhat hhat^H + [R - C_hhat]_B, UEs in `stat`
/// through hbar hbar^H + [R]_B, and the hardware noise is restricted to
/// `noise` (all UEs means the exact C_n blocks).
inline CMat central_system_matrix(std::size_t k, const IndexSet& est, const IndexSet& stat, const IndexSet& noise,
                                  const CMat& hhat, const EstimationContext& c, const ClusterPlan& cl) {
    const IndexSet& aps = cl.serving[k];
    const auto n = static_cast<Eigen::Index>(c.N);
    const Eigen::Index dim = n * static_cast<Eigen::Index>(aps.size());
    const double a2 = c.adc() * c.adc();
    CMat m = CMat::Zero(dim, dim);
    const bool full_noise = noise.size() == c.K;
    add_block_diagonal(m, aps, n, [&](std::size_t l) { return full_noise ? c.cn[l] : restricted_noise(l, noise, c); });
    for (std::size_t i : est) {
        const CVec h = gather_blocks(hhat, i, aps, c.L);
        m.noalias() += a2 * c.p[i] * h * h.adjoint();
        add_block_diagonal(m, aps, n, [&](std::size_t l) { return CMat(a2 * c.p[i] * (c.link(i, l).R - c.chat[i * c.L + l])); });
    }
    for (std::size_t i : stat) {
        const CVec hb = gather_hbar(c, i, aps);
        m.noalias() += a2 * c.p[i] * hb * hb.adjoint();
        add_block_diagonal(m, aps, n, [&](std::size_t l) { return CMat(a2 * c.p[i] * c.link(i, l).R); });
    }
    return hermitian_part(m);
}

inline CMat central_system_matrix(Detector d, std::size_t k, const CMat& hhat, const EstimationContext& c,
                                  const ClusterPlan& cl) {
    const IndexSet all = all_ues(c.K);
    switch (d) {
    case Detector::mmse: return central_system_matrix(k, all, {}, all, hhat, c, cl);
    case Detector::p_mmse: {
        const IndexSet est = central_estimate_set(d, k, cl);
        return central_system_matrix(k, est, set_difference(cl.overlap[k], est), cl.overlap[k], hhat, c, cl);
    }
    case Detector::p_mmse_original: return central_system_matrix(k, cl.overlap[k], {}, cl.overlap[k], hhat, c, cl);
    default: throw ConfigError("detector: " + to_string(d) + " has no centralized system matrix");
    }
}

/// Centralized combiner on UE k's serving subspace; `embed_centralized`
/// maps it back to the LN-dimensional masked vector.
inline CVec central_combiner(Detector d, std::size_t k, const CMat& hhat, const EstimationContext& c,
                             const ClusterPlan& cl) {
    if (cl.serving[k].empty()) throw ConfigError("cluster: UE " + std::to_string(k) + " has no serving AP");
    const CVec b = gather_blocks(hhat, k, cl.serving[k], c.L);
    if (d == Detector::mrc) return b;
    return hermitian_solve(central_system_matrix(d, k, hhat, c, cl), b);
}

inline CVec mmse_centralized(std::size_t k, const CMat& hhat, const EstimationContext& c, const ClusterPlan& cl) {
    return central_combiner(Detector::mmse, k, hhat, c, cl);
}

inline CVec p_mmse_centralized(std::size_t k, const CMat& hhat, const EstimationContext& c, const ClusterPlan& cl) {
    return central_combiner(Detector::p_mmse, k, hhat, c, cl);
}

inline CVec embed_centralized(const CVec& sub, const IndexSet& aps, std::size_t N, std::size_t L) {
    const auto n = static_cast<Eigen::Index>(N);
    CVec out = CVec::Zero(n * static_cast<Eigen::Index>(L));
    for (std::size_t j = 0; j < aps.size(); ++j) out.segment(static_cast<Eigen::Index>(aps[j]) * n, n) = sub.segment(static_cast<Eigen::Index>(j) * n, n);
    return out;
}

} // namespace cfmimo

#endif // CFMIMO_DETECTORS_HPP
