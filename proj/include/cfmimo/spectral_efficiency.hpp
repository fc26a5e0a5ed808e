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

#ifndef CFMIMO_SPECTRAL_EFFICIENCY_HPP
#define CFMIMO_SPECTRAL_EFFICIENCY_HPP

#include "cfmimo/config.hpp"
#include "cfmimo/detectors.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/lsfd.hpp"
#include "cfmimo/parallel.hpp"
#include "cfmimo/plans.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cfmimo {

struct SEReport {
    std::vector<double> se;
    std::vector<double> std_err;
    double prelog = 0.0;
    Scheme scheme = Scheme::distributed;
    Detector detector = Detector::mrc;
    Weighting weighting = Weighting::lsfd;
    std::string evaluation;
    std::size_t trials = 0;

    double sum() const {
        double s = 0.0;
        for (double v : se) s += v;
        return s;
    }
};

inline double se_from_sinr(double sinr, double prelog) { return prelog * std::log2(1.0 + sinr); }

/// E[hhat_{k,l1}^H h_{i,l1} h_{i,l2}^H hhat_{k,l2}], split into the four
/// pilot-sharing / AP-coincidence cases.
inline cplx theorem1_kernel(std::size_t k, std::size_t i, std::size_t l1, std::size_t l2, const EstimationContext& c) {
    const double a2 = c.adc() * c.adc();
    const double tau = static_cast<double>(c.tau);
    const double pk = c.p[k];
    const double pi_ = c.p[i];
    const auto& k1 = c.link(k, l1);
    const auto& i1 = c.link(i, l1);
    const auto& k2 = c.link(k, l2);
    const auto& i2 = c.link(i, l2);
    const bool copilot = c.pilots->share_pilot(i, k);
    const CMat& psi1 = c.psi_inv_of(k, l1);
    const CMat& psi2 = c.psi_inv_of(k, l2);
    const cplx los1 = k1.h_bar.dot(i1.h_bar);
    const cplx los2 = i2.h_bar.dot(k2.h_bar);

    if (l1 == l2) {
        const CMat rpr = k1.R * psi1 * k1.R;
        const double base = std::norm(los1) + k1.h_bar.dot(i1.R * k1.h_bar).real() +
                            a2 * tau * pk * ((i1.R * rpr).trace().real() + i1.h_bar.dot(rpr * i1.h_bar).real());
        if (!copilot) return base;
        const cplx tr = (i1.R * psi1 * k1.R).trace();
        return base + a2 * a2 * tau * tau * pk * pi_ * std::norm(tr) +
               2.0 * a2 * tau * std::sqrt(pi_ * pk) * (tr * i1.h_bar.dot(k1.h_bar)).real();
    }
    const cplx los = los1 * los2;
    if (!copilot) return los;
    const cplx tr1 = (i1.R * psi1 * k1.R).trace();
    const cplx tr2 = (k2.R * psi2 * i2.R).trace();
    return los + a2 * a2 * tau * tau * pk * pi_ * tr1 * tr2 +
           a2 * tau * std::sqrt(pk * pi_) * (los2 * tr1 + los1 * tr2);
}

/// Distributed closed form with the maximizing weights:
/// prelog log2(1 + (1-rho)^2 p_k mean^H C_k^{-1} mean).
inline double se_distributed_closed_max(const LsfdIngredients& g, const EstimationContext& c, double prelog) {
    if (c.p[g.k] == 0.0) return 0.0;
    const CVec mu = g.mean();
    const double sinr = c.adc() * c.adc() * c.p[g.k] * mu.dot(hermitian_solve(g.C, mu)).real();
    return se_from_sinr(sinr, prelog);
}

/// Distributed closed form for arbitrary weights a:
/// (1-rho)^2 p_k |a^H mean|^2 / (a^H C_k a).
inline double se_distributed_closed(const LsfdIngredients& g, const CVec& a, const EstimationContext& c, double prelog) {
    if (c.p[g.k] == 0.0) return 0.0;
    const double den = a.dot(g.C * a).real();
    if (!(den > 0.0)) throw NumericalError("se_distributed_closed: non-positive denominator");
    const double sinr = c.adc() * c.adc() * c.p[g.k] * std::norm(a.dot(g.mean())) / den;
    return se_from_sinr(sinr, prelog);
}

inline CVec closed_form_weights(const LsfdIngredients& g, Weighting w) {
    switch (w) {
    case Weighting::lsfd: return lsfd_mr(g);
    case Weighting::p_lsfd: return p_lsfd(g);
    case Weighting::l2: return l2_lsfd(g.size());
    }
    throw ConfigError("weighting: unknown");
}

/// Per-UE closed-form SE of MRC at the APs with the chosen weighting.
inline SEReport se_distributed_closed_all(const EstimationContext& c, const ClusterPlan& cl, Weighting w, double prelog) {
    SEReport r;
    r.prelog = prelog;
    r.scheme = Scheme::distributed;
    r.detector = Detector::mrc;
    r.weighting = w;
    r.evaluation = "closed-form";
    for (std::size_t k = 0; k < c.K; ++k) {
        const LsfdIngredients g = build_ingredients(k, c, cl);
        r.se.push_back(w == Weighting::lsfd ? se_distributed_closed_max(g, c, prelog)
                                            : se_distributed_closed(g, closed_form_weights(g, w), c, prelog));
        r.std_err.push_back(0.0);
    }
    return r;
}

/// Monte Carlo moments of the local effective channels of one UE.
struct DistributedMoments {
    CVec g_sum;
    CMat s_all;
    CMat s_overlap;
    RVec d_sum;
    double count = 0.0;

    void init(Eigen::Index m) {
        g_sum = CVec::Zero(m);
        s_all = CMat::Zero(m, m);
        s_overlap = CMat::Zero(m, m);
        d_sum = RVec::Zero(m);
        count = 0.0;
    }
    DistributedMoments& operator+=(const DistributedMoments& o) {
        g_sum += o.g_sum;
        s_all += o.s_all;
        s_overlap += o.s_overlap;
        d_sum += o.d_sum;
        count += o.count;
        return *this;
    }
    DistributedMoments& operator-=(const DistributedMoments& o) {
        g_sum -= o.g_sum;
        s_all -= o.s_all;
        s_overlap -= o.s_overlap;
        d_sum -= o.d_sum;
        count -= o.count;
        return *this;
    }
};

/// SE of UE k from accumulated moments. The interference-plus-noise matrix
/// is (1-rho)^2/(1-rho_da) sum_i p_i E[g g^H] + diag E[v^H C_x v]
/// - (1-rho)^2 p_k E[g] E[g]^H; the partial weights use the overlap-set sum.
inline double se_from_moments(std::size_t k, const DistributedMoments& mo, Weighting w, const EstimationContext& c,
                              double prelog) {
    if (c.p[k] == 0.0 || mo.count == 0.0) return 0.0;
    const double a2 = c.adc() * c.adc();
    const double scale = a2 / (1.0 - c.q.rho_da);
    const CVec mu = mo.g_sum / mo.count;
    CMat b = scale * mo.s_all / mo.count - a2 * c.p[k] * mu * mu.adjoint();
    b.diagonal() += (mo.d_sum / mo.count).cast<cplx>();
    b = hermitian_part(b);
    CVec a;
    switch (w) {
    case Weighting::lsfd: {
        const double sinr = a2 * c.p[k] * mu.dot(hermitian_solve(b, mu)).real();
        return se_from_sinr(std::max(sinr, 0.0), prelog);
    }
    case Weighting::p_lsfd: {
        CMat bp = scale * mo.s_overlap / mo.count - a2 * c.p[k] * mu * mu.adjoint();
        bp.diagonal() += (mo.d_sum / mo.count).cast<cplx>();
        a = hermitian_solve(hermitian_part(bp), mu);
        break;
    }
    case Weighting::l2: a = CVec::Ones(mu.size()); break;
    }
    const double den = a.dot(b * a).real();
    if (!(den > 0.0)) return 0.0;
    return se_from_sinr(a2 * c.p[k] * std::norm(a.dot(mu)) / den, prelog);
}

namespace detail {

inline std::size_t mc_block_size(std::size_t trials) {
    constexpr std::size_t kTargetBlocks = 100;
    return std::max<std::size_t>(1, (trials + kTargetBlocks - 1) / kTargetBlocks);
}

/// Leave-one-block-out jackknife standard error of a statistic of summed blocks.
template <class Acc, class Stat>
double jackknife_stderr(const std::vector<Acc>& blocks, const Acc& total, Stat&& stat) {
    const std::size_t nb = blocks.size();
    if (nb < 2) return 0.0;
    std::vector<double> vals(nb);
    double mean = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        Acc loo = total;
        loo -= blocks[b];
        vals[b] = stat(loo);
        mean += vals[b];
    }
    mean /= static_cast<double>(nb);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * static_cast<double>(nb - 1) / static_cast<double>(nb));
}

} // namespace detail

struct McOptions {
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    PilotNoise pilot_noise = PilotNoise::gaussian;
};

/// Accumulates the per-trial moments of g_ki = [v_kl^H h_il]_{l in M_k}.
/// The data-phase noise enters through its exact conditional second moment
/// given the channels, so only channels and estimates are sampled.
inline std::vector<DistributedMoments> distributed_moments_trial(const JointSample& s, const CMat& v,
                                                                 const EstimationContext& c, const ClusterPlan& cl) {
    std::vector<DistributedMoments> out(c.K);
    for (std::size_t k = 0; k < c.K; ++k) {
        const IndexSet& aps = cl.serving[k];
        const auto m = static_cast<Eigen::Index>(aps.size());
        DistributedMoments& mo = out[k];
        mo.init(m);
        mo.count = 1.0;
        CVec g(m);
        for (std::size_t i = 0; i < c.K; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto col_v = static_cast<Eigen::Index>(k * c.L + aps[static_cast<std::size_t>(j)]);
                const auto col_h = static_cast<Eigen::Index>(i * c.L + aps[static_cast<std::size_t>(j)]);
                g(j) = v.col(col_v).dot(s.h.col(col_h));
            }
            const CMat outer = c.p[i] * g * g.adjoint();
            mo.s_all += outer;
            if (contains(cl.overlap[k], i)) mo.s_overlap += outer;
            if (i == k) mo.g_sum += g;
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            const std::size_t l = aps[static_cast<std::size_t>(j)];
            const CVec vk = v.col(static_cast<Eigen::Index>(k * c.L + l));
            mo.d_sum(j) += vk.dot(c.cx[l] * vk).real();
        }
    }
    return out;
}

/// Monte Carlo distributed SE for any local detector and weighting, with
/// block-jackknife standard errors. Bitwise reproducible for any worker count.
inline SEReport se_distributed_mc(const EstimationContext& c, const ClusterPlan& cl, Detector det, Weighting w,
                                  double prelog, const McOptions& opt) {
    if (opt.trials < 1) throw ConfigError("trials: must be at least 1");
    if (!is_distributed(det)) throw ConfigError("detector: " + to_string(det) + " is not a local detector");
    const std::size_t bs = detail::mc_block_size(opt.trials);
    auto blocks = run_blocks(opt.trials, bs, opt.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<DistributedMoments> acc(c.K);
        for (std::size_t k = 0; k < c.K; ++k) acc[k].init(static_cast<Eigen::Index>(cl.serving[k].size()));
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng = make_stream(opt.seed, "distributed-mc", t);
            const JointSample s = sample_joint(c, opt.pilot_noise, rng);
            const CMat v = local_combiners(det, s.hhat, c, cl);
            const auto trial = distributed_moments_trial(s, v, c, cl);
            for (std::size_t k = 0; k < c.K; ++k) acc[k] += trial[k];
        }
        return acc;
    });
    SEReport r;
    r.prelog = prelog;
    r.scheme = Scheme::distributed;
    r.detector = det;
    r.weighting = w;
    r.evaluation = "monte-carlo";
    r.trials = opt.trials;
    for (std::size_t k = 0; k < c.K; ++k) {
        DistributedMoments total;
        total.init(static_cast<Eigen::Index>(cl.serving[k].size()));
        std::vector<DistributedMoments> per_block;
        per_block.reserve(blocks.size());
        for (const auto& b : blocks) {
            total += b[k];
            per_block.push_back(b[k]);
        }
        auto stat = [&](const DistributedMoments& mo) { return se_from_moments(k, mo, w, c, prelog); };
        r.se.push_back(stat(total));
        r.std_err.push_back(detail::jackknife_stderr(per_block, total, stat));
    }
    return r;
}

/// Per-AP interference-plus-noise block (1-rho)^2 sum_i p_i (R_il - C_hhat_il) + C_n,l.
inline CMat central_error_block(std::size_t l, const EstimationContext& c) {
    const double a2 = c.adc() * c.adc();
    CMat z = c.cn[l];
    for (std::size_t i = 0; i < c.K; ++i) z.noalias() += a2 * c.p[i] * (c.link(i, l).R - c.chat[i * c.L + l]);
    return hermitian_part(z);
}

namespace detail {

struct ScalarAcc {
    std::vector<double> sum;
    std::vector<double> sum_sq;
    double count = 0.0;
};

} // namespace detail

/// Instantaneous centralized SINR of UE k for combiner v on M_k.
inline double central_sinr(std::size_t k, const CVec& v, const CMat& hhat, const EstimationContext& c,
                           const ClusterPlan& cl, const std::vector<CMat>& err_blocks) {
    const IndexSet& aps = cl.serving[k];
    const double a2 = c.adc() * c.adc();
    const double num = a2 * c.p[k] * std::norm(v.dot(gather_blocks(hhat, k, aps, c.L)));
    if (num == 0.0) return 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < c.K; ++i) {
        if (i == k || c.p[i] == 0.0) continue;
        den += a2 * c.p[i] * std::norm(v.dot(gather_blocks(hhat, i, aps, c.L)));
    }
    const auto n = static_cast<Eigen::Index>(c.N);
    for (std::size_t j = 0; j < aps.size(); ++j) {
        const CVec vj = v.segment(static_cast<Eigen::Index>(j) * n, n);
        den += vj.dot(err_blocks[aps[j]] * vj).real();
    }
    return num / den;
}

/// Exact centralized SE: average of log2(1 + instantaneous SINR) over
/// estimate realizations.
inline SEReport se_centralized_mc_exact(const EstimationContext& c, const ClusterPlan& cl, Detector det, double prelog,
                                        const McOptions& opt) {
    if (opt.trials < 1) throw ConfigError("trials: must be at least 1");
    if (det != Detector::mrc && is_distributed(det)) throw ConfigError("detector: " + to_string(det) + " is not a centralized detector");
    std::vector<CMat> err_blocks;
    for (std::size_t l = 0; l < c.L; ++l) err_blocks.push_back(central_error_block(l, c));
    const std::size_t bs = detail::mc_block_size(opt.trials);
    auto blocks = run_blocks(opt.trials, bs, opt.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        detail::ScalarAcc acc;
        acc.sum.assign(c.K, 0.0);
        acc.sum_sq.assign(c.K, 0.0);
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng = make_stream(opt.seed, "centralized-mc", t);
            const CMat hhat = sample_estimates(c, rng);
            for (std::size_t k = 0; k < c.K; ++k) {
                if (c.p[k] == 0.0) continue;
                const CVec v = central_combiner(det, k, hhat, c, cl);
                const double x = se_from_sinr(central_sinr(k, v, hhat, c, cl, err_blocks), prelog);
                acc.sum[k] += x;
                acc.sum_sq[k] += x * x;
            }
            acc.count += 1.0;
        }
        return acc;
    });
    SEReport r;
    r.prelog = prelog;
    r.scheme = Scheme::centralized;
    r.detector = det;
    r.evaluation = "monte-carlo";
    r.trials = opt.trials;
    for (std::size_t k = 0; k < c.K; ++k) {
        double s = 0.0, ss = 0.0, n = 0.0;
        for (const auto& b : blocks) {
            s += b.sum[k];
            ss += b.sum_sq[k];
            n += b.count;
        }
        const double mean = s / n;
        const double var = n > 1.0 ? std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) : 0.0;
        r.se.push_back(mean);
        r.std_err.push_back(std::sqrt(var / n));
    }
    return r;
}

/// Terms of the centralized MRC closed form for UE k.
struct CentralizedTerms {
    std::vector<double> fg;
    std::vector<double> fe;
    double noise = 0.0;
};

inline CentralizedTerms centralized_terms(std::size_t k, const EstimationContext& c, const ClusterPlan& cl) {
    const IndexSet& aps = cl.serving[k];
    const double a2 = c.adc() * c.adc();
    const double tau = static_cast<double>(c.tau);
    CentralizedTerms t;
    t.fg.assign(c.K, 0.0);
    t.fe.assign(c.K, 0.0);
    for (std::size_t l : aps) {
        const CMat z = central_error_block(l, c);
        const auto& lk = c.link(k, l);
        t.noise += (z * (lk.h_bar * lk.h_bar.adjoint() + c.chat[k * c.L + l])).trace().real();
    }
    for (std::size_t i = 0; i < c.K; ++i) {
        cplx los = 0.0;
        cplx tr_sum = 0.0;
        double fg = 0.0;
        for (std::size_t l : aps) {
            const auto& lk = c.link(k, l);
            const auto& li = c.link(i, l);
            const CMat& ck = c.chat[k * c.L + l];
            const CMat& ci = c.chat[i * c.L + l];
            fg += (ck * ci).trace().real() + lk.h_bar.dot(ci * lk.h_bar).real() + li.h_bar.dot(ck * li.h_bar).real();
            los += lk.h_bar.dot(li.h_bar);
            if (c.pilots->share_pilot(i, k)) tr_sum += (li.R * c.psi_inv_of(k, l) * lk.R).trace();
        }
        t.fg[i] = fg + std::norm(los);
        if (c.pilots->share_pilot(i, k)) {
            const double root = std::sqrt(c.p[i] * c.p[k]);
            t.fe[i] = a2 * a2 * tau * tau * c.p[k] * c.p[i] * std::norm(tr_sum) +
                      2.0 * a2 * tau * root * (tr_sum * std::conj(los)).real();
        }
    }
    return t;
}

/// Centralized MRC closed-form approximation.
inline double se_centralized_closed(std::size_t k, const EstimationContext& c, const ClusterPlan& cl, double prelog) {
    if (c.p[k] == 0.0) return 0.0;
    const CentralizedTerms t = centralized_terms(k, c, cl);
    const double a2 = c.adc() * c.adc();
    double den = t.noise;
    for (std::size_t i = 0; i < c.K; ++i) {
        if (i == k) continue;
        den += a2 * c.p[i] * t.fg[i];
        if (c.pilots->share_pilot(i, k)) den += a2 * c.p[i] * t.fe[i];
    }
    const double num = a2 * c.p[k] * (t.fg[k] + t.fe[k]);
    return se_from_sinr(num / den, prelog);
}

inline SEReport se_centralized_closed_all(const EstimationContext& c, const ClusterPlan& cl, double prelog) {
    SEReport r;
    r.prelog = prelog;
    r.scheme = Scheme::centralized;
    r.detector = Detector::mrc;
    r.evaluation = "closed-form";
    for (std::size_t k = 0; k < c.K; ++k) {
        r.se.push_back(se_centralized_closed(k, c, cl, prelog));
        r.std_err.push_back(0.0);
    }
    return r;
}

} // namespace cfmimo

#endif // CFMIMO_SPECTRAL_EFFICIENCY_HPP
