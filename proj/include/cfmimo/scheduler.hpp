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

#ifndef CFMIMO_SCHEDULER_HPP
#define CFMIMO_SCHEDULER_HPP

#include "cfmimo/channel_model.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/detectors.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/lsfd.hpp"
#include "cfmimo/plans.hpp"
#include "cfmimo/quantization.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace cfmimo {

struct SchedulerConfig {
    std::size_t tau = 10;
    std::size_t iterations = 2;
    double eta_db = -20.0;
    double nu = 0.8;
    double d_bar = std::numeric_limits<double>::infinity();
    double p_max = 100.0;

    static SchedulerConfig from(const SimConfig& c) {
        return {c.tau, c.iterations, c.eta_db, c.nu, c.d_bar(), c.p_max_mw};
    }
};

/// Elementary steps executed by the last pass of the joint algorithm.
struct AlgorithmTally {
    std::uint64_t primary_candidates = 0;
    std::uint64_t pilot_evaluations = 0;
    std::uint64_t secondary_checks = 0;
    std::uint64_t power_terms = 0;
    std::uint64_t total() const { return primary_candidates + pilot_evaluations + secondary_checks + power_terms; }
};

struct SchedulerResult {
    ClusterPlan cluster;
    PilotPlan pilots;
    PowerPlan power;
    std::vector<IndexSet> candidates;
    AlgorithmTally tally;
};

/// APs within radius d_bar of every UE.
inline std::vector<IndexSet> candidate_sets(const ChannelStatistics& st, double d_bar) {
    std::vector<IndexSet> out(st.K);
    for (std::size_t k = 0; k < st.K; ++k) {
        for (std::size_t l = 0; l < st.L; ++l) {
            if (st.at(k, l).distance <= d_bar) out[k].push_back(l);
        }
        if (out[k].empty()) throw ConfigError("d_bar_m: UE " + std::to_string(k) + " has no candidate AP");
    }
    return out;
}

/// Fractional power rule: p_eff,k = p (1-rho_da) min_{i in Q_k} (sum_{M_i} beta)^nu / (sum_{M_k} beta)^nu.
inline PowerPlan fractional_power(const ChannelStatistics& st, const ClusterPlan& cl, double p_max, double nu,
                                  double rho_da, std::uint64_t* terms = nullptr) {
    std::vector<double> gain(st.K, 0.0);
    for (std::size_t k = 0; k < st.K; ++k) {
        for (std::size_t l : cl.serving[k]) gain[k] += st.at(k, l).beta;
    }
    std::vector<double> p_tx(st.K);
    for (std::size_t k = 0; k < st.K; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : cl.overlap[k]) {
            best = std::min(best, std::pow(gain[i], nu));
            if (terms) ++*terms;
        }
        p_tx[k] = p_max * (best / std::pow(gain[k], nu));
    }
    return PowerPlan::from_tx(std::move(p_tx), p_max, nu, rho_da);
}

/// Names of violated power-plan invariants: effective powers within
/// (0, p_max(1-rho_da)], the weakest UE of every overlap group at full
/// power, and the global maximum at full power.
inline std::vector<std::string> power_violations(const ChannelStatistics& st, const ClusterPlan& cl, const PowerPlan& w,
                                                 double rho_da) {
    std::vector<std::string> out;
    const double full = w.p_max * (1.0 - rho_da);
    std::vector<double> gain(st.K, 0.0);
    for (std::size_t k = 0; k < st.K; ++k) {
        for (std::size_t l : cl.serving[k]) gain[k] += st.at(k, l).beta;
    }
    double top = 0.0;
    for (std::size_t k = 0; k < st.K; ++k) {
        top = std::max(top, w.p_eff[k]);
        if (!(w.p_eff[k] > 0.0 && w.p_eff[k] <= full)) out.push_back("UE " + std::to_string(k) + " power outside (0, p_max]");
        bool weakest = true;
        for (std::size_t i : cl.overlap[k]) weakest = weakest && gain[k] <= gain[i];
        if (weakest && w.p_eff[k] != full) out.push_back("UE " + std::to_string(k) + " is its group minimum but not at full power");
        if (w.nu == 0.0 && w.p_eff[k] != full) out.push_back("nu = 0 but UE " + std::to_string(k) + " not at full power");
    }
    if (top != full) out.push_back("no UE transmits at full power");
    return out;
}

/// Strongest candidate AP of every UE.
inline std::vector<std::size_t> select_primary(const ChannelStatistics& st, const std::vector<IndexSet>& candidates,
                                               std::uint64_t* steps = nullptr) {
    std::vector<std::size_t> primary(st.K);
    for (std::size_t k = 0; k < st.K; ++k) {
        std::size_t best = candidates[k].front();
        for (std::size_t l : candidates[k]) {
            if (st.at(k, l).beta > st.at(k, best).beta) best = l;
            if (steps) ++*steps;
        }
        primary[k] = best;
    }
    return primary;
}

/// Sequential pilot assignment: the first tau UEs take pilots 0..tau-1, the
/// rest the pilot with the least NLOS contamination at their primary AP.
inline std::vector<std::size_t> assign_pilots(const ChannelStatistics& st, const std::vector<std::size_t>& primary,
                                              const std::vector<double>& p_eff, std::size_t tau,
                                              std::uint64_t* steps = nullptr) {
    std::vector<std::size_t> pilot(st.K);
    std::vector<double> load(tau, 0.0);
    std::vector<IndexSet> users_on(tau);
    for (std::size_t k = 0; k < st.K; ++k) {
        if (k < tau) {
            pilot[k] = k;
            if (steps) ++*steps;
        } else {
            std::size_t best = 0;
            double best_val = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < tau; ++t) {
                double v = 0.0;
                for (std::size_t i : users_on[t]) v += static_cast<double>(tau) * p_eff[i] * st.at(i, primary[k]).beta_nlos;
                if (steps) ++*steps;
                if (v < best_val) {
                    best_val = v;
                    best = t;
                }
            }
            pilot[k] = best;
        }
        users_on[pilot[k]].push_back(k);
    }
    return pilot;
}

/// Serving sets: the primary AP plus, per (AP, pilot) pair not yet covered,
/// the strongest UE on that pilot if its gain is within eta dB of its
/// primary gain.
inline std::vector<IndexSet> assign_secondary(const ChannelStatistics& st, const std::vector<std::size_t>& primary,
                                              const std::vector<std::size_t>& pilot, const std::vector<double>& p_eff,
                                              std::size_t tau, double eta_db, std::uint64_t* steps = nullptr) {
    const std::size_t K = st.K;
    const std::size_t L = st.L;
    std::vector<IndexSet> users_on(tau);
    for (std::size_t k = 0; k < K; ++k) users_on[pilot[k]].push_back(k);
    std::vector<char> serve(K * L, 0);
    for (std::size_t k = 0; k < K; ++k) serve[k * L + primary[k]] = 1;
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t t = 0; t < tau; ++t) {
            if (steps) ++*steps;
            const IndexSet& users = users_on[t];
            if (users.empty()) continue;
            bool covered = false;
            for (std::size_t i : users) covered = covered || serve[i * L + l];
            if (covered) continue;
            std::size_t best = users.front();
            for (std::size_t i : users) {
                if (p_eff[i] * st.at(i, l).beta > p_eff[best] * st.at(best, l).beta) best = i;
            }
            const double diff_db = linear_to_db(st.at(best, l).beta) - linear_to_db(st.at(best, primary[best]).beta);
            if (diff_db >= eta_db) serve[best * L + l] = 1;
        }
    }
    std::vector<IndexSet> serving(K);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = 0; l < L; ++l) {
            if (serve[k * L + l]) serving[k].push_back(l);
        }
    }
    return serving;
}

/// Joint primary/secondary AP selection, pilot assignment and fractional
/// power control. Ties go to the lowest index; the pilot metric of the
/// first pass uses full power for everyone.
inline SchedulerResult run_algorithm1(const ChannelStatistics& st, const SchedulerConfig& cfg, const QuantizerConfig& q) {
    if (cfg.tau < 1) throw ConfigError("tau: must be at least 1");
    if (cfg.iterations < 1) throw ConfigError("iterations: must be at least 1");
    SchedulerResult res;
    res.candidates = candidate_sets(st, cfg.d_bar);
    std::uint64_t primary_steps = 0;
    const std::vector<std::size_t> primary = select_primary(st, res.candidates, &primary_steps);

    std::vector<double> p_eff(st.K, cfg.p_max * (1.0 - q.rho_da));
    for (std::size_t m = 0; m < cfg.iterations; ++m) {
        AlgorithmTally pass;
        pass.primary_candidates = primary_steps;
        std::vector<std::size_t> pilot = assign_pilots(st, primary, p_eff, cfg.tau, &pass.pilot_evaluations);
        auto serving = assign_secondary(st, primary, pilot, p_eff, cfg.tau, cfg.eta_db, &pass.secondary_checks);
        res.cluster = ClusterPlan::make(st.L, primary, std::move(serving));
        res.pilots = PilotPlan::make(cfg.tau, std::move(pilot));
        res.power = fractional_power(st, res.cluster, cfg.p_max, cfg.nu, q.rho_da, &pass.power_terms);
        p_eff = res.power.p_eff;
        res.tally = pass;
    }
    return res;
}

struct OpCount {
    std::uint64_t cm = 0;
    std::uint64_t cd = 0;
    friend bool operator==(const OpCount&, const OpCount&) = default;
};

namespace detail {

inline OpCount lsfd_count(std::uint64_t m, std::uint64_t users, std::uint64_t copilots) {
    return {m * (m + 1) * users / 2 + m * (5 * m + 1) * copilots / 2 + (m * m * m + 3 * m * m - m) / 3, m};
}

} // namespace detail

/// CMs and CDs of the partial weighting vector of UE k.
inline OpCount cc_plsfd(const ClusterPlan& cl, const PilotPlan& pp, std::size_t k) {
    return detail::lsfd_count(cl.serving[k].size(), cl.overlap[k].size(),
                              set_intersection(pp.copilot[k], cl.overlap[k]).size());
}

/// CMs and CDs of the full weighting vector of UE k.
inline OpCount cc_lsfd(const ClusterPlan& cl, const PilotPlan& pp, std::size_t k, std::size_t K) {
    return detail::lsfd_count(cl.serving[k].size(), K, pp.copilot[k].size());
}

inline OpCount cc_l2_lsfd() { return {}; }

/// CMs spent on channel estimation to build one combiner. `index` is the
/// AP for the local detectors and the UE for the centralized ones.
inline std::uint64_t cc_detector_ce(const ClusterPlan& cl, Detector d, std::size_t index, std::size_t N, std::size_t tau) {
    const std::uint64_t per = N * (N + tau);
    switch (d) {
    case Detector::lp_mmse: return per * cl.served_primary[index].size();
    case Detector::lp_mmse_original: return per * cl.served[index].size();
    case Detector::p_mmse:
        return per * set_intersection(cl.overlap[index], cl.served[cl.primary[index]]).size() * cl.serving[index].size();
    case Detector::p_mmse_original: return per * cl.overlap[index].size() * cl.serving[index].size();
    default: throw ConfigError("detector: no estimation count for " + to_string(d));
    }
}

/// Steps of one pass of the joint algorithm. With K >= tau and equal
/// candidate sets this is K |L(d)| + (K - tau + L + 1) tau + sum |Q_i|.
inline std::uint64_t algorithm1_complexity(const ClusterPlan& cl, const std::vector<IndexSet>& candidates, std::size_t tau) {
    std::uint64_t total = 0;
    for (const auto& c : candidates) total += c.size();
    const std::uint64_t K = cl.K;
    const std::uint64_t t = tau;
    total += std::min(K, t) + (K > t ? (K - t) * t : 0);
    total += cl.L * t;
    for (const auto& q : cl.overlap) total += q.size();
    return total;
}

/// Correlates the received pilot matrix with UE k's pilot and applies the
/// estimator, counting N tau + N^2 CMs.
inline CVec counted_local_estimate(const CMat& z_mat, std::size_t k, std::size_t l, const EstimationContext& c,
                                   OpCounter& ops) {
    const auto n = z_mat.rows();
    const auto taun = z_mat.cols();
    const CVec phi = c.pilots->phi.col(static_cast<Eigen::Index>(c.pilots->pilot[k]));
    CVec z = CVec::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index t = 0; t < taun; ++t) {
            z(r) += z_mat(r, t) * std::conj(phi(t));
            ++ops.cm;
        }
    }
    z /= std::sqrt(static_cast<double>(taun));
    const CMat& gain = c.gain[k * c.L + l];
    CVec out = c.link(k, l).h_bar;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index col = 0; col < n; ++col) {
            out(r) += gain(r, col) * z(col);
            ++ops.cm;
        }
    }
    return out;
}

/// Runs the estimation work a detector needs (on the given received pilot
/// matrices, one per AP) and returns the CM tally.
inline OpCounter instrumented_detector_ce(Detector d, std::size_t index, const std::vector<CMat>& z_mats,
                                          const EstimationContext& c, const ClusterPlan& cl) {
    OpCounter ops;
    if (is_distributed(d)) {
        for (std::size_t i : local_estimate_set(d, index, cl)) counted_local_estimate(z_mats[index], i, index, c, ops);
    } else {
        for (std::size_t i : central_estimate_set(d, index, cl)) {
            for (std::size_t l : cl.serving[index]) counted_local_estimate(z_mats[l], i, l, c, ops);
        }
    }
    return ops;
}

/// Builds the partial (or full) weighting vector with counted operations.
inline OpCounter instrumented_lsfd(std::size_t k, const EstimationContext& c, const ClusterPlan& cl, bool partial) {
    const LsfdIngredients g = build_ingredients(k, c, cl);
    OpCounter ops;
    const IndexSet users = partial ? cl.overlap[k] : all_ues(c.K);
    const IndexSet copilots = partial ? set_intersection(c.pilots->copilot[k], cl.overlap[k]) : c.pilots->copilot[k];
    counted_lsfd(g, c, users, copilots, ops);
    return ops;
}

} // namespace cfmimo

#endif // CFMIMO_SCHEDULER_HPP
