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

#ifndef CFMIMO_PLANS_HPP
#define CFMIMO_PLANS_HPP

#include "cfmimo/channel_model.hpp"
#include "cfmimo/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace cfmimo {

/// tau x tau DFT pilot book; column t is pilot t.
inline CMat dft_pilot_matrix(std::size_t tau) {
    if (tau < 1) throw ConfigError("tau: must be at least 1");
    const auto n = static_cast<Eigen::Index>(tau);
    CMat phi(n, n);
    for (Eigen::Index t2 = 0; t2 < n; ++t2) {
        for (Eigen::Index t1 = 0; t1 < n; ++t1) {
            const double ang = -2.0 * pi * static_cast<double>((t1 * t2) % n) / static_cast<double>(n);
            phi(t2, t1) = std::polar(1.0, ang);
        }
    }
    return phi;
}

inline IndexSet all_ues(std::size_t K) {
    IndexSet s(K);
    for (std::size_t i = 0; i < K; ++i) s[i] = i;
    return s;
}

/// Pilot indices are zero based here.
struct PilotPlan {
    std::size_t tau = 0;
    CMat phi;
    std::vector<std::size_t> pilot;
    std::vector<IndexSet> copilot;

    std::size_t num_ues() const { return pilot.size(); }
    bool share_pilot(std::size_t i, std::size_t k) const { return pilot[i] == pilot[k]; }

    static PilotPlan make(std::size_t tau, std::vector<std::size_t> assignment) {
        PilotPlan p;
        p.tau = tau;
        p.phi = dft_pilot_matrix(tau);
        for (std::size_t t : assignment) {
            if (t >= tau) throw ConfigError("pilot: index " + std::to_string(t) + " exceeds tau");
        }
        p.pilot = std::move(assignment);
        const std::size_t K = p.pilot.size();
        p.copilot.assign(K, {});
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < K; ++i) {
                if (p.pilot[i] == p.pilot[k]) p.copilot[k].push_back(i);
            }
        }
        return p;
    }
};

/// Effective powers p_eff = (1 - rho_da) p_tx in mW.
struct PowerPlan {
    double p_max = 0.0;
    double nu = 0.0;
    std::vector<double> p_tx;
    std::vector<double> p_eff;

    static PowerPlan from_tx(std::vector<double> p_tx, double p_max, double nu, double rho_da) {
        PowerPlan p;
        p.p_max = p_max;
        p.nu = nu;
        p.p_tx = std::move(p_tx);
        for (double v : p.p_tx) p.p_eff.push_back((1.0 - rho_da) * v);
        return p;
    }
    static PowerPlan equal(std::size_t K, double p_max, double rho_da) {
        return from_tx(std::vector<double>(K, p_max), p_max, 0.0, rho_da);
    }
};

/// Serving structure. `serving[k]` is M_k, `primary[k]` its P-AP; the
/// remaining sets are derived by `finalize`.
struct ClusterPlan {
    std::size_t K = 0;
    std::size_t L = 0;
    std::vector<std::size_t> primary;
    std::vector<IndexSet> serving;
    std::vector<IndexSet> served;
    std::vector<IndexSet> served_primary;
    std::vector<IndexSet> served_secondary;
    std::vector<IndexSet> overlap;

    bool serves(std::size_t k, std::size_t l) const { return contains(serving[k], l); }

    void finalize() {
        served.assign(L, {});
        served_primary.assign(L, {});
        served_secondary.assign(L, {});
        overlap.assign(K, {});
        for (std::size_t k = 0; k < K; ++k) {
            std::sort(serving[k].begin(), serving[k].end());
            serving[k].erase(std::unique(serving[k].begin(), serving[k].end()), serving[k].end());
            for (std::size_t l : serving[k]) {
                served[l].push_back(k);
                (primary[k] == l ? served_primary[l] : served_secondary[l]).push_back(k);
            }
        }
        std::vector<char> mark(L);
        for (std::size_t k = 0; k < K; ++k) {
            std::fill(mark.begin(), mark.end(), 0);
            for (std::size_t l : serving[k]) mark[l] = 1;
            for (std::size_t i = 0; i < K; ++i) {
                for (std::size_t l : serving[i]) {
                    if (mark[l]) {
                        overlap[k].push_back(i);
                        break;
                    }
                }
            }
        }
    }

    static ClusterPlan make(std::size_t L, std::vector<std::size_t> primary, std::vector<IndexSet> serving) {
        ClusterPlan c;
        c.K = primary.size();
        c.L = L;
        if (serving.size() != c.K) throw ConfigError("serving: one set per UE required");
        c.primary = std::move(primary);
        c.serving = std::move(serving);
        for (std::size_t k = 0; k < c.K; ++k) {
            if (c.primary[k] >= L) throw ConfigError("primary: AP index out of range");
            if (!contains(c.serving[k], c.primary[k])) c.serving[k].push_back(c.primary[k]);
            for (std::size_t l : c.serving[k]) {
                if (l >= L) throw ConfigError("serving: AP index out of range");
            }
        }
        c.finalize();
        return c;
    }

    /// Every AP serves every UE; the strongest AP is the primary one.
    static ClusterPlan full(const ChannelStatistics& st) {
        std::vector<std::size_t> primary(st.K);
        std::vector<IndexSet> serving(st.K);
        for (std::size_t k = 0; k < st.K; ++k) {
            std::size_t best = 0;
            for (std::size_t l = 0; l < st.L; ++l) {
                if (st.at(k, l).beta > st.at(k, best).beta) best = l;
                serving[k].push_back(l);
            }
            primary[k] = best;
        }
        return make(st.L, std::move(primary), std::move(serving));
    }
};

/// Names of violated cluster invariants; empty when the plan is consistent.
inline std::vector<std::string> cluster_violations(const ClusterPlan& c, const PilotPlan& p) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < c.K; ++k) {
        if (!contains(c.serving[k], c.primary[k])) out.push_back("primary AP not in serving set of UE " + std::to_string(k));
        std::size_t primaries = 0;
        for (std::size_t l = 0; l < c.L; ++l) primaries += contains(c.served_primary[l], k) ? 1 : 0;
        if (primaries != 1) out.push_back("UE " + std::to_string(k) + " has " + std::to_string(primaries) + " primary APs");
        if (!contains(c.overlap[k], k)) out.push_back("UE " + std::to_string(k) + " missing from its own overlap set");
        for (std::size_t i = 0; i < c.K; ++i) {
            const bool intersect = !set_intersection(c.serving[i], c.serving[k]).empty();
            if (intersect != contains(c.overlap[k], i)) out.push_back("overlap set of UE " + std::to_string(k) + " inconsistent");
            if (contains(c.overlap[k], i) != contains(c.overlap[i], k)) out.push_back("overlap sets not symmetric");
        }
    }
    for (std::size_t l = 0; l < c.L; ++l) {
        if (!set_intersection(c.served_primary[l], c.served_secondary[l]).empty()) {
            out.push_back("AP " + std::to_string(l) + " primary and secondary sets intersect");
        }
        if (c.served_primary[l].size() + c.served_secondary[l].size() != c.served[l].size()) {
            out.push_back("AP " + std::to_string(l) + " served set is not the disjoint union");
        }
        std::vector<std::size_t> count(p.tau, 0);
        for (std::size_t i : c.served_secondary[l]) {
            if (++count[p.pilot[i]] > 1) {
                out.push_back("AP " + std::to_string(l) + " serves two secondary UEs on pilot " + std::to_string(p.pilot[i]));
            }
        }
    }
    return out;
}

inline nlohmann::json plan_to_json(const ClusterPlan& c, const PilotPlan& p, const PowerPlan& w) {
    nlohmann::json j;
    j["tau"] = p.tau;
    j["pilot"] = p.pilot;
    j["primary"] = c.primary;
    j["serving"] = c.serving;
    j["p_tx_mw"] = w.p_tx;
    j["p_eff_mw"] = w.p_eff;
    j["nu"] = w.nu;
    return j;
}

} // namespace cfmimo

#endif // CFMIMO_PLANS_HPP
