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

#ifndef CFMIMO_TESTS_SUPPORT_HPP
#define CFMIMO_TESTS_SUPPORT_HPP

#include <cfmimo/cfmimo.hpp>

#include <memory>

namespace cfmimo::testing {

/// Small owning system: statistics, plan and context built in place.
struct System {
    SimConfig cfg;
    std::unique_ptr<ChannelStatistics> stats;
    ClusterPlan cluster;
    PilotPlan pilots;
    PowerPlan power;
    std::unique_ptr<EstimationContext> ctx;

    void rebuild_context() {
        ctx = std::make_unique<EstimationContext>(build_context(*stats, pilots, power, cfg.quantizer(), cfg.sigma2_mw()));
    }
};

inline SimConfig small_config(std::size_t L, std::size_t N, std::size_t K, std::size_t tau) {
    SimConfig c;
    c.num_aps = L;
    c.antennas = N;
    c.num_ues = K;
    c.tau = tau;
    c.area_side_m = 250.0;
    return c;
}

/// Statistics from the config; plan from the joint scheduler unless
/// `full` asks for every AP serving every UE with pilots k mod tau.
inline std::unique_ptr<System> make_system(const SimConfig& cfg, std::uint64_t seed, bool full = false) {
    auto s = std::make_unique<System>();
    s->cfg = cfg;
    s->stats = std::make_unique<ChannelStatistics>(build_statistics(generate_scenario(cfg, seed), cfg, seed));
    if (full) {
        std::vector<std::size_t> pilot(cfg.num_ues);
        for (std::size_t k = 0; k < cfg.num_ues; ++k) pilot[k] = k % cfg.tau;
        s->cluster = ClusterPlan::full(*s->stats);
        s->pilots = PilotPlan::make(cfg.tau, pilot);
        s->power = PowerPlan::equal(cfg.num_ues, cfg.p_max_mw, cfg.quantizer().rho_da);
    } else {
        SchedulerResult r = run_algorithm1(*s->stats, SchedulerConfig::from(cfg), cfg.quantizer());
        s->cluster = r.cluster;
        s->pilots = r.pilots;
        s->power = r.power;
    }
    s->rebuild_context();
    return s;
}

} // namespace cfmimo::testing

#endif // CFMIMO_TESTS_SUPPORT_HPP
