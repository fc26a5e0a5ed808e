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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace cfmimo;

namespace {

struct Check {
    std::string name;
    bool ok;
    std::string detail;
};

SimConfig oracle_config(std::size_t L, std::size_t N, std::size_t K, std::size_t tau) {
    SimConfig c;
    c.num_aps = L;
    c.antennas = N;
    c.num_ues = K;
    c.tau = tau;
    c.area_side_m = 1000.0 * std::sqrt(static_cast<double>(L) / 64.0);
    return c;
}

Check check_scheduler(std::size_t plans) {
    Rng rng = make_stream(8, "validate-plans");
    std::uniform_int_distribution<std::size_t> L(1, 16), K(1, 24), tau(1, 6), N(1, 3);
    for (std::size_t t = 0; t < plans; ++t) {
        SimConfig cfg = oracle_config(L(rng), N(rng), K(rng), tau(rng));
        cfg.nu = t % 3 == 0 ? 0.0 : 0.8;
        const auto st = build_statistics(generate_scenario(cfg, t), cfg, t);
        const auto r = run_algorithm1(st, SchedulerConfig::from(cfg), cfg.quantizer());
        auto v = cluster_violations(r.cluster, r.pilots);
        const auto w = power_violations(st, r.cluster, r.power, cfg.quantizer().rho_da);
        v.insert(v.end(), w.begin(), w.end());
        if (!v.empty()) return {"scheduler-invariants", false, v.front()};
    }
    return {"scheduler-invariants", true, std::to_string(plans) + " plans"};
}

Check check_complexity(std::size_t plans) {
    Rng rng = make_stream(7, "validate-complexity");
    std::uniform_int_distribution<std::size_t> L(1, 10), K(1, 12), tau(1, 5), N(1, 3);
    for (std::size_t t = 0; t < plans; ++t) {
        SimConfig cfg = oracle_config(L(rng), N(rng), K(rng), tau(rng));
        const auto st = build_statistics(generate_scenario(cfg, t), cfg, t);
        const auto r = run_algorithm1(st, SchedulerConfig::from(cfg), cfg.quantizer());
        const auto ctx = build_context(st, r.pilots, r.power, cfg.quantizer(), cfg.sigma2_mw());
        if (r.tally.total() != algorithm1_complexity(r.cluster, r.candidates, cfg.tau))
            return {"complexity-accounting", false, "algorithm tally differs from formula"};
        for (std::size_t k = 0; k < st.K; ++k) {
            const OpCounter p = instrumented_lsfd(k, ctx, r.cluster, true);
            if (!(OpCount{p.cm, p.cd} == cc_plsfd(r.cluster, r.pilots, k)))
                return {"complexity-accounting", false, "P-LSFD count differs for UE " + std::to_string(k)};
        }
    }
    return {"complexity-accounting", true, std::to_string(plans) + " plans"};
}

Check check_closed_forms() {
    SimConfig cfg = oracle_config(4, 2, 6, 3);
    cfg.trials = 20000;
    const ResultTable t = run_experiment("validate-closed-forms", cfg);
    double dist = 0.0, cent = 0.0;
    for (const auto& r : t.rows) {
        if (r.ue != "max-rel-gap") continue;
        double& slot = r.series == "centralized-mrc" ? cent : dist;
        slot = std::max(slot, r.se);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max relative gap distributed %.4f (< 0.02), centralized %.4f (< 0.05)", dist, cent);
    return {"closed-form-vs-simulation", dist < 0.02 && cent < 0.05, buf};
}

Check check_determinism() {
    SimConfig cfg = oracle_config(6, 2, 6, 3);
    cfg.trials = 200;
    const std::string a = to_csv(run_experiment("cdf-detectors-distributed", cfg, 1));
    const std::string b = to_csv(run_experiment("cdf-detectors-distributed", cfg, 4));
    return {"worker-independence", a == b, a == b ? "1 vs 4 workers identical" : "output depends on worker count"};
}

int validate() {
    int failed = 0;
    for (auto fn : {+[] { return check_scheduler(40); }, +[] { return check_complexity(20); }, &check_closed_forms, &check_determinism}) {
        Check c{"", false, ""};
        try {
            c = fn();
        } catch (const std::exception& e) {
            c = {"exception", false, e.what()};
        }
        std::cout << (c.ok ? "ok     " : "FAILED ") << c.name << ": " << c.detail << '\n';
        if (!c.ok) {
            std::cerr << "failed invariant: " << c.name << '\n';
            ++failed;
        }
    }
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uplink spectral-efficiency experiments for scalable cell-free massive MIMO with low-resolution converters"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a named experiment");
    std::string name, config_path, out_path, format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    run->add_option("experiment", name, "experiment name (see `list`)")->required();
    run->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "root seed");
    run->add_option("--trials", trials, "Monte-Carlo trials per scenario");
    run->add_option("--out", out_path, "output file")->required();
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    app.add_subcommand("validate", "run the oracle suite");
    app.add_subcommand("list", "print experiment names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list")) {
            for (const auto& n : experiment_names()) std::cout << n << '\n';
            return 0;
        }
        if (app.got_subcommand("validate")) return validate();
        SimConfig cfg = config_path.empty() ? SimConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (trials) cfg.trials = *trials;
        const ResultTable t = run_experiment(name, cfg);
        emit_results(t, format, out_path);
        std::cerr << t.rows.size() << " rows written to " << out_path << '\n';
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
