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

#ifndef CFMIMO_HARNESS_HPP
#define CFMIMO_HARNESS_HPP

#include "cfmimo/channel_model.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/detectors.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/parallel.hpp"
#include "cfmimo/plans.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/scheduler.hpp"
#include "cfmimo/spectral_efficiency.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfmimo {

inline constexpr const char* kVersion = "cfmimo 0.1.0";

struct ResultRow {
    std::string sweep;
    double value = 0.0;
    std::string series;
    /// UE index, or an aggregate name such as "sum", "mean", "delta".
    std::string ue;
    double se = 0.0;
    double std_err = 0.0;
    std::optional<double> probability;
    std::string evaluation;
    std::uint64_t trials = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
    std::string experiment;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;
    std::vector<ResultRow> rows;

    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sorted (value, probability) pairs; probability (i + 1) / n.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(samples.size());
    const auto n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out.emplace_back(samples[i], static_cast<double>(i + 1) / n);
    return out;
}

/// SE_max - SE_min.
inline double delta_se(const std::vector<double>& se) {
    if (se.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(se.begin(), se.end());
    return *hi - *lo;
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Statistics, plans and estimation context of one scenario. The context
/// points into `stats` and `plan`, hence the shared ownership.
struct PreparedScenario {
    std::shared_ptr<const ChannelStatistics> stats;
    std::shared_ptr<const SchedulerResult> plan;
    std::shared_ptr<const EstimationContext> ctx;
};

inline std::uint64_t scenario_seed(const SimConfig& cfg, std::size_t index) {
    return stream_seed(cfg.seed, "scenario", index);
}

inline std::shared_ptr<const ChannelStatistics> scenario_statistics(const SimConfig& cfg, std::size_t index) {
    const std::uint64_t s = scenario_seed(cfg, index);
    return std::make_shared<const ChannelStatistics>(build_statistics(generate_scenario(cfg, s), cfg, s));
}

inline PreparedScenario prepare(const SimConfig& cfg, std::shared_ptr<const ChannelStatistics> st, SchedulerResult plan) {
    PreparedScenario p;
    p.stats = std::move(st);
    p.plan = std::make_shared<const SchedulerResult>(std::move(plan));
    p.ctx = std::make_shared<const EstimationContext>(
        build_context(*p.stats, p.plan->pilots, p.plan->power, cfg.quantizer(), cfg.sigma2_mw()));
    return p;
}

inline PreparedScenario prepare_scenario(const SimConfig& cfg, std::size_t index) {
    cfg.validate();
    auto st = scenario_statistics(cfg, index);
    SchedulerResult plan = run_algorithm1(*st, SchedulerConfig::from(cfg), cfg.quantizer());
    return prepare(cfg, std::move(st), std::move(plan));
}

/// Comparison strategies for the pilot/power experiment.
enum class PilotStrategy { proposed, random };
enum class PowerStrategy { fractional, equal };

/// Uniformly random pilots, drawn from the scenario's own stream.
inline std::vector<std::size_t> random_pilots(std::size_t K, std::size_t tau, std::uint64_t seed) {
    Rng rng = make_stream(seed, "random-pilot");
    std::uniform_int_distribution<std::size_t> pick(0, tau - 1);
    std::vector<std::size_t> out(K);
    for (auto& t : out) t = pick(rng);
    return out;
}

/// The joint scheduler with either step swapped for its baseline.
inline SchedulerResult schedule_with(const ChannelStatistics& st, const SimConfig& cfg, PilotStrategy ps, PowerStrategy pw,
                                     std::uint64_t seed) {
    const SchedulerConfig sc = SchedulerConfig::from(cfg);
    const QuantizerConfig q = cfg.quantizer();
    if (ps == PilotStrategy::proposed && pw == PowerStrategy::fractional) return run_algorithm1(st, sc, q);
    SchedulerResult res;
    res.candidates = candidate_sets(st, sc.d_bar);
    const auto primary = select_primary(st, res.candidates);
    const std::vector<std::size_t> fixed = ps == PilotStrategy::random ? random_pilots(st.K, sc.tau, seed) : std::vector<std::size_t>{};
    std::vector<double> p_eff(st.K, sc.p_max * (1.0 - q.rho_da));
    for (std::size_t m = 0; m < sc.iterations; ++m) {
        auto pilot = ps == PilotStrategy::random ? fixed : assign_pilots(st, primary, p_eff, sc.tau);
        auto serving = assign_secondary(st, primary, pilot, p_eff, sc.tau, sc.eta_db);
        res.cluster = ClusterPlan::make(st.L, primary, std::move(serving));
        res.pilots = PilotPlan::make(sc.tau, std::move(pilot));
        res.power = pw == PowerStrategy::equal ? PowerPlan::equal(st.K, sc.p_max, q.rho_da)
                                               : fractional_power(st, res.cluster, sc.p_max, sc.nu, q.rho_da);
        p_eff = res.power.p_eff;
    }
    return res;
}

/// SE of every UE under the configured scheme, detector and weighting.
/// MRC uses the closed forms; everything else is simulated.
inline SEReport evaluate(const PreparedScenario& p, const SimConfig& cfg, std::size_t workers, std::uint64_t mc_seed) {
    const auto& c = *p.ctx;
    const auto& cl = p.plan->cluster;
    McOptions opt{cfg.trials, mc_seed, workers, cfg.pilot_noise};
    if (cfg.scheme == Scheme::distributed) {
        if (!is_distributed(cfg.detector)) throw ConfigError("detector: " + to_string(cfg.detector) + " needs the centralized scheme");
        if (cfg.detector == Detector::mrc) return se_distributed_closed_all(c, cl, cfg.weighting, cfg.prelog());
        return se_distributed_mc(c, cl, cfg.detector, cfg.weighting, cfg.prelog(), opt);
    }
    if (cfg.detector != Detector::mrc && is_distributed(cfg.detector)) {
        throw ConfigError("detector: " + to_string(cfg.detector) + " needs the distributed scheme");
    }
    if (cfg.detector == Detector::mrc) return se_centralized_closed_all(c, cl, cfg.prelog());
    return se_centralized_mc_exact(c, cl, cfg.detector, cfg.prelog(), opt);
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Per-scenario work in parallel, results kept in scenario order.
template <class Fn>
auto per_scenario(const SimConfig& cfg, std::size_t workers, Fn&& fn) {
    auto blocks = run_blocks(cfg.scenarios, 1, workers, [&](std::size_t, std::size_t begin, std::size_t) { return fn(begin); });
    return blocks;
}

inline void push_cdf(ResultTable& t, const std::string& sweep, double value, const std::string& series,
                     const std::vector<double>& se, const std::string& evaluation, std::uint64_t trials) {
    for (const auto& [x, prob] : empirical_cdf(se)) t.rows.push_back({sweep, value, series, "cdf", x, 0.0, prob, evaluation, trials});
}

inline void push_aggregates(ResultTable& t, const std::string& sweep, double value, const std::string& series,
                            const std::vector<double>& se, const std::string& evaluation, std::uint64_t trials) {
    t.rows.push_back({sweep, value, series, "mean", mean_of(se), 0.0, std::nullopt, evaluation, trials});
    t.rows.push_back({sweep, value, series, "median", median_of(se), 0.0, std::nullopt, evaluation, trials});
    t.rows.push_back({sweep, value, series, "delta", delta_se(se), 0.0, std::nullopt, evaluation, trials});
}

/// Mean over scenarios of the sum SE and its standard error.
inline std::pair<double, double> mean_and_stderr(const std::vector<double>& v) {
    const double m = mean_of(v);
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

inline ResultTable new_table(const std::string& name, const SimConfig& cfg) {
    ResultTable t;
    t.experiment = name;
    t.config_hash = config_hash(cfg);
    t.seed = cfg.seed;
    return t;
}

/// Closed-form sum SE of both schemes with MRC, per scenario.
inline std::pair<double, double> closed_sum_se(const SimConfig& cfg, std::size_t s) {
    const PreparedScenario p = prepare_scenario(cfg, s);
    return {se_distributed_closed_all(*p.ctx, p.plan->cluster, cfg.weighting, cfg.prelog()).sum(),
            se_centralized_closed_all(*p.ctx, p.plan->cluster, cfg.prelog()).sum()};
}

inline void push_sum_rows(ResultTable& t, const std::string& sweep, double value, const SimConfig& cfg, std::size_t workers) {
    auto per = per_scenario(cfg, workers, [&](std::size_t s) { return closed_sum_se(cfg, s); });
    std::vector<double> dist, cent;
    for (const auto& [d, c] : per) {
        dist.push_back(d);
        cent.push_back(c);
    }
    const auto [dm, ds] = mean_and_stderr(dist);
    const auto [cm, cs] = mean_and_stderr(cent);
    t.rows.push_back({sweep, value, "distributed-mrc-" + to_string(cfg.weighting), "sum", dm, ds, std::nullopt, "closed-form", 0});
    t.rows.push_back({sweep, value, "centralized-mrc", "sum", cm, cs, std::nullopt, "closed-form", 0});
}

inline ResultTable sum_se_vs_n(const SimConfig& cfg, std::size_t workers) {
    ResultTable t = new_table("sum-se-vs-N", cfg);
    for (std::size_t n : {1u, 2u, 4u, 6u, 8u}) {
        SimConfig c = cfg;
        c.antennas = n;
        push_sum_rows(t, "antennas", static_cast<double>(n), c, workers);
    }
    return t;
}

inline ResultTable sum_se_vs_bits(const SimConfig& cfg, std::size_t workers) {
    ResultTable t = new_table("sum-se-vs-bits", cfg);
    for (int b = 1; b <= 5; ++b) {
        SimConfig c = cfg;
        c.b_ad = Resolution::bits(b);
        push_sum_rows(t, "b_ad", b, c, workers);
    }
    for (int b = 1; b <= 5; ++b) {
        SimConfig c = cfg;
        c.b_da = Resolution::bits(b);
        push_sum_rows(t, "b_da", b, c, workers);
    }
    return t;
}

/// Per-UE SE pooled over scenarios for each (detector, weighting) pair.
inline ResultTable detector_cdfs(const std::string& name, const SimConfig& cfg, Scheme scheme,
                                 const std::vector<std::pair<Detector, Weighting>>& combos, std::size_t workers) {
    ResultTable t = new_table(name, cfg);
    std::vector<PreparedScenario> scen;
    for (std::size_t s = 0; s < cfg.scenarios; ++s) scen.push_back(prepare_scenario(cfg, s));
    for (const auto& [det, w] : combos) {
        SimConfig c = cfg;
        c.scheme = scheme;
        c.detector = det;
        c.weighting = w;
        std::vector<double> pooled;
        std::string evaluation;
        std::uint64_t trials = 0;
        for (std::size_t s = 0; s < scen.size(); ++s) {
            const SEReport r = evaluate(scen[s], c, workers, stream_seed(cfg.seed, "mc", s));
            pooled.insert(pooled.end(), r.se.begin(), r.se.end());
            evaluation = r.evaluation;
            trials = r.trials;
        }
        const std::string series = scheme == Scheme::distributed ? to_string(det) + "/" + to_string(w) : to_string(det);
        push_cdf(t, "detector", 0.0, series, pooled, evaluation, trials);
        push_aggregates(t, "detector", 0.0, series, pooled, evaluation, trials);
    }
    return t;
}

inline ResultTable cdf_algorithm(const SimConfig& cfg, std::size_t workers) {
    ResultTable t = new_table("cdf-algorithm", cfg);
    const std::vector<std::tuple<std::string, PilotStrategy, PowerStrategy>> strategies = {
        {"proposed-pilot/fractional-power", PilotStrategy::proposed, PowerStrategy::fractional},
        {"proposed-pilot/equal-power", PilotStrategy::proposed, PowerStrategy::equal},
        {"random-pilot/fractional-power", PilotStrategy::random, PowerStrategy::fractional},
        {"random-pilot/equal-power", PilotStrategy::random, PowerStrategy::equal},
    };
    for (const auto& [series, ps, pw] : strategies) {
        auto per = per_scenario(cfg, workers, [&, ps = ps, pw = pw](std::size_t s) {
            auto st = scenario_statistics(cfg, s);
            SchedulerResult plan = schedule_with(*st, cfg, ps, pw, scenario_seed(cfg, s));
            const PreparedScenario p = prepare(cfg, std::move(st), std::move(plan));
            return se_distributed_closed_all(*p.ctx, p.plan->cluster, cfg.weighting, cfg.prelog()).se;
        });
        std::vector<double> pooled;
        for (const auto& v : per) pooled.insert(pooled.end(), v.begin(), v.end());
        push_cdf(t, "strategy", 0.0, series, pooled, "closed-form", 0);
        push_aggregates(t, "strategy", 0.0, series, pooled, "closed-form", 0);
    }
    return t;
}

inline ResultTable cdf_vs_nu(const SimConfig& cfg, std::size_t workers) {
    ResultTable t = new_table("cdf-vs-nu", cfg);
    for (int i = 0; i <= 5; ++i) {
        SimConfig c = cfg;
        c.nu = 0.2 * i;
        auto per = per_scenario(c, workers, [&](std::size_t s) {
            const PreparedScenario p = prepare_scenario(c, s);
            return se_distributed_closed_all(*p.ctx, p.plan->cluster, c.weighting, c.prelog()).se;
        });
        std::vector<double> pooled;
        for (const auto& v : per) pooled.insert(pooled.end(), v.begin(), v.end());
        push_cdf(t, "nu", c.nu, "nu", pooled, "closed-form", 0);
        push_aggregates(t, "nu", c.nu, "nu", pooled, "closed-form", 0);
    }
    return t;
}

/// Closed forms against simulation for both schemes with MRC; the
/// aggregate row "max-rel-gap" holds the largest relative per-UE gap.
inline ResultTable validate_closed_forms(const SimConfig& cfg, std::size_t workers) {
    ResultTable t = new_table("validate-closed-forms", cfg);
    for (std::size_t s = 0; s < cfg.scenarios; ++s) {
        const PreparedScenario p = prepare_scenario(cfg, s);
        const auto& c = *p.ctx;
        const auto& cl = p.plan->cluster;
        const McOptions opt{cfg.trials, stream_seed(cfg.seed, "mc", s), workers, cfg.pilot_noise};
        const std::vector<std::pair<std::string, std::pair<SEReport, SEReport>>> pairs = {
            {"distributed-mrc-lsfd",
             {se_distributed_closed_all(c, cl, Weighting::lsfd, cfg.prelog()),
              se_distributed_mc(c, cl, Detector::mrc, Weighting::lsfd, cfg.prelog(), opt)}},
            {"centralized-mrc",
             {se_centralized_closed_all(c, cl, cfg.prelog()), se_centralized_mc_exact(c, cl, Detector::mrc, cfg.prelog(), opt)}},
        };
        for (const auto& [series, reps] : pairs) {
            const auto& [closed, mc] = reps;
            double gap = 0.0;
            for (std::size_t k = 0; k < c.K; ++k) {
                const std::string ue = std::to_string(k);
                t.rows.push_back({"scenario", static_cast<double>(s), series, ue, closed.se[k], 0.0, std::nullopt, closed.evaluation, 0});
                t.rows.push_back({"scenario", static_cast<double>(s), series, ue, mc.se[k], mc.std_err[k], std::nullopt, mc.evaluation, mc.trials});
                if (mc.se[k] > 0.0) gap = std::max(gap, std::abs(closed.se[k] - mc.se[k]) / mc.se[k]);
            }
            t.rows.push_back({"scenario", static_cast<double>(s), series, "max-rel-gap", gap, 0.0, std::nullopt, "comparison", mc.trials});
        }
    }
    return t;
}

} // namespace detail

using ExperimentFn = std::function<ResultTable(const SimConfig&, std::size_t)>;

inline const std::map<std::string, ExperimentFn>& experiments() {
    static const std::map<std::string, ExperimentFn> table = {
        {"sum-se-vs-N", detail::sum_se_vs_n},
        {"sum-se-vs-bits", detail::sum_se_vs_bits},
        {"cdf-detectors-distributed",
         [](const SimConfig& c, std::size_t w) {
             return detail::detector_cdfs("cdf-detectors-distributed", c, Scheme::distributed,
                                          {{Detector::mrc, Weighting::lsfd},
                                           {Detector::mrc, Weighting::p_lsfd},
                                           {Detector::l_mmse, Weighting::lsfd},
                                           {Detector::lp_mmse, Weighting::lsfd},
                                           {Detector::lp_mmse, Weighting::p_lsfd},
                                           {Detector::lp_mmse_original, Weighting::p_lsfd}},
                                          w);
         }},
        {"cdf-detectors-centralized",
         [](const SimConfig& c, std::size_t w) {
             return detail::detector_cdfs("cdf-detectors-centralized", c, Scheme::centralized,
                                          {{Detector::mrc, Weighting::lsfd},
                                           {Detector::mmse, Weighting::lsfd},
                                           {Detector::p_mmse, Weighting::lsfd},
                                           {Detector::p_mmse_original, Weighting::lsfd}},
                                          w);
         }},
        {"cdf-algorithm", detail::cdf_algorithm},
        {"cdf-vs-nu", detail::cdf_vs_nu},
        {"validate-closed-forms", detail::validate_closed_forms},
    };
    return table;
}

inline std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : experiments()) out.push_back(name);
    return out;
}

inline ResultTable run_experiment(const std::string& name, const SimConfig& cfg, std::size_t workers = default_workers()) {
    cfg.validate();
    const auto& ex = experiments();
    const auto it = ex.find(name);
    if (it == ex.end()) throw ConfigError("experiment: unknown name '" + name + "'");
    return it->second(cfg, workers);
}

inline const char* kCsvHeader = "sweep,value,series,ue,se,stderr,probability,evaluation,config_hash,seed,trials,experiment,version";

inline std::string to_csv(const ResultTable& t) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : t.rows) {
        os << r.sweep << ',' << detail::format_double(r.value) << ',' << r.series << ',' << r.ue << ','
           << detail::format_double(r.se) << ',' << detail::format_double(r.std_err) << ','
           << (r.probability ? detail::format_double(*r.probability) : std::string()) << ',' << r.evaluation << ','
           << t.config_hash << ',' << t.seed << ',' << r.trials << ',' << t.experiment << ',' << t.version << '\n';
    }
    return os.str();
}

inline nlohmann::json to_json(const ResultTable& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json j;
        j["sweep"] = r.sweep;
        j["value"] = r.value;
        j["series"] = r.series;
        j["ue"] = r.ue;
        j["se"] = r.se;
        j["stderr"] = r.std_err;
        j["probability"] = r.probability ? nlohmann::json(*r.probability) : nlohmann::json(nullptr);
        j["evaluation"] = r.evaluation;
        j["config_hash"] = t.config_hash;
        j["seed"] = t.seed;
        j["trials"] = r.trials;
        j["experiment"] = t.experiment;
        j["version"] = t.version;
        arr.push_back(std::move(j));
    }
    return arr;
}

/// Inverse of `to_json`. Table metadata comes from the first row, so an
/// empty array gives an empty table without metadata.
inline ResultTable table_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw IoError("result json: expected an array of rows");
    ResultTable t;
    t.version.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& j = arr[i];
        if (i == 0) {
            t.experiment = j.at("experiment").get<std::string>();
            t.config_hash = j.at("config_hash").get<std::string>();
            t.seed = j.at("seed").get<std::uint64_t>();
            t.version = j.at("version").get<std::string>();
        }
        ResultRow r;
        r.sweep = j.at("sweep").get<std::string>();
        r.value = j.at("value").get<double>();
        r.series = j.at("series").get<std::string>();
        r.ue = j.at("ue").get<std::string>();
        r.se = j.at("se").get<double>();
        r.std_err = j.at("stderr").get<double>();
        if (!j.at("probability").is_null()) r.probability = j.at("probability").get<double>();
        r.evaluation = j.at("evaluation").get<std::string>();
        r.trials = j.at("trials").get<std::uint64_t>();
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline void emit_results(const ResultTable& t, const std::string& format, const std::string& path) {
    std::string body;
    if (format == "csv") {
        body = to_csv(t);
    } else if (format == "json") {
        body = to_json(t).dump(2) + "\n";
    } else {
        throw ConfigError("format: expected csv or json, got '" + format + "'");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline ResultTable load_results_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return table_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("result json '" + path + "': " + e.what());
    }
}

} // namespace cfmimo

#endif // CFMIMO_HARNESS_HPP
