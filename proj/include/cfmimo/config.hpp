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

#ifndef CFMIMO_CONFIG_HPP
#define CFMIMO_CONFIG_HPP

#include "cfmimo/quantization.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace cfmimo {

enum class Fading { rician, rayleigh };
enum class Scheme { distributed, centralized };
enum class Detector { mrc, l_mmse, lp_mmse, lp_mmse_original, mmse, p_mmse, p_mmse_original };
enum class Weighting { lsfd, p_lsfd, l2 };

/// How the pilot-phase receiver noise is drawn in Monte Carlo runs.
/// `gaussian` draws the projected noise from CN(0, C_n) independently of
/// the channels; `constructive` builds the received pilot matrix symbol by
/// symbol with per-UE DAC noise multiplying the true channels.
enum class PilotNoise { gaussian, constructive };

inline std::string to_string(Fading f) { return f == Fading::rician ? "rician" : "rayleigh"; }
inline std::string to_string(Scheme s) { return s == Scheme::distributed ? "distributed" : "centralized"; }
inline std::string to_string(PilotNoise p) { return p == PilotNoise::gaussian ? "gaussian" : "constructive"; }

inline std::string to_string(Detector d) {
    switch (d) {
    case Detector::mrc: return "mrc";
    case Detector::l_mmse: return "l-mmse";
    case Detector::lp_mmse: return "lp-mmse";
    case Detector::lp_mmse_original: return "lp-mmse-original";
    case Detector::mmse: return "mmse";
    case Detector::p_mmse: return "p-mmse";
    case Detector::p_mmse_original: return "p-mmse-original";
    }
    return "?";
}

inline std::string to_string(Weighting w) {
    switch (w) {
    case Weighting::lsfd: return "lsfd";
    case Weighting::p_lsfd: return "p-lsfd";
    case Weighting::l2: return "l2";
    }
    return "?";
}

inline Fading parse_fading(const std::string& s) {
    if (s == "rician") return Fading::rician;
    if (s == "rayleigh") return Fading::rayleigh;
    throw ConfigError("fading: expected rician or rayleigh, got '" + s + "'");
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "distributed") return Scheme::distributed;
    if (s == "centralized") return Scheme::centralized;
    throw ConfigError("scheme: expected distributed or centralized, got '" + s + "'");
}

inline Detector parse_detector(const std::string& s) {
    for (Detector d : {Detector::mrc, Detector::l_mmse, Detector::lp_mmse, Detector::lp_mmse_original, Detector::mmse,
                       Detector::p_mmse, Detector::p_mmse_original}) {
        if (to_string(d) == s) return d;
    }
    throw ConfigError("detector: unknown detector '" + s + "'");
}

inline Weighting parse_weighting(const std::string& s) {
    for (Weighting w : {Weighting::lsfd, Weighting::p_lsfd, Weighting::l2}) {
        if (to_string(w) == s) return w;
    }
    throw ConfigError("weighting: unknown weighting '" + s + "'");
}

inline PilotNoise parse_pilot_noise(const std::string& s) {
    if (s == "gaussian") return PilotNoise::gaussian;
    if (s == "constructive") return PilotNoise::constructive;
    throw ConfigError("pilot_noise: expected gaussian or constructive, got '" + s + "'");
}

inline bool is_distributed(Detector d) {
    return d == Detector::mrc || d == Detector::l_mmse || d == Detector::lp_mmse || d == Detector::lp_mmse_original;
}

/// Every knob of a simulation run. Defaults reproduce the operating point
/// of the reference deployment (20 MHz, 200-symbol coherence blocks, 10
/// pilots, 100 mW, 5 dB noise figure, 15 degree ASD, -20 dB S-AP threshold).
struct SimConfig {
    std::size_t num_aps = 64;
    std::size_t num_ues = 40;
    std::size_t antennas = 2;
    double area_side_m = 1000.0;

    std::size_t tau = 10;
    std::size_t tau_c = 200;
    double bandwidth_hz = 20e6;
    double noise_figure_db = 5.0;
    std::optional<double> sigma2_dbm_override;

    double p_max_mw = 100.0;
    Resolution b_da = Resolution::bits(1);
    Resolution b_ad = Resolution::bits(2);

    double asd_deg = 15.0;
    double shadow_std_db = 4.0;
    double eta_db = -20.0;
    double nu = 0.8;
    /// Radius of the candidate P-AP set; unset means the area diagonal.
    std::optional<double> d_bar_m;
    std::size_t iterations = 2;

    Fading fading = Fading::rician;
    Scheme scheme = Scheme::distributed;
    Detector detector = Detector::mrc;
    Weighting weighting = Weighting::lsfd;
    PilotNoise pilot_noise = PilotNoise::gaussian;

    std::size_t trials = 1000;
    std::size_t scenarios = 1;
    std::uint64_t seed = 1;

    /// sigma^2 [dBm] = -174 + 10 log10(B) + noise figure, unless overridden.
    double sigma2_dbm() const {
        if (sigma2_dbm_override) return *sigma2_dbm_override;
        return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    }
    double sigma2_mw() const { return db_to_linear(sigma2_dbm()); }
    double prelog() const { return 1.0 - static_cast<double>(tau) / static_cast<double>(tau_c); }
    double d_bar() const { return d_bar_m.value_or(std::sqrt(2.0) * area_side_m); }
    double asd_rad() const { return asd_deg * pi / 180.0; }
    QuantizerConfig quantizer() const { return QuantizerConfig::from_resolution(b_da, b_ad); }

    void validate() const {
        if (num_aps < 1) throw ConfigError("num_aps: must be at least 1");
        if (num_ues < 1) throw ConfigError("num_ues: must be at least 1");
        if (antennas < 1) throw ConfigError("antennas: must be at least 1");
        if (!(area_side_m > 0.0)) throw ConfigError("area_side_m: must be positive");
        if (tau < 1) throw ConfigError("tau: must be at least 1");
        if (tau >= tau_c) throw ConfigError("tau: must be smaller than tau_c");
        if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz: must be positive");
        if (!(p_max_mw > 0.0)) throw ConfigError("p_max_mw: must be positive");
        if (!(asd_deg > 0.0)) throw ConfigError("asd_deg: must be positive");
        if (!(shadow_std_db >= 0.0)) throw ConfigError("shadow_std_db: must be non-negative");
        if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("nu: must lie in [0, 1]");
        if (d_bar_m && !(*d_bar_m > 0.0)) throw ConfigError("d_bar_m: must be positive");
        if (iterations < 1) throw ConfigError("iterations: must be at least 1");
        if (trials < 1) throw ConfigError("trials: must be at least 1");
        if (scenarios < 1) throw ConfigError("scenarios: must be at least 1");
    }
};

namespace detail {

inline Resolution parse_resolution(const nlohmann::json& j, const char* field) {
    if (j.is_string()) {
        if (j.get<std::string>() == "ideal") return Resolution::ideal();
        throw ConfigError(std::string(field) + ": expected a bit count or \"ideal\"");
    }
    if (!j.is_number_integer()) throw ConfigError(std::string(field) + ": expected a bit count or \"ideal\"");
    const int b = j.get<int>();
    if (b <= 0) throw ConfigError(std::string(field) + ": bit count must be positive");
    return Resolution::bits(b);
}

inline nlohmann::json resolution_json(Resolution r) {
    if (r.is_ideal()) return "ideal";
    return r.bit_count();
}

template <class T>
T get_field(const nlohmann::json& j, const char* field) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(field) + ": wrong type");
    }
}

inline std::size_t get_count(const nlohmann::json& j, const char* field) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ConfigError(std::string(field) + ": expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

} // namespace detail

inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        const char* f = key.c_str();
        if (key == "num_aps") c.num_aps = detail::get_count(v, f);
        else if (key == "num_ues") c.num_ues = detail::get_count(v, f);
        else if (key == "antennas") c.antennas = detail::get_count(v, f);
        else if (key == "area_side_m") c.area_side_m = detail::get_field<double>(v, f);
        else if (key == "tau") c.tau = detail::get_count(v, f);
        else if (key == "tau_c") c.tau_c = detail::get_count(v, f);
        else if (key == "bandwidth_hz") c.bandwidth_hz = detail::get_field<double>(v, f);
        else if (key == "noise_figure_db") c.noise_figure_db = detail::get_field<double>(v, f);
        else if (key == "sigma2_dbm") c.sigma2_dbm_override = detail::get_field<double>(v, f);
        else if (key == "p_max_mw") c.p_max_mw = detail::get_field<double>(v, f);
        else if (key == "b_da") c.b_da = detail::parse_resolution(v, f);
        else if (key == "b_ad") c.b_ad = detail::parse_resolution(v, f);
        else if (key == "asd_deg") c.asd_deg = detail::get_field<double>(v, f);
        else if (key == "shadow_std_db") c.shadow_std_db = detail::get_field<double>(v, f);
        else if (key == "eta_db") c.eta_db = detail::get_field<double>(v, f);
        else if (key == "nu") c.nu = detail::get_field<double>(v, f);
        else if (key == "d_bar_m") c.d_bar_m = detail::get_field<double>(v, f);
        else if (key == "iterations") c.iterations = detail::get_count(v, f);
        else if (key == "fading") c.fading = parse_fading(detail::get_field<std::string>(v, f));
        else if (key == "scheme") c.scheme = parse_scheme(detail::get_field<std::string>(v, f));
        else if (key == "detector") c.detector = parse_detector(detail::get_field<std::string>(v, f));
        else if (key == "weighting") c.weighting = parse_weighting(detail::get_field<std::string>(v, f));
        else if (key == "pilot_noise") c.pilot_noise = parse_pilot_noise(detail::get_field<std::string>(v, f));
        else if (key == "trials") c.trials = detail::get_count(v, f);
        else if (key == "scenarios") c.scenarios = detail::get_count(v, f);
        else if (key == "seed") c.seed = detail::get_field<std::uint64_t>(v, f);
        else throw ConfigError(key + ": unknown configuration field");
    }
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const SimConfig& c) {
    nlohmann::json j;
    j["num_aps"] = c.num_aps;
    j["num_ues"] = c.num_ues;
    j["antennas"] = c.antennas;
    j["area_side_m"] = c.area_side_m;
    j["tau"] = c.tau;
    j["tau_c"] = c.tau_c;
    j["bandwidth_hz"] = c.bandwidth_hz;
    j["noise_figure_db"] = c.noise_figure_db;
    if (c.sigma2_dbm_override) j["sigma2_dbm"] = *c.sigma2_dbm_override;
    j["p_max_mw"] = c.p_max_mw;
    j["b_da"] = detail::resolution_json(c.b_da);
    j["b_ad"] = detail::resolution_json(c.b_ad);
    j["asd_deg"] = c.asd_deg;
    j["shadow_std_db"] = c.shadow_std_db;
    j["eta_db"] = c.eta_db;
    j["nu"] = c.nu;
    if (c.d_bar_m) j["d_bar_m"] = *c.d_bar_m;
    j["iterations"] = c.iterations;
    j["fading"] = to_string(c.fading);
    j["scheme"] = to_string(c.scheme);
    j["detector"] = to_string(c.detector);
    j["weighting"] = to_string(c.weighting);
    j["pilot_noise"] = to_string(c.pilot_noise);
    j["trials"] = c.trials;
    j["scenarios"] = c.scenarios;
    j["seed"] = c.seed;
    return j;
}

/// Loads a JSON config file; an empty file yields the defaults.
inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        SimConfig c;
        c.validate();
        return c;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    return config_from_json(j);
}

/// Stable 64-bit fingerprint of a config, rendered as 16 hex digits.
inline std::string config_hash(const SimConfig& c) {
    const std::uint64_t h = detail::fnv1a(config_to_json(c).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace cfmimo

#endif // CFMIMO_CONFIG_HPP
