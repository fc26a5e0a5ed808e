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

#ifndef CFMIMO_CHANNEL_MODEL_HPP
#define CFMIMO_CHANNEL_MODEL_HPP

#include "cfmimo/config.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

namespace cfmimo {

using Point = std::array<double, 2>;

struct Scenario {
    double area_side = 0.0;
    std::vector<Point> ap_positions;
    std::vector<Point> ue_positions;
    std::size_t antennas = 1;

    std::size_t num_aps() const { return ap_positions.size(); }
    std::size_t num_ues() const { return ue_positions.size(); }
};

struct LinkStatistics {
    double distance = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    double theta = 0.0;
    double beta_los = 0.0;
    double beta_nlos = 0.0;
    CVec h_bar;
    CMat R;
};

/// Per-link statistics on a K x L grid (row k, column l).
struct ChannelStatistics {
    Scenario scenario;
    std::size_t K = 0;
    std::size_t L = 0;
    std::size_t N = 0;
    std::vector<LinkStatistics> links;

    const LinkStatistics& at(std::size_t k, std::size_t l) const { return links[k * L + l]; }
    LinkStatistics& at(std::size_t k, std::size_t l) { return links[k * L + l]; }
};

inline Scenario generate_scenario(const SimConfig& cfg, std::uint64_t seed) {
    if (cfg.num_aps < 1) throw ConfigError("num_aps: must be at least 1");
    if (cfg.num_ues < 1) throw ConfigError("num_ues: must be at least 1");
    if (cfg.antennas < 1) throw ConfigError("antennas: must be at least 1");
    if (!(cfg.area_side_m > 0.0)) throw ConfigError("area_side_m: must be positive");
    Scenario s;
    s.area_side = cfg.area_side_m;
    s.antennas = cfg.antennas;
    std::uniform_real_distribution<double> u(0.0, cfg.area_side_m);
    Rng ap_rng = make_stream(seed, "ap-positions");
    for (std::size_t l = 0; l < cfg.num_aps; ++l) {
        const double x = u(ap_rng);
        s.ap_positions.push_back({x, u(ap_rng)});
    }
    Rng ue_rng = make_stream(seed, "ue-positions");
    for (std::size_t k = 0; k < cfg.num_ues; ++k) {
        const double x = u(ue_rng);
        s.ue_positions.push_back({x, u(ue_rng)});
    }
    return s;
}

/// beta = 10^((-30.5 - 36.7 log10(d / 1 m) + F) / 10).
inline double large_scale_fading(double distance, double shadow_db) {
    if (!(distance > 0.0)) throw ConfigError("distance: must be positive");
    return db_to_linear(-30.5 - 36.7 * std::log10(distance) + shadow_db);
}

/// kappa [dB] = 13 - 0.03 d, returned linear.
inline double rician_factor(double distance, bool rayleigh = false) {
    if (!(distance > 0.0)) throw ConfigError("distance: must be positive");
    if (rayleigh) return 0.0;
    return db_to_linear(13.0 - 0.03 * distance);
}

/// Half-wavelength ULA response scaled by sqrt(beta_los).
inline CVec los_steering(double theta, std::size_t n_ant, double beta_los) {
    if (n_ant < 1) throw ConfigError("antennas: must be at least 1");
    if (!(beta_los >= 0.0)) throw ConfigError("beta_los: must be non-negative");
    CVec h(static_cast<Eigen::Index>(n_ant));
    const double amp = std::sqrt(beta_los);
    const double s = std::sin(theta);
    for (std::size_t n = 0; n < n_ant; ++n) {
        h(static_cast<Eigen::Index>(n)) = amp * std::polar(1.0, -static_cast<double>(n) * pi * s);
    }
    return h;
}

namespace detail {

struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights on [-1, 1], cached per order.
inline const GaussLegendreRule& gauss_legendre(int order) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (slot) return *slot;
    auto rule = std::make_unique<GaussLegendreRule>();
    // Boost returns the non-negative roots in increasing order.
    const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(order);
    for (double x : zeros) {
        const double dp = boost::math::legendre_p_prime(order, x);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->nodes.push_back(x);
        rule->weights.push_back(w);
        if (x != 0.0) {
            rule->nodes.push_back(-x);
            rule->weights.push_back(w);
        }
    }
    slot = std::move(rule);
    return *slot;
}

inline constexpr int kMinQuadratureOrder = 16;
inline constexpr int kMaxQuadratureOrder = 8192;
inline constexpr double kQuadratureTol = 1e-10;

/// First column of the normalized correlation (unit NLOS gain): entry d is
/// the integral of exp(j pi d sin(theta + delta)) against the Gaussian
/// angular density over [-20 sigma, 20 sigma].
inline CVec correlation_column(int order, double theta, double asd, std::size_t n_ant) {
    const auto& rule = gauss_legendre(order);
    const double half = 20.0 * asd;
    const double norm = 1.0 / (std::sqrt(2.0 * pi) * asd);
    CVec col = CVec::Zero(static_cast<Eigen::Index>(n_ant));
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double delta = half * rule.nodes[q];
        const double w = half * rule.weights[q] * norm * std::exp(-delta * delta / (2.0 * asd * asd));
        const double s = std::sin(theta + delta);
        for (std::size_t d = 0; d < n_ant; ++d) {
            col(static_cast<Eigen::Index>(d)) += w * std::polar(1.0, pi * static_cast<double>(d) * s);
        }
    }
    return col;
}

} // namespace detail

/// Local-scattering correlation matrix of a half-wavelength ULA. The
/// Toeplitz column is integrated with Gauss-Legendre rules of doubling
/// order until two successive orders agree to 1e-10 relative.
inline CMat spatial_correlation(double theta, double asd, double beta_nlos, std::size_t n_ant) {
    if (!(asd > 0.0)) throw ConfigError("asd: must be positive");
    if (n_ant < 1) throw ConfigError("antennas: must be at least 1");
    CVec prev = detail::correlation_column(detail::kMinQuadratureOrder, theta, asd, n_ant);
    CVec col;
    bool converged = false;
    for (int order = 2 * detail::kMinQuadratureOrder; order <= detail::kMaxQuadratureOrder; order *= 2) {
        col = detail::correlation_column(order, theta, asd, n_ant);
        if ((col - prev).cwiseAbs().maxCoeff() < detail::kQuadratureTol * col.cwiseAbs().maxCoeff()) {
            converged = true;
            break;
        }
        prev = col;
    }
    if (!converged) throw NumericalError("spatial_correlation: quadrature did not converge");

    const auto n = static_cast<Eigen::Index>(n_ant);
    CMat r(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            r(a, b) = a >= b ? col(a - b) : std::conj(col(b - a));
        }
    }
    r *= beta_nlos;
    return repair_psd(r);
}

/// Builds every link's statistics from explicit shadowing values (dB),
/// laid out as shadow_db[k * L + l].
inline ChannelStatistics build_statistics(const Scenario& s, const std::vector<double>& shadow_db, double asd,
                                          Fading fading) {
    ChannelStatistics st;
    st.scenario = s;
    st.K = s.num_ues();
    st.L = s.num_aps();
    st.N = s.antennas;
    if (shadow_db.size() != st.K * st.L) throw ConfigError("shadow_db: size must be K * L");
    st.links.resize(st.K * st.L);
    for (std::size_t k = 0; k < st.K; ++k) {
        for (std::size_t l = 0; l < st.L; ++l) {
            LinkStatistics& link = st.at(k, l);
            const double dx = s.ue_positions[k][0] - s.ap_positions[l][0];
            const double dy = s.ue_positions[k][1] - s.ap_positions[l][1];
            link.distance = std::max(1.0, std::hypot(dx, dy));
            link.theta = std::atan2(dy, dx);
            link.beta = large_scale_fading(link.distance, shadow_db[k * st.L + l]);
            link.kappa = rician_factor(link.distance, fading == Fading::rayleigh);
            link.beta_los = link.beta * link.kappa / (link.kappa + 1.0);
            link.beta_nlos = link.beta / (link.kappa + 1.0);
            link.h_bar = los_steering(link.theta, st.N, link.beta_los);
            link.R = spatial_correlation(link.theta, asd, link.beta_nlos, st.N);
        }
    }
    return st;
}

/// i.i.d. N(0, std^2) shadowing per link from the seed's shadowing stream.
inline std::vector<double> draw_shadowing(std::size_t K, std::size_t L, double std_db, std::uint64_t seed) {
    Rng rng = make_stream(seed, "shadowing");
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> out(K * L);
    for (double& v : out) v = std_db * nd(rng);
    return out;
}

inline ChannelStatistics build_statistics(const Scenario& s, const SimConfig& cfg, std::uint64_t seed) {
    return build_statistics(s, draw_shadowing(s.num_ues(), s.num_aps(), cfg.shadow_std_db, seed), cfg.asd_rad(),
                            cfg.fading);
}

/// h = h_bar + R^{1/2} w.
inline CVec sample_channel(const LinkStatistics& link, Rng& rng) {
    const CVec w = complex_normal_vector(rng, link.h_bar.size());
    return link.h_bar + psd_sqrt_factor(link.R) * w;
}

} // namespace cfmimo

#endif // CFMIMO_CHANNEL_MODEL_HPP
