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

#ifndef CFMIMO_QUANTIZATION_HPP
#define CFMIMO_QUANTIZATION_HPP

#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace cfmimo {

/// Converter resolution: a positive bit count or an ideal converter.
class Resolution {
  public:
    static Resolution ideal() { return Resolution{}; }
    static Resolution bits(int b) {
        if (b <= 0) throw ConfigError("resolution: bit count must be positive, got " + std::to_string(b));
        Resolution r;
        r.bits_ = b;
        return r;
    }

    bool is_ideal() const { return !bits_.has_value(); }
    int bit_count() const { return bits_.value(); }
    std::string to_string() const { return is_ideal() ? "ideal" : std::to_string(*bits_); }

    friend bool operator==(const Resolution&, const Resolution&) = default;

  private:
    std::optional<int> bits_;
};

/// Distortion factors for the 1..5 bit converters.
inline constexpr std::array<double, 5> kDistortionTable = {0.3634, 0.1175, 0.03454, 0.009497, 0.002499};

/// Fraction of signal variance lost to quantization. Table values for
/// b <= 5, sqrt(3) * pi * 2^(-2b-1) above, zero for ideal converters.
inline double distortion_factor(Resolution r) {
    if (r.is_ideal()) return 0.0;
    const int b = r.bit_count();
    if (b <= 5) return kDistortionTable[static_cast<std::size_t>(b - 1)];
    return std::sqrt(3.0) * pi * std::pow(2.0, -2.0 * b - 1.0);
}

inline double distortion_factor(int bits) { return distortion_factor(Resolution::bits(bits)); }

struct QuantizerConfig {
    Resolution dac = Resolution::ideal();
    Resolution adc = Resolution::ideal();
    double rho_da = 0.0;
    double rho_ad = 0.0;

    static QuantizerConfig from_resolution(Resolution dac, Resolution adc) {
        return {dac, adc, distortion_factor(dac), distortion_factor(adc)};
    }
    static QuantizerConfig ideal_hardware() { return from_resolution(Resolution::ideal(), Resolution::ideal()); }

    /// Builds a config straight from distortion factors (used by tests and
    /// sweeps over continuous rho).
    static QuantizerConfig from_factors(double rho_da, double rho_ad) {
        if (!(rho_da >= 0.0 && rho_da < 1.0)) throw ConfigError("rho_da must lie in [0, 1)");
        if (!(rho_ad >= 0.0 && rho_ad < 1.0)) throw ConfigError("rho_ad must lie in [0, 1)");
        QuantizerConfig q;
        q.rho_da = rho_da;
        q.rho_ad = rho_ad;
        return q;
    }

    /// (1 - rho_ad): the linear ADC gain.
    double adc_gain() const { return 1.0 - rho_ad; }
};

namespace detail {

inline void check_covariance_diag(const RVec& cov_diag, Eigen::Index n) {
    if (cov_diag.size() != n) throw ConfigError("cov_diag_x: size does not match the signal");
    if ((cov_diag.array() < 0.0).any()) throw ConfigError("cov_diag_x: negative covariance entry");
}

} // namespace detail

/// DAC output sqrt(1 - rho) x + n, n ~ CN(0, rho diag(E[x x^H])) drawn
/// independently of x. `cov_diag_x` is the ensemble diagonal of E[x x^H].
inline CVec dac_apply(const CVec& x, double rho_da, const RVec& cov_diag_x, Rng& rng) {
    detail::check_covariance_diag(cov_diag_x, x.size());
    CVec out = std::sqrt(1.0 - rho_da) * x;
    if (rho_da == 0.0) return out;
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) += std::sqrt(rho_da * cov_diag_x(i)) * complex_normal(rng);
    return out;
}

/// ADC output (1 - rho) x + n, n ~ CN(0, rho (1 - rho) diag(E[x x^H])).
inline CVec adc_apply(const CVec& x, double rho_ad, const RVec& cov_diag_x, Rng& rng) {
    detail::check_covariance_diag(cov_diag_x, x.size());
    CVec out = (1.0 - rho_ad) * x;
    if (rho_ad == 0.0) return out;
    const double scale = rho_ad * (1.0 - rho_ad);
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) += std::sqrt(scale * cov_diag_x(i)) * complex_normal(rng);
    return out;
}

/// Covariance of the effective receiver noise at one AP, shared by the
/// pilot and data phases:
///
///   (1-rho_ad)^2 rho_da/(1-rho_da) G + rho_ad(1-rho_ad)/(1-rho_da) diag(G)
///     + (1-rho_ad) sigma2 I,
///
/// where G = Hbar P Hbar^H + sum_i p_i R_i is the AP load computed with the
/// effective powers p_i = (1-rho_da) p_i^tx.
inline CMat received_noise_covariance(const CMat& load, double sigma2, const QuantizerConfig& q) {
    const double a = 1.0 - q.rho_ad;
    const double da = 1.0 - q.rho_da;
    CMat c = (a * a * q.rho_da / da) * load;
    c.diagonal() += (q.rho_ad * a / da) * load.diagonal();
    c.diagonal().array() += a * sigma2;
    return c;
}

/// The part of the receiver noise that does not scale with the UE symbols:
/// thermal noise after the ADC gain plus the ADC distortion.
inline CMat adc_thermal_covariance(const CMat& load, double sigma2, const QuantizerConfig& q) {
    const double a = 1.0 - q.rho_ad;
    const Eigen::Index n = load.rows();
    CMat c = CMat::Zero(n, n);
    c.diagonal() = (q.rho_ad * a / (1.0 - q.rho_da)) * load.diagonal();
    c.diagonal().array() += a * sigma2;
    return c;
}

} // namespace cfmimo

#endif // CFMIMO_QUANTIZATION_HPP
