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

#ifndef CFMIMO_RNG_HPP
#define CFMIMO_RNG_HPP

#include "cfmimo/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace cfmimo {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Seed of the independent stream identified by (root seed, purpose, index).
/// Streams never depend on scheduling, so any partition of trials over
/// workers draws exactly the same numbers.
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0) {
    std::uint64_t s = detail::splitmix64(root);
    s = detail::splitmix64(s ^ detail::fnv1a(purpose));
    return detail::splitmix64(s ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0) {
    return Rng(stream_seed(root, purpose, index));
}

/// Circularly symmetric CN(0, 1) sample.
inline cplx complex_normal(Rng& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

inline CVec complex_normal_vector(Rng& rng, Eigen::Index n) {
    CVec w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = complex_normal(rng);
    return w;
}

} // namespace cfmimo

#endif // CFMIMO_RNG_HPP
