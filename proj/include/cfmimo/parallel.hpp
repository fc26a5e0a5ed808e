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

#ifndef CFMIMO_PARALLEL_HPP
#define CFMIMO_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cfmimo {

inline constexpr const char* kWorkersEnv = "CFMIMO_WORKERS";

/// Worker count from CFMIMO_WORKERS, falling back to the hardware thread count.
inline std::size_t default_workers() {
    if (const char* env = std::getenv(kWorkersEnv)) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs `fn(block, begin, end)` over fixed-size blocks of [0, n) and returns
/// the per-block results in block order. Block boundaries depend only on
/// `block_size`, so reducing the returned vector front to back is bitwise
/// reproducible for any worker count.
template <class Fn>
auto run_blocks(std::size_t n, std::size_t block_size, std::size_t workers, Fn&& fn) {
    using Result = decltype(fn(std::size_t{}, std::size_t{}, std::size_t{}));
    block_size = std::max<std::size_t>(1, block_size);
    const std::size_t blocks = (n + block_size - 1) / block_size;
    std::vector<Result> out(blocks);
    if (blocks == 0) return out;

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= blocks) return;
            try {
                const std::size_t begin = b * block_size;
                out[b] = fn(b, begin, std::min(n, begin + block_size));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, blocks);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace cfmimo

#endif // CFMIMO_PARALLEL_HPP
