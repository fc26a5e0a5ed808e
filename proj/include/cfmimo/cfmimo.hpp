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

#ifndef CFMIMO_CFMIMO_HPP
#define CFMIMO_CFMIMO_HPP

#include "cfmimo/channel_model.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/detectors.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/harness.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/lsfd.hpp"
#include "cfmimo/parallel.hpp"
#include "cfmimo/plans.hpp"
#include "cfmimo/quantization.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/scheduler.hpp"
#include "cfmimo/spectral_efficiency.hpp"
#include "cfmimo/types.hpp"

#endif // CFMIMO_CFMIMO_HPP
