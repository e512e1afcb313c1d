// thznoma - beam lending and power allocation for THz NOMA downlinks
//
// Copyright (C) 2026 the thznoma authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace thznoma {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

// Conversions used at the CLI boundary; everything internal is in watts.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Thrown when a sampled deployment produces a digital precoder too close to
// singular to invert reliably.  Callers that own the RNG resample.
class SingularChannelError : public std::runtime_error {
  public:
    explicit SingularChannelError(const std::string &what) : std::runtime_error(what) {}
};

// Thrown when an effective gain underflows so far that the feasibility
// constants would divide by zero.
class DegenerateChannelError : public std::runtime_error {
  public:
    explicit DegenerateChannelError(const std::string &what) : std::runtime_error(what) {}
};

namespace detail {
inline std::uint64_t splitmix64_step(std::uint64_t &state)
{
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
} // namespace detail

// Derives one RNG seed per (sweep point, trial).  The derivation depends only
// on the three inputs, so appending sweep points or trials to an experiment
// never perturbs the seeds of existing trials.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::size_t sweep_index, std::size_t trial_index)
{
    std::uint64_t s = master_seed;
    (void)detail::splitmix64_step(s);
    s ^= 0xA0761D6478BD642FULL * (static_cast<std::uint64_t>(sweep_index) + 1);
    (void)detail::splitmix64_step(s);
    s ^= 0xE7037ED1A0B428DBULL * (static_cast<std::uint64_t>(trial_index) + 1);
    return detail::splitmix64_step(s);
}

} // namespace thznoma
