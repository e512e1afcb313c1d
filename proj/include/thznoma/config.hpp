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

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "common.hpp"

namespace thznoma {

enum class FadingModel {
    unit,          // |a| = 1, zero phase
    complex_normal // a ~ CN(0, 1)
};

// Full scenario description.  Powers are stored in watts; use dbm_to_watts
// when filling the struct from user-facing inputs.
struct SystemConfig {
    int N = 10;   // base station antennas (ULA)
    int K = 4;    // pre-configured beams / legacy primary users
    int M = 4;    // secondary users
    int N_Q = 10; // analog codebook size

    double f_c = 300e9;                              // carrier frequency, Hz
    double d_spacing = kSpeedOfLight / (2.0 * f_c);  // antenna spacing, m
    double zeta = 5e-3;                              // molecular absorption coefficient, 1/m
    double alpha_PL = 2.0;                           // path loss exponent

    double sigma2 = dbm_to_watts(-90.0); // noise power, W
    double rho_P = dbm_to_watts(30.0);   // per-primary-user transmit power, W
    double P_max = dbm_to_watts(30.0);   // secondary power budget, W

    Eigen::VectorXd R_bar = Eigen::VectorXd::Ones(4); // per-beam primary QoS targets, BPCU

    double L_P = 10.0; // edge of the square that primary users are dropped in, m
    double r_S = 10.0; // edge of the square that secondary users are dropped in, m

    double xi = 1e8; // penalty weight discouraging two secondary users on one beam

    std::uint64_t seed = 1;
    FadingModel fading = FadingModel::unit;

    void validate() const
    {
        if (N < 1)
            throw std::invalid_argument("SystemConfig: N must be >= 1");
        if (K < 1 || K > N)
            throw std::invalid_argument("SystemConfig: K must satisfy 1 <= K <= N");
        if (M < 1)
            throw std::invalid_argument("SystemConfig: M must be >= 1");
        if (N_Q < K)
            throw std::invalid_argument("SystemConfig: N_Q must be >= K");
        if (!(f_c > 0.0) || !(d_spacing > 0.0))
            throw std::invalid_argument("SystemConfig: f_c and d_spacing must be positive");
        if (zeta < 0.0 || alpha_PL < 0.0)
            throw std::invalid_argument("SystemConfig: zeta and alpha_PL must be nonnegative");
        if (!(sigma2 > 0.0))
            throw std::invalid_argument("SystemConfig: sigma2 must be positive");
        if (rho_P < 0.0 || P_max < 0.0)
            throw std::invalid_argument("SystemConfig: powers must be nonnegative");
        if (R_bar.size() != K)
            throw std::invalid_argument("SystemConfig: R_bar must have one entry per beam");
        if ((R_bar.array() < 0.0).any())
            throw std::invalid_argument("SystemConfig: R_bar entries must be nonnegative");
        if (!(L_P > 0.0) || !(r_S > 0.0))
            throw std::invalid_argument("SystemConfig: deployment edges must be positive");
        if (xi < 0.0)
            throw std::invalid_argument("SystemConfig: xi must be nonnegative");
    }
};

// Baseline scenario used by the bundled experiments: 300 GHz carrier,
// half-wavelength spacing, 10 m coverage squares, 30 dBm power budgets,
// -90 dBm noise and a 1 BPCU target on every beam.
inline SystemConfig default_config()
{
    SystemConfig cfg;
    cfg.R_bar = Eigen::VectorXd::Ones(cfg.K);
    return cfg;
}

// Convenience for sweeps that change K: keeps R_bar consistent by
// broadcasting one target to every beam.
inline void set_uniform_rate_target(SystemConfig &cfg, double r_bar)
{
    cfg.R_bar = Eigen::VectorXd::Constant(cfg.K, r_bar);
}

} // namespace thznoma
