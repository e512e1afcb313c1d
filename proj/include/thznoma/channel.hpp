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
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "config.hpp"

namespace thznoma {

// User drop: angles in radians measured from broadside, distances in meters,
// and one scalar fading coefficient per user.
struct Deployment {
    Eigen::VectorXd theta_P; // K primary angles
    Eigen::VectorXd r_P;     // K primary distances
    Eigen::VectorXd theta_S; // M secondary angles
    Eigen::VectorXd r_S;     // M secondary distances
    Eigen::VectorXcd a_P;    // K primary fading coefficients
    Eigen::VectorXcd a_S;    // M secondary fading coefficients
};

// Hybrid beamforming state: per-beam analog codewords, the zero-forcing
// digital precoder and the resulting unit-norm composite beams.
struct BeamSet {
    std::vector<int> codeword; // selected codebook index per beam
    Eigen::MatrixXcd analog;    // N x K, column k is the selected codeword
    Eigen::MatrixXcd digital;   // K x K zero-forcing precoder (rescaled)
    Eigen::MatrixXcd composite; // N x K, unit-norm columns analog * digital
};

// Everything the allocation problem needs to know about one channel draw:
// effective beam gains on both user classes plus the per-pair feasibility
// constants.  Scenario constants required to evaluate rates are carried
// along so the struct is self-contained.
struct EffectiveGains {
    Eigen::MatrixXd hP; // K x K, hP(k, i): gain of beam i at primary user k
    Eigen::MatrixXd hS; // M x K, hS(j, k): gain of beam k at secondary user j
    Eigen::VectorXd c;  // K, primary QoS headroom constants
    Eigen::MatrixXd b;  // M x K, secondary decoding headroom constants
    Eigen::MatrixXd t;  // M x K, cross-beam primary interference plus noise

    double rho_P = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd R_bar;

    int K() const { return static_cast<int>(hP.rows()); }
    int M() const { return static_cast<int>(hS.rows()); }
};

// Array response of the ULA.  Entry n is exp(-j*2*pi*n*f_c*d*sin(theta)/c),
// so entry 0 is always 1 and the whole vector is 2*pi periodic in theta.
inline Eigen::VectorXcd steering_vector(double theta, const SystemConfig &cfg)
{
    Eigen::VectorXcd a(cfg.N);
    const double phase_step = -2.0 * M_PI * cfg.f_c * cfg.d_spacing * std::sin(theta) / kSpeedOfLight;
    for (int n = 0; n < cfg.N; n++)
        a(n) = std::polar(1.0, phase_step * static_cast<double>(n));
    return a;
}

// Analog beamsteering codebook: N_Q columns, column q is the normalized
// array response at angle 2*pi*q/N_Q.  Every column has unit norm.
inline Eigen::MatrixXcd build_codebook(const SystemConfig &cfg)
{
    Eigen::MatrixXcd cb(cfg.N, cfg.N_Q);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.N));
    for (int q = 0; q < cfg.N_Q; q++)
        cb.col(q) = scale * steering_vector(2.0 * M_PI * q / cfg.N_Q, cfg);
    return cb;
}

// Spreading loss, molecular absorption and the +1 that keeps the law finite
// at r = 0.  Monotone increasing in r.
inline double path_loss(double r, const SystemConfig &cfg)
{
    const double spread = 4.0 * M_PI * cfg.f_c / kSpeedOfLight;
    return spread * spread * std::exp(cfg.zeta * r) * (std::pow(r, cfg.alpha_PL) + 1.0);
}

// Picks, for each primary user, the codeword with the largest correlation
// magnitude |a(theta)^H q|.  Ties resolve to the lowest codeword index.
inline std::vector<int> select_analog_beams(const Eigen::VectorXd &theta_P, const Eigen::MatrixXcd &codebook,
                                            const SystemConfig &cfg)
{
    std::vector<int> pick(theta_P.size());
    for (int k = 0; k < theta_P.size(); k++) {
        const Eigen::VectorXcd a = steering_vector(theta_P(k), cfg);
        int best = 0;
        double best_corr = -1.0;
        for (int q = 0; q < codebook.cols(); q++) {
            const double corr = std::abs(a.dot(codebook.col(q)));
            if (corr > best_corr) {
                best_corr = corr;
                best = q;
            }
        }
        pick[static_cast<std::size_t>(k)] = best;
    }
    return pick;
}

// Zero-forcing digital stage.  `effective` is the K x K matrix with rows
// a(theta_k)^H * analog.  Throws SingularChannelError when the matrix is
// numerically singular (singular value ratio below 1e-10); the caller is
// expected to resample the deployment.  Both the digital columns and the
// composite beams are rescaled so every composite beam has unit norm.
inline void zf_digital(const Eigen::MatrixXcd &effective, const Eigen::MatrixXcd &analog, Eigen::MatrixXcd &digital,
                       Eigen::MatrixXcd &composite)
{
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(effective);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smax > 0.0) || smin < 1e-10 * smax)
        throw SingularChannelError("zf_digital: effective channel is numerically singular");

    digital = effective.inverse();
    composite = analog * digital;
    for (int k = 0; k < composite.cols(); k++) {
        const double nrm = composite.col(k).norm();
        composite.col(k) /= nrm;
        digital.col(k) /= nrm;
    }
}

// Builds the full hybrid beam set for a deployment: codebook selection by
// correlation, then the zero-forcing digital stage on the selected columns.
inline BeamSet build_beams(const SystemConfig &cfg, const Deployment &dep)
{
    const Eigen::MatrixXcd codebook = build_codebook(cfg);
    BeamSet beams;
    beams.codeword = select_analog_beams(dep.theta_P, codebook, cfg);
    beams.analog.resize(cfg.N, cfg.K);
    for (int k = 0; k < cfg.K; k++)
        beams.analog.col(k) = codebook.col(beams.codeword[static_cast<std::size_t>(k)]);

    Eigen::MatrixXcd effective(cfg.K, cfg.K);
    for (int k = 0; k < cfg.K; k++)
        effective.row(k) = steering_vector(dep.theta_P(k), cfg).adjoint() * beams.analog;
    zf_digital(effective, beams.analog, beams.digital, beams.composite);
    return beams;
}

// Primary users sit on an angular grid facing the array; secondary users are
// dropped uniformly.  Distances come from uniform drops in a square ahead of
// the array, so they lie in (0, edge * sqrt(1.25)].
inline Deployment sample_deployment(const SystemConfig &cfg, std::mt19937_64 &rng)
{
    Deployment dep;
    dep.theta_P.resize(cfg.K);
    dep.r_P.resize(cfg.K);
    dep.theta_S.resize(cfg.M);
    dep.r_S.resize(cfg.M);
    dep.a_P = Eigen::VectorXcd::Ones(cfg.K);
    dep.a_S = Eigen::VectorXcd::Ones(cfg.M);

    const double half_pi = M_PI / 2.0;
    const double clamp = half_pi - 1e-6;
    for (int k = 0; k < cfg.K; k++) {
        double th = (static_cast<double>(k + 1) / cfg.K) * M_PI - half_pi;
        dep.theta_P(k) = std::min(std::max(th, -clamp), clamp);
    }

    auto square_distance = [&rng](double edge) {
        std::uniform_real_distribution<double> ahead(0.0, edge);
        std::uniform_real_distribution<double> across(-edge / 2.0, edge / 2.0);
        const double x = ahead(rng);
        const double y = across(rng);
        return std::max(std::hypot(x, y), 1e-9);
    };

    for (int k = 0; k < cfg.K; k++)
        dep.r_P(k) = square_distance(cfg.L_P);

    std::uniform_real_distribution<double> angle(-half_pi, half_pi);
    for (int j = 0; j < cfg.M; j++)
        dep.theta_S(j) = angle(rng);
    for (int j = 0; j < cfg.M; j++)
        dep.r_S(j) = square_distance(cfg.r_S);

    if (cfg.fading == FadingModel::complex_normal) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (int k = 0; k < cfg.K; k++)
            dep.a_P(k) = std::complex<double>(gauss(rng), gauss(rng)) * inv_sqrt2;
        for (int j = 0; j < cfg.M; j++)
            dep.a_S(j) = std::complex<double>(gauss(rng), gauss(rng)) * inv_sqrt2;
    }
    return dep;
}

// Effective gains and feasibility constants for one deployment and beam set.
//
// hP(k, i) = |a_k|^2 / PL(r_k) * |a(theta_k)^H f_i|^2 and likewise for the
// secondary users.  c, b and t condense the QoS constraints:
//   c(k) <= 0  iff the primary user on beam k still meets its rate target
//              when a secondary user spends -c(k) watts on that beam,
//   b(j, k) <= 0 iff secondary user j can decode the primary signal on
//              beam k at the primary's target rate,
//   t(j, k) = cross-beam primary interference plus noise at user j.
inline EffectiveGains compute_effective(const SystemConfig &cfg, const Deployment &dep, const BeamSet &beams)
{
    EffectiveGains g;
    g.hP.resize(cfg.K, cfg.K);
    g.hS.resize(cfg.M, cfg.K);
    g.c.resize(cfg.K);
    g.b.resize(cfg.M, cfg.K);
    g.t.resize(cfg.M, cfg.K);
    g.rho_P = cfg.rho_P;
    g.sigma2 = cfg.sigma2;
    g.R_bar = cfg.R_bar;

    for (int k = 0; k < cfg.K; k++) {
        const double row_gain = std::norm(dep.a_P(k)) / path_loss(dep.r_P(k), cfg);
        const Eigen::VectorXcd a = steering_vector(dep.theta_P(k), cfg);
        for (int i = 0; i < cfg.K; i++)
            g.hP(k, i) = row_gain * std::norm(a.dot(beams.composite.col(i)));
        if (g.hP(k, k) < 1e-300)
            throw DegenerateChannelError("compute_effective: primary gain underflow");
    }
    for (int j = 0; j < cfg.M; j++) {
        const double row_gain = std::norm(dep.a_S(j)) / path_loss(dep.r_S(j), cfg);
        const Eigen::VectorXcd a = steering_vector(dep.theta_S(j), cfg);
        for (int k = 0; k < cfg.K; k++)
            g.hS(j, k) = row_gain * std::norm(a.dot(beams.composite.col(k)));
        for (int k = 0; k < cfg.K; k++)
            if (g.hS(j, k) < 1e-300)
                throw DegenerateChannelError("compute_effective: secondary gain underflow");
    }

    for (int k = 0; k < cfg.K; k++) {
        double interf = 0.0;
        for (int i = 0; i < cfg.K; i++)
            if (i != k)
                interf += g.hP(k, i) * cfg.rho_P;
        g.c(k) = interf / g.hP(k, k) - cfg.rho_P / (std::exp2(cfg.R_bar(k)) - 1.0) + cfg.sigma2 / g.hP(k, k);
    }
    for (int j = 0; j < cfg.M; j++) {
        for (int k = 0; k < cfg.K; k++) {
            double interf = 0.0;
            for (int i = 0; i < cfg.K; i++)
                if (i != k)
                    interf += g.hS(j, i) * cfg.rho_P;
            g.t(j, k) = interf + cfg.sigma2;
            g.b(j, k) = interf / g.hS(j, k) - cfg.rho_P / (std::exp2(cfg.R_bar(k)) - 1.0) + cfg.sigma2 / g.hS(j, k);
        }
    }
    return g;
}

// One-call instance generator: sample, beamform, reduce.  Propagates
// SingularChannelError / DegenerateChannelError from the stages.
inline EffectiveGains sample_instance(const SystemConfig &cfg, std::mt19937_64 &rng, Deployment *dep_out = nullptr,
                                      BeamSet *beams_out = nullptr)
{
    const Deployment dep = sample_deployment(cfg, rng);
    const BeamSet beams = build_beams(cfg, dep);
    EffectiveGains g = compute_effective(cfg, dep, beams);
    if (dep_out != nullptr)
        *dep_out = dep;
    if (beams_out != nullptr)
        *beams_out = beams;
    return g;
}

} // namespace thznoma
