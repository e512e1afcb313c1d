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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "support/oracles.hpp"

using namespace thznoma;

namespace {

SystemConfig small_config(int N, int K, int M, int N_Q)
{
    SystemConfig cfg;
    cfg.N = N;
    cfg.K = K;
    cfg.M = M;
    cfg.N_Q = N_Q;
    cfg.R_bar = Eigen::VectorXd::Ones(K);
    return cfg;
}

} // namespace

TEST_CASE("steering vector at broadside is all ones", "[channel]")
{
    SystemConfig cfg = small_config(4, 2, 1, 4);
    const Eigen::VectorXcd a = steering_vector(0.0, cfg);
    REQUIRE(a.size() == 4);
    for (int n = 0; n < 4; n++) {
        CHECK(a(n).real() == Catch::Approx(1.0).margin(1e-15));
        CHECK(a(n).imag() == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("steering vector entries are unit modulus and self-correlation is N", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 1, 8);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    for (int trial = 0; trial < 20; trial++) {
        const double theta = angle(rng);
        const Eigen::VectorXcd a = steering_vector(theta, cfg);
        for (int n = 0; n < cfg.N; n++)
            CHECK(std::abs(a(n)) == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(a.dot(a)) == Catch::Approx(8.0).epsilon(1e-12));
    }
}

TEST_CASE("steering vector phase depends on the angle only through its sine", "[channel]")
{
    SystemConfig cfg = small_config(6, 2, 1, 6);
    const double theta = 0.4;
    const Eigen::VectorXcd a1 = steering_vector(theta, cfg);
    const Eigen::VectorXcd a2 = steering_vector(M_PI - theta, cfg);
    CHECK((a1 - a2).norm() < 1e-12);
}

TEST_CASE("steering vector second entry at thirty degrees with two antennas", "[channel]")
{
    // half-wavelength spacing turns sin(pi/6) = 1/2 into a phase of -pi/2
    SystemConfig cfg = small_config(2, 2, 1, 4);
    const Eigen::VectorXcd a = steering_vector(M_PI / 6.0, cfg);
    CHECK(a(1).real() == Catch::Approx(0.0).margin(1e-12));
    CHECK(a(1).imag() == Catch::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("codebook columns are normalized responses on the angular grid", "[channel]")
{
    SystemConfig cfg = small_config(4, 2, 1, 8);
    const Eigen::MatrixXcd cb = build_codebook(cfg);
    REQUIRE(cb.cols() == 8);
    for (int q = 0; q < 8; q++)
        CHECK(cb.col(q).squaredNorm() == Catch::Approx(1.0).epsilon(1e-12));

    // column 2 sits at angle pi/2, so its phase step is -pi per antenna
    for (int n = 0; n < 4; n++) {
        const std::complex<double> want = std::polar(0.5, -M_PI * n);
        CHECK(std::abs(cb(n, 2) - want) < 1e-12);
    }

    SystemConfig tiny = small_config(4, 2, 1, 4);
    tiny.N_Q = 1;
    const Eigen::MatrixXcd one = build_codebook(tiny);
    REQUIRE(one.cols() == 1);
    CHECK((one.col(0) - 0.5 * steering_vector(0.0, tiny)).norm() < 1e-14);
}

TEST_CASE("path loss matches its definition and grows with distance", "[channel]")
{
    SystemConfig cfg = small_config(4, 2, 1, 4);
    const double spread = 4.0 * M_PI * cfg.f_c / kSpeedOfLight;

    CHECK(path_loss(0.0, cfg) == Catch::Approx(spread * spread).epsilon(1e-12));
    CHECK(path_loss(0.0, cfg) == Catch::Approx(1.5813e8).epsilon(1e-3));
    CHECK(path_loss(10.0, cfg) ==
          Catch::Approx(spread * spread * std::exp(0.05) * 101.0).epsilon(1e-12));

    double prev = path_loss(0.0, cfg);
    for (double r : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
        const double pl = path_loss(r, cfg);
        CHECK(pl > prev);
        prev = pl;
    }
}

TEST_CASE("analog beam selection maximizes codeword correlation", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 1, 16);
    const Eigen::MatrixXcd cb = build_codebook(cfg);

    // a grid angle matches its own codeword with correlation sqrt(N)
    Eigen::VectorXd theta(1);
    theta(0) = 2.0 * M_PI * 3.0 / 16.0;
    const auto pick = select_analog_beams(theta, cb, cfg);
    REQUIRE(pick.size() == 1);
    CHECK(pick[0] == 3);
    const double corr = std::abs(steering_vector(theta(0), cfg).dot(cb.col(3)));
    CHECK(corr == Catch::Approx(std::sqrt(8.0)).epsilon(1e-12));

    // off-grid angle: every codeword correlation is at most the chosen one
    theta(0) = 0.3;
    const int best = select_analog_beams(theta, cb, cfg)[0];
    const Eigen::VectorXcd a = steering_vector(0.3, cfg);
    for (int q = 0; q < cb.cols(); q++)
        CHECK(std::abs(a.dot(cb.col(q))) <= std::abs(a.dot(cb.col(best))) + 1e-12);
}

TEST_CASE("analog beam selection breaks ties toward the lower index", "[channel]")
{
    SystemConfig cfg = small_config(4, 2, 1, 4);
    Eigen::MatrixXcd cb(4, 2);
    cb.col(0) = 0.5 * steering_vector(0.2, cfg);
    cb.col(1) = cb.col(0);
    Eigen::VectorXd theta(1);
    theta(0) = 0.9;
    CHECK(select_analog_beams(theta, cb, cfg)[0] == 0);
}

TEST_CASE("zero forcing with one user keeps the analog beam direction", "[channel]")
{
    SystemConfig cfg = small_config(4, 1, 1, 8);
    cfg.R_bar = Eigen::VectorXd::Ones(1);
    Deployment dep;
    dep.theta_P = Eigen::VectorXd::Constant(1, 0.37);
    dep.r_P = Eigen::VectorXd::Constant(1, 5.0);
    dep.theta_S = Eigen::VectorXd::Constant(1, -0.2);
    dep.r_S = Eigen::VectorXd::Constant(1, 4.0);
    dep.a_P = Eigen::VectorXcd::Ones(1);
    dep.a_S = Eigen::VectorXcd::Ones(1);

    const BeamSet beams = build_beams(cfg, dep);
    CHECK(beams.composite.col(0).norm() == Catch::Approx(1.0).epsilon(1e-12));
    const double align = std::abs(beams.composite.col(0).dot(beams.analog.col(0)));
    CHECK(align == Catch::Approx(beams.analog.col(0).norm()).epsilon(1e-12));
}

TEST_CASE("zero forcing on orthogonal matched beams is a scaled identity", "[channel]")
{
    SystemConfig cfg = small_config(4, 2, 1, 4);
    Deployment dep;
    dep.theta_P.resize(2);
    dep.theta_P << 0.0, M_PI / 2.0; // grid angles with orthogonal responses
    dep.r_P = Eigen::VectorXd::Constant(2, 5.0);
    dep.theta_S = Eigen::VectorXd::Constant(1, 0.1);
    dep.r_S = Eigen::VectorXd::Constant(1, 4.0);
    dep.a_P = Eigen::VectorXcd::Ones(2);
    dep.a_S = Eigen::VectorXcd::Ones(1);

    const BeamSet beams = build_beams(cfg, dep);
    CHECK(beams.codeword[0] == 0);
    CHECK(beams.codeword[1] == 1); // codebook angle pi/2

    CHECK(std::abs(beams.digital(0, 1)) < 1e-12);
    CHECK(std::abs(beams.digital(1, 0)) < 1e-12);
    CHECK(std::abs(beams.digital(0, 0)) == Catch::Approx(std::abs(beams.digital(1, 1))).epsilon(1e-12));
}

TEST_CASE("zero forcing suppresses cross-user leakage", "[channel]")
{
    SystemConfig cfg = small_config(8, 3, 1, 16);
    cfg.R_bar = Eigen::VectorXd::Ones(3);
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int trial = 0; trial < 10 && checked < 5; trial++) {
        Deployment dep;
        try {
            dep = sample_deployment(cfg, rng);
            const BeamSet beams = build_beams(cfg, dep);
            for (int k = 0; k < 3; k++) {
                const Eigen::VectorXcd a = steering_vector(dep.theta_P(k), cfg);
                const double own = std::abs(a.dot(beams.composite.col(k)));
                for (int i = 0; i < 3; i++) {
                    if (i == k)
                        continue;
                    CHECK(std::abs(a.dot(beams.composite.col(i))) < 1e-8 * std::max(1.0, own));
                }
            }
            checked++;
        } catch (const SingularChannelError &) {
        }
    }
    REQUIRE(checked >= 3);
}

TEST_CASE("zero forcing rejects a singular effective channel", "[channel]")
{
    Eigen::MatrixXcd effective(2, 2);
    effective << 1.0, 1.0, 1.0, 1.0;
    Eigen::MatrixXcd analog = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd digital, composite;
    CHECK_THROWS_AS(zf_digital(effective, analog, digital, composite), SingularChannelError);
}

TEST_CASE("effective gains reproduce their defining quantities", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 2, 10);
    cfg.R_bar = Eigen::VectorXd::Ones(2);
    std::mt19937_64 rng(23);
    const Deployment dep = sample_deployment(cfg, rng);
    const BeamSet beams = build_beams(cfg, dep);
    const EffectiveGains g = compute_effective(cfg, dep, beams);

    for (int k = 0; k < 2; k++) {
        const Eigen::VectorXcd a = steering_vector(dep.theta_P(k), cfg);
        const double want = std::norm(dep.a_P(k)) / path_loss(dep.r_P(k), cfg) *
                            std::norm(a.dot(beams.composite.col(k)));
        CHECK(g.hP(k, k) == Catch::Approx(want).epsilon(1e-12));
    }
    for (int j = 0; j < 2; j++) {
        for (int k = 0; k < 2; k++) {
            double interf = 0.0;
            for (int i = 0; i < 2; i++)
                if (i != k)
                    interf += g.hS(j, i) * cfg.rho_P;
            CHECK(g.t(j, k) == Catch::Approx(interf + cfg.sigma2).epsilon(1e-12));
        }
    }
}

TEST_CASE("qos headroom sign matches the legacy primary rate", "[channel]")
{
    SystemConfig cfg = small_config(8, 3, 2, 12);
    cfg.R_bar = Eigen::VectorXd::Ones(3);
    std::mt19937_64 rng(31);
    int seen_ok = 0;
    for (int trial = 0; trial < 20; trial++) {
        EffectiveGains g;
        try {
            g = sample_instance(cfg, rng);
        } catch (const SingularChannelError &) {
            continue;
        }
        const RateReport legacy = true_rates(g, {});
        for (int k = 0; k < 3; k++) {
            if (std::abs(g.c(k)) < 1e-9)
                continue; // skip draws sitting on the boundary
            CHECK((g.c(k) < 0.0) == (legacy.primary(k) >= cfg.R_bar(k)));
        }
        seen_ok++;
    }
    REQUIRE(seen_ok >= 10);
}

TEST_CASE("headroom constants mark the exact rate boundary", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 1, 10);
    cfg.R_bar = Eigen::VectorXd::Ones(2);
    std::mt19937_64 rng(41);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 8; trial++) {
        EffectiveGains g;
        try {
            g = sample_instance(cfg, rng);
        } catch (const SingularChannelError &) {
            continue;
        }
        for (int k = 0; k < 2; k++) {
            // spending exactly -c on beam k pins that beam's primary at target
            if (!(g.c(k) < 0.0) || -g.c(k) > 1e6)
                continue;
            const RateReport at_c = true_rates(g, {{0, k, -g.c(k)}});
            CHECK(at_c.primary(k) == Catch::Approx(cfg.R_bar(k)).epsilon(1e-9));
            // spending exactly -b pins the decoding stage at target
            if (!(g.b(0, k) < 0.0) || -g.b(0, k) > 1e6)
                continue;
            const RateReport at_b = true_rates(g, {{0, k, -g.b(0, k)}});
            REQUIRE(at_b.decoding.size() == 1);
            CHECK(at_b.decoding[0] == Catch::Approx(cfg.R_bar(k)).epsilon(1e-9));
            checked++;
        }
    }
    REQUIRE(checked >= 4);
}

TEST_CASE("vanishing rate targets push the headroom constants down", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 1, 10);
    cfg.R_bar = Eigen::VectorXd::Constant(2, 1e-12);
    const auto g = testsupport::sample_gains(cfg, 5);
    REQUIRE(g.has_value());
    for (int k = 0; k < 2; k++)
        CHECK(g->c(k) < -1e10);
    CHECK(g->b.minCoeff() < -1e10);
}

TEST_CASE("deployments use the fixed angular grid and bounded distances", "[channel]")
{
    SystemConfig cfg = small_config(8, 2, 3, 10);
    cfg.R_bar = Eigen::VectorXd::Ones(2);
    std::mt19937_64 rng(17);
    const Deployment dep = sample_deployment(cfg, rng);

    CHECK(dep.theta_P(0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(dep.theta_P(1) == Catch::Approx(M_PI / 2.0 - 1e-6).margin(1e-12));

    const double edge_cap = cfg.L_P * std::sqrt(1.25) + 1e-12;
    for (int k = 0; k < 2; k++) {
        CHECK(dep.r_P(k) > 0.0);
        CHECK(dep.r_P(k) <= edge_cap);
    }
    for (int j = 0; j < 3; j++) {
        CHECK(dep.r_S(j) > 0.0);
        CHECK(dep.r_S(j) <= cfg.r_S * std::sqrt(1.25) + 1e-12);
        CHECK(std::abs(dep.theta_S(j)) < M_PI / 2.0);
    }

    std::mt19937_64 rng2(17);
    const Deployment again = sample_deployment(cfg, rng2);
    CHECK((dep.theta_S - again.theta_S).norm() == 0.0);
    CHECK((dep.r_P - again.r_P).norm() == 0.0);
    CHECK((dep.r_S - again.r_S).norm() == 0.0);
}

TEST_CASE("single-beam selection maximizes the own gain over the codebook", "[channel]")
{
    SystemConfig cfg = small_config(8, 1, 1, 12);
    cfg.R_bar = Eigen::VectorXd::Ones(1);
    std::mt19937_64 rng(53);
    const Deployment dep = sample_deployment(cfg, rng);
    const BeamSet beams = build_beams(cfg, dep);

    const Eigen::MatrixXcd cb = build_codebook(cfg);
    const Eigen::VectorXcd a = steering_vector(dep.theta_P(0), cfg);
    const double chosen = std::abs(a.dot(cb.col(beams.codeword[0])));
    for (int q = 0; q < cb.cols(); q++)
        CHECK(std::abs(a.dot(cb.col(q))) <= chosen + 1e-12);
}
