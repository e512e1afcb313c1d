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
#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <random>
#include <vector>

#include <thznoma/thznoma.hpp>

namespace testsupport {

using Rational = boost::multiprecision::cpp_rational;

// Exact reference answer for  max c . x  s.t.  A x <= b, x >= 0  computed in
// rational arithmetic: enumerate every choice of n tight rows out of the
// combined system [A; -I], solve the square system exactly, keep the best
// feasible vertex.  Only suitable for small dense programs; the region must
// be bounded for the answer to be meaningful.
struct VertexOracle {
    bool feasible = false;
    double value = 0.0;
    Eigen::VectorXd x;
};

namespace detail {

// Solves M z = r exactly; returns false when M is singular.
inline bool rational_solve(std::vector<std::vector<Rational>> M, std::vector<Rational> r,
                           std::vector<Rational> &z)
{
    const std::size_t n = r.size();
    for (std::size_t col = 0; col < n; col++) {
        std::size_t piv = col;
        while (piv < n && M[piv][col] == 0)
            piv++;
        if (piv == n)
            return false;
        std::swap(M[piv], M[col]);
        std::swap(r[piv], r[col]);
        for (std::size_t row = 0; row < n; row++) {
            if (row == col || M[row][col] == 0)
                continue;
            const Rational f = M[row][col] / M[col][col];
            for (std::size_t j = col; j < n; j++)
                M[row][j] -= f * M[col][j];
            r[row] -= f * r[col];
        }
    }
    z.resize(n);
    for (std::size_t i = 0; i < n; i++)
        z[i] = r[i] / M[i][i];
    return true;
}

} // namespace detail

inline VertexOracle vertex_enumerate_lp(const Eigen::VectorXd &c, const Eigen::MatrixXd &A,
                                        const Eigen::VectorXd &b)
{
    const int n = static_cast<int>(c.size());
    const int m = static_cast<int>(A.rows());
    const int rows = m + n; // A rows then the -x_i <= 0 rows

    std::vector<std::vector<Rational>> R(static_cast<std::size_t>(rows),
                                         std::vector<Rational>(static_cast<std::size_t>(n), Rational(0)));
    std::vector<Rational> rhs(static_cast<std::size_t>(rows), Rational(0));
    for (int i = 0; i < m; i++) {
        for (int j = 0; j < n; j++)
            R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Rational(A(i, j));
        rhs[static_cast<std::size_t>(i)] = Rational(b(i));
    }
    for (int j = 0; j < n; j++)
        R[static_cast<std::size_t>(m + j)][static_cast<std::size_t>(j)] = Rational(-1);

    std::vector<Rational> cr(static_cast<std::size_t>(n));
    for (int j = 0; j < n; j++)
        cr[static_cast<std::size_t>(j)] = Rational(c(j));

    VertexOracle out;
    Rational best_val;

    std::vector<int> pick(static_cast<std::size_t>(n));
    for (int j = 0; j < n; j++)
        pick[static_cast<std::size_t>(j)] = j;

    auto test_vertex = [&]() {
        std::vector<std::vector<Rational>> M(static_cast<std::size_t>(n),
                                             std::vector<Rational>(static_cast<std::size_t>(n)));
        std::vector<Rational> r(static_cast<std::size_t>(n));
        for (int i = 0; i < n; i++) {
            M[static_cast<std::size_t>(i)] = R[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
            r[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
        }
        std::vector<Rational> z;
        if (!detail::rational_solve(M, r, z))
            return;
        for (int i = 0; i < rows; i++) {
            Rational lhs(0);
            for (int j = 0; j < n; j++)
                lhs += R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(j)];
            if (lhs > rhs[static_cast<std::size_t>(i)])
                return;
        }
        Rational val(0);
        for (int j = 0; j < n; j++)
            val += cr[static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(j)];
        if (!out.feasible || val > best_val) {
            out.feasible = true;
            best_val = val;
            out.x.resize(n);
            for (int j = 0; j < n; j++)
                out.x(j) = static_cast<double>(z[static_cast<std::size_t>(j)]);
        }
    };

    // lexicographic n-subsets of {0..rows-1}
    while (true) {
        test_vertex();
        int i = n - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == rows - n + i)
            i--;
        if (i < 0)
            break;
        pick[static_cast<std::size_t>(i)]++;
        for (int j = i + 1; j < n; j++)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    if (out.feasible)
        out.value = static_cast<double>(best_val);
    return out;
}

// One channel draw with the singular-precoder retry the harness applies.
// Returns nullopt when the configuration never produced a usable draw.
inline std::optional<thznoma::EffectiveGains> sample_gains(const thznoma::SystemConfig &cfg,
                                                           std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 32; attempt++) {
        try {
            return thznoma::sample_instance(cfg, rng);
        } catch (const thznoma::SingularChannelError &) {
        } catch (const thznoma::DegenerateChannelError &) {
        }
    }
    return std::nullopt;
}

// Convenience: channel draw reduced to the compressed allocation problem.
// Returns nullopt when sampling failed or the active set is empty.
inline std::optional<thznoma::ProblemData> sample_problem(const thznoma::SystemConfig &cfg,
                                                          std::uint64_t seed)
{
    const auto g = sample_gains(cfg, seed);
    if (!g.has_value())
        return std::nullopt;
    const thznoma::ActiveSet s = thznoma::build_active_set(*g);
    if (s.empty())
        return std::nullopt;
    return thznoma::build_problem(*g, s, cfg.P_max, cfg.xi);
}

// Hand-built gains for small synthetic scenarios: diagonal primary channel,
// caller-chosen secondary gains and feasibility constants.  t rows are
// derived from hS exactly as the channel stage would derive them.
inline thznoma::EffectiveGains synthetic_gains(const Eigen::MatrixXd &hS, const Eigen::VectorXd &c,
                                               const Eigen::MatrixXd &b, double rho_P, double sigma2,
                                               double R_bar = 1.0)
{
    const int M = static_cast<int>(hS.rows());
    const int K = static_cast<int>(hS.cols());
    thznoma::EffectiveGains g;
    g.hP = Eigen::MatrixXd::Identity(K, K);
    g.hS = hS;
    g.c = c;
    g.b = b;
    g.t.resize(M, K);
    for (int j = 0; j < M; j++) {
        for (int k = 0; k < K; k++) {
            double interf = 0.0;
            for (int i = 0; i < K; i++)
                if (i != k)
                    interf += hS(j, i) * rho_P;
            g.t(j, k) = interf + sigma2;
        }
    }
    g.rho_P = rho_P;
    g.sigma2 = sigma2;
    g.R_bar = Eigen::VectorXd::Constant(K, R_bar);
    return g;
}

} // namespace testsupport
