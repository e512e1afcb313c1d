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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "channel.hpp"

namespace thznoma {

// Pairs (user j, beam k) that can possibly receive power: the secondary user
// can decode the primary signal (b <= 0) and the beam has QoS headroom
// (c <= 0).  Pairs are kept in beam-major order, users ascending inside a
// beam, and every index is 0-based.
struct ActiveSet {
    std::vector<std::pair<int, int>> pairs; // (user, beam)

    int size() const { return static_cast<int>(pairs.size()); }
    bool empty() const { return pairs.empty(); }

    Eigen::MatrixXi as_matrix() const
    {
        Eigen::MatrixXi s(size(), 2);
        for (int p = 0; p < size(); p++) {
            s(p, 0) = pairs[static_cast<std::size_t>(p)].first;
            s(p, 1) = pairs[static_cast<std::size_t>(p)].second;
        }
        return s;
    }
};

inline ActiveSet build_active_set(const EffectiveGains &g)
{
    ActiveSet s;
    for (int k = 0; k < g.K(); k++) {
        if (!(g.c(k) <= 0.0))
            continue;
        for (int j = 0; j < g.M(); j++)
            if (g.b(j, k) <= 0.0)
                s.pairs.emplace_back(j, k);
    }
    return s;
}

// One-hot column map from compressed powers y (one entry per active pair) to
// the stacked power vector over all (user, beam) slots.  Column p has its 1
// at row M * beam + user; R^T R = I because active pairs are distinct.
struct MappingMatrix {
    int rows = 0;                // M * K
    std::vector<int> row_of_col; // one row index per active pair

    int cols() const { return static_cast<int>(row_of_col.size()); }

    Eigen::MatrixXd dense() const
    {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(rows, cols());
        for (int p = 0; p < cols(); p++)
            r(row_of_col[static_cast<std::size_t>(p)], p) = 1.0;
        return r;
    }

    // R^T v: picks the entries of a stacked vector that active pairs own.
    Eigen::VectorXd reduce(const Eigen::VectorXd &stacked) const
    {
        Eigen::VectorXd out(cols());
        for (int p = 0; p < cols(); p++)
            out(p) = stacked(row_of_col[static_cast<std::size_t>(p)]);
        return out;
    }

    // R y: scatters compressed powers back into the stacked layout.
    Eigen::VectorXd expand(const Eigen::VectorXd &y) const
    {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
        for (int p = 0; p < cols(); p++)
            out(row_of_col[static_cast<std::size_t>(p)]) += y(p);
        return out;
    }
};

inline MappingMatrix build_mapping(const ActiveSet &s, int M, int K)
{
    MappingMatrix map;
    map.rows = M * K;
    map.row_of_col.reserve(static_cast<std::size_t>(s.size()));
    for (const auto &[j, k] : s.pairs)
        map.row_of_col.push_back(M * k + j);
    return map;
}

// The allocation problem in compressed form.  For active pair p = (j, k):
//   hs(p)           own-beam gain hS(j, k); the numerator of pair p's SINR
//   dP.col(p)       stacked interference weights seen by pair p, with the
//                   penalty weight xi * hS(j, k) on co-beam slots
//   eP.col(p)       stacked weights of the primary QoS constraint of beam k
//   fP.col(p)       stacked weights of the decoding constraint of pair p
//   tvals(p)        cross-beam primary interference plus noise
//   cvals(p), bvals(p)  the pair's feasibility constants
// dR/eR/fR are the same rows folded through the mapping so they act on y
// directly.  The embedded gains keep the instance self-contained.
struct ProblemData {
    EffectiveGains gains;
    ActiveSet active;
    MappingMatrix map;
    int M = 0;
    int K = 0;

    Eigen::VectorXd hs;
    Eigen::MatrixXd dP, eP, fP; // M*K x |S|
    Eigen::MatrixXd dR, eR, fR; // |S| x |S|
    Eigen::VectorXd tvals, cvals, bvals;
    double P_max = 0.0;
    double xi = 0.0;

    int size() const { return active.size(); }
};

inline ProblemData build_problem(const EffectiveGains &g, const ActiveSet &s, double P_max, double xi)
{
    ProblemData pd;
    pd.gains = g;
    pd.active = s;
    pd.M = g.M();
    pd.K = g.K();
    pd.map = build_mapping(s, pd.M, pd.K);
    pd.P_max = P_max;
    pd.xi = xi;

    const int n = s.size();
    const int mk = pd.M * pd.K;
    pd.hs.resize(n);
    pd.dP = Eigen::MatrixXd::Zero(mk, n);
    pd.eP = Eigen::MatrixXd::Zero(mk, n);
    pd.fP = Eigen::MatrixXd::Zero(mk, n);
    pd.tvals.resize(n);
    pd.cvals.resize(n);
    pd.bvals.resize(n);

    for (int p = 0; p < n; p++) {
        const auto [j, k] = s.pairs[static_cast<std::size_t>(p)];
        pd.hs(p) = g.hS(j, k);
        pd.tvals(p) = g.t(j, k);
        pd.cvals(p) = g.c(k);
        pd.bvals(p) = g.b(j, k);

        for (int i = 0; i < pd.K; i++) {
            for (int m = 0; m < pd.M; m++) {
                const int row = pd.M * i + m;
                if (i == k) {
                    pd.dP(row, p) = (m == j) ? 0.0 : xi * g.hS(j, k);
                    pd.eP(row, p) = (m == j) ? 1.0 : 0.0;
                    pd.fP(row, p) = (m == j) ? 1.0 : 0.0;
                } else {
                    pd.dP(row, p) = g.hS(j, i);
                    pd.eP(row, p) = g.hP(k, i) / g.hP(k, k);
                    pd.fP(row, p) = g.hS(j, i) / g.hS(j, k);
                }
            }
        }
    }

    pd.dR.resize(n, n);
    pd.eR.resize(n, n);
    pd.fR.resize(n, n);
    for (int p = 0; p < n; p++) {
        pd.dR.col(p) = pd.map.reduce(pd.dP.col(p));
        pd.eR.col(p) = pd.map.reduce(pd.eP.col(p));
        pd.fR.col(p) = pd.map.reduce(pd.fP.col(p));
    }
    return pd;
}

inline ProblemData build_problem(const EffectiveGains &g, const ActiveSet &s, const SystemConfig &cfg)
{
    return build_problem(g, s, cfg.P_max, cfg.xi);
}

// Penalized sum rate at compressed powers y.  Denominators stay at least
// sigma2, so the expression is defined for every nonnegative y.
inline double objective(const ProblemData &pd, const Eigen::VectorXd &y)
{
    double sum = 0.0;
    for (int p = 0; p < pd.size(); p++) {
        const double den = pd.dR.col(p).dot(y) + pd.tvals(p);
        sum += std::log2(1.0 + pd.hs(p) * y(p) / den);
    }
    return sum;
}

// Per-family worst-case constraint violations at y.  Positive means violated.
struct FeasibilityReport {
    double qos_primary = 0.0; // max over pairs of e_p . y + c
    double decoding = 0.0;    // max over active pairs of f_p . y + b
    double budget = 0.0;      // sum(y) - P_max
    double nonneg = 0.0;      // max(-y)
    double max_violation = 0.0;
    bool feasible = false;
};

inline FeasibilityReport check_feasible(const ProblemData &pd, const Eigen::VectorXd &y, double tol = 1e-9)
{
    FeasibilityReport rep;
    if (pd.size() == 0) {
        rep.feasible = true;
        return rep;
    }
    const double neg_inf = -std::numeric_limits<double>::infinity();
    rep.qos_primary = neg_inf;
    rep.decoding = neg_inf;
    for (int p = 0; p < pd.size(); p++) {
        rep.qos_primary = std::max(rep.qos_primary, pd.eR.col(p).dot(y) + pd.cvals(p));
        if (y(p) > 0.0)
            rep.decoding = std::max(rep.decoding, pd.fR.col(p).dot(y) + pd.bvals(p));
    }
    rep.budget = y.sum() - pd.P_max;
    rep.nonneg = -y.minCoeff();
    rep.max_violation = std::max(
        0.0, std::max(std::max(rep.qos_primary, rep.decoding), std::max(rep.budget, rep.nonneg)));
    rep.feasible = rep.max_violation <= tol;
    return rep;
}

struct PowerTriple {
    int user = 0;
    int beam = 0;
    double power = 0.0;
};

// Rates achieved by a concrete one-user-per-beam allocation, evaluated from
// the raw gains (not through the compressed problem).
struct RateReport {
    Eigen::VectorXd primary;       // K primary rates with the allocation active
    std::vector<double> decoding;  // per scheduled pair: rate of the primary
                                   // signal at the secondary user
    std::vector<double> secondary; // per scheduled pair: the pair's own rate
    double sum_secondary = 0.0;
};

inline RateReport true_rates(const EffectiveGains &g, const std::vector<PowerTriple> &powers)
{
    const int K = g.K();
    Eigen::VectorXd beam_power = Eigen::VectorXd::Zero(K);
    for (const auto &pt : powers)
        beam_power(pt.beam) += pt.power;

    RateReport rep;
    rep.primary.resize(K);
    for (int k = 0; k < K; k++) {
        double den = g.hP(k, k) * beam_power(k) + g.sigma2;
        for (int i = 0; i < K; i++)
            if (i != k)
                den += g.hP(k, i) * (g.rho_P + beam_power(i));
        rep.primary(k) = std::log2(1.0 + g.hP(k, k) * g.rho_P / den);
    }

    for (const auto &pt : powers) {
        double cross = g.sigma2;
        for (int i = 0; i < K; i++)
            if (i != pt.beam)
                cross += g.hS(pt.user, i) * (g.rho_P + beam_power(i));
        const double h = g.hS(pt.user, pt.beam);
        rep.decoding.push_back(std::log2(1.0 + h * g.rho_P / (h * pt.power + cross)));
        const double own = std::log2(1.0 + h * pt.power / cross);
        rep.secondary.push_back(own);
        rep.sum_secondary += own;
    }
    return rep;
}

// Final allocation: cleaned powers, the surviving (user, beam, power)
// triples, the penalized objective of the cleaned point and the true rates.
struct Allocation {
    Eigen::VectorXd y;
    std::vector<PowerTriple> powers;
    double objective = 0.0;
    RateReport rates;
    bool penalty_leak = false;
    int leak_count = 0;
};

// Turns a raw solver point into a physical schedule: entries at or below the
// power floor are dropped, and if two users survive on one beam only the
// larger stays (ties keep the lower user index) while the event is flagged
// as a penalty leak.
inline Allocation recover_assignment(const ProblemData &pd, const Eigen::VectorXd &y, double power_floor = -1.0)
{
    if (power_floor < 0.0)
        power_floor = 1e-6 * pd.P_max;

    Allocation alloc;
    alloc.y = Eigen::VectorXd::Zero(pd.size());

    std::vector<int> winner(static_cast<std::size_t>(pd.K), -1);
    for (int p = 0; p < pd.size(); p++) {
        if (!(y(p) > power_floor))
            continue;
        const int k = pd.active.pairs[static_cast<std::size_t>(p)].second;
        int &w = winner[static_cast<std::size_t>(k)];
        if (w < 0) {
            w = p;
        } else {
            alloc.penalty_leak = true;
            alloc.leak_count++;
            if (y(p) > y(w))
                w = p;
        }
    }
    for (int k = 0; k < pd.K; k++) {
        const int p = winner[static_cast<std::size_t>(k)];
        if (p < 0)
            continue;
        alloc.y(p) = y(p);
        alloc.powers.push_back({pd.active.pairs[static_cast<std::size_t>(p)].first, k, y(p)});
    }
    alloc.objective = objective(pd, alloc.y);
    alloc.rates = true_rates(pd.gains, alloc.powers);
    return alloc;
}

inline Allocation zero_allocation(const ProblemData &pd)
{
    Allocation alloc;
    alloc.y = Eigen::VectorXd::Zero(pd.size());
    alloc.objective = 0.0;
    alloc.rates = true_rates(pd.gains, {});
    return alloc;
}

} // namespace thznoma
