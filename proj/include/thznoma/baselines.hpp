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
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "config.hpp"
#include "reformulation.hpp"

namespace thznoma {

struct GreedyChoice {
    int user = -1;
    int beam = -1;
    double power = 0.0;
    double rate = 0.0;
};

// Largest power a lone pair may draw without breaking its own beam's QoS or
// its own decoding stage.
inline double greedy_clip(const EffectiveGains &g, int j, int k, double P_max)
{
    const double cap = std::min({P_max, -g.c(k), -g.b(j, k)});
    return std::max(0.0, cap);
}

// Greedy benchmark: grant the whole clipped budget to the single best
// (user, beam) pair network-wide, ties to the lowest (beam, user).  The clip
// keeps the pair's own beam safe; leakage onto the other beams' primaries is
// re-checked against the true rates and the grant is bisected down if any
// of them dips below target.
inline Allocation greedy_schedule(const EffectiveGains &g, const ActiveSet &s, double P_max)
{
    Allocation alloc;
    alloc.y = Eigen::VectorXd::Zero(s.size());
    alloc.rates = true_rates(g, {});

    GreedyChoice best;
    for (int k = 0; k < g.K(); k++) {
        for (int j = 0; j < g.M(); j++) {
            const double power = greedy_clip(g, j, k, P_max);
            if (power <= 0.0)
                continue;
            const double rate = std::log2(1.0 + g.hS(j, k) * power / g.t(j, k));
            if (rate > best.rate) {
                best = {j, k, power, rate};
            }
        }
    }
    if (best.user < 0)
        return alloc;

    auto qos_ok = [&](double p) {
        const RateReport rep = true_rates(g, {{best.user, best.beam, p}});
        for (int k = 0; k < g.K(); k++)
            if (g.c(k) <= 0.0 && rep.primary(k) < g.R_bar(k) - 1e-9)
                return false;
        return true;
    };
    double power = best.power;
    if (!qos_ok(power)) {
        double lo = 0.0, hi = power;
        for (int it = 0; it < 60; it++) {
            const double mid = 0.5 * (lo + hi);
            (qos_ok(mid) ? lo : hi) = mid;
        }
        power = lo;
    }
    if (power <= 0.0)
        return alloc;

    for (std::size_t p = 0; p < s.pairs.size(); p++)
        if (s.pairs[p] == std::make_pair(best.user, best.beam))
            alloc.y(static_cast<int>(p)) = power;
    alloc.powers = {{best.user, best.beam, power}};
    alloc.objective = std::log2(1.0 + g.hS(best.user, best.beam) * power / g.t(best.user, best.beam));
    alloc.rates = true_rates(g, alloc.powers);
    return alloc;
}

inline Allocation greedy_schedule(const EffectiveGains &g, const ActiveSet &s, const SystemConfig &cfg)
{
    return greedy_schedule(g, s, cfg.P_max);
}

// Two-user power-split rate for one beam: alpha to the strong user, the rest
// to the weak one, with x_ratio the gain ratio and beta the inverse SNR.
inline double f_alpha(double alpha, double x_ratio, double beta)
{
    return std::log2(1.0 + x_ratio * alpha / (1.0 + beta - alpha)) +
           std::log2(1.0 + (1.0 / x_ratio) * (1.0 - alpha) / (alpha + beta));
}

namespace detail {

struct BruteLocal {
    double value = -std::numeric_limits<double>::infinity();
    long long code = -1;
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> counts;
    double delta = 0.0;
};

} // namespace detail

// Exhaustive oracle for desk-scale instances: every beam-to-user assignment,
// powers on a simplex grid of pitch P_max/grid_n, feasibility judged on the
// true rates.  Assignments must stay inside the admitted set, a beam's QoS
// row applies whenever the beam admits at least one pair, and decoding rows
// apply to pairs carrying power.  delta_grid reports the largest objective
// change seen between adjacent feasible grid points.
inline Allocation brute_force(const EffectiveGains &g, const ActiveSet &s, const SystemConfig &cfg,
                              int grid_n, double *delta_grid = nullptr)
{
    const int K = g.K();
    const int M = g.M();
    if (grid_n < 1)
        throw std::invalid_argument("brute_force: grid_n must be at least 1");
    const double combos = std::pow(static_cast<double>(M) + 1.0, K);
    if (combos > 256.5 || s.size() > 4)
        throw std::invalid_argument("brute_force: instance exceeds the oracle size guard");
    const long long n_codes = static_cast<long long>(combos + 0.5);

    Eigen::MatrixXi slot = Eigen::MatrixXi::Constant(M, K, -1);
    std::vector<bool> qos_beam(static_cast<std::size_t>(K), false);
    for (std::size_t p = 0; p < s.pairs.size(); p++) {
        slot(s.pairs[p].first, s.pairs[p].second) = static_cast<int>(p);
        qos_beam[static_cast<std::size_t>(s.pairs[p].second)] = true;
    }

    const double step = cfg.P_max / grid_n;
    const double tol = 1e-9;

    auto evaluate = [&](const std::vector<std::pair<int, int>> &pairs, const std::vector<int> &counts,
                        bool &feasible) {
        std::vector<PowerTriple> powers;
        for (std::size_t i = 0; i < pairs.size(); i++)
            if (counts[i] > 0)
                powers.push_back({pairs[i].first, pairs[i].second, counts[i] * step});
        const RateReport rep = true_rates(g, powers);
        feasible = true;
        for (int k = 0; k < K; k++)
            if (qos_beam[static_cast<std::size_t>(k)] && rep.primary(k) < g.R_bar(k) - tol)
                feasible = false;
        for (std::size_t i = 0; i < powers.size() && feasible; i++)
            if (rep.decoding[i] < g.R_bar(powers[i].beam) - tol)
                feasible = false;
        return rep.sum_secondary;
    };

    auto run_code = [&](long long code, detail::BruteLocal &local) {
        std::vector<std::pair<int, int>> pairs;
        long long rest = code;
        for (int k = 0; k < K; k++) {
            const int pick = static_cast<int>(rest % (M + 1)) - 1;
            rest /= (M + 1);
            if (pick < 0)
                continue;
            if (slot(pick, k) < 0)
                return; // assignment reaches outside the admitted set
            pairs.emplace_back(pick, k);
        }

        std::vector<int> counts(pairs.size(), 0);
        double prev_obj = 0.0;
        bool prev_feasible = false;

        auto leaf = [&]() {
            bool feasible = false;
            const double obj = evaluate(pairs, counts, feasible);
            if (feasible && prev_feasible)
                local.delta = std::max(local.delta, std::abs(obj - prev_obj));
            prev_obj = obj;
            prev_feasible = feasible;
            if (feasible && obj > local.value) {
                local.value = obj;
                local.code = code;
                local.pairs = pairs;
                local.counts = counts;
            }
        };

        if (pairs.empty()) {
            leaf();
            return;
        }
        auto recurse = [&](auto &&self, std::size_t depth, int budget) -> void {
            if (depth + 1 == counts.size()) {
                prev_feasible = false; // innermost axis restarts adjacency
                for (int n = 0; n <= budget; n++) {
                    counts[depth] = n;
                    leaf();
                }
                counts[depth] = 0;
                return;
            }
            for (int n = 0; n <= budget; n++) {
                counts[depth] = n;
                self(self, depth + 1, budget - n);
            }
            counts[depth] = 0;
        };
        recurse(recurse, 0, grid_n);
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_workers =
        static_cast<unsigned>(std::min<long long>(n_codes, static_cast<long long>(hw)));
    std::vector<detail::BruteLocal> locals(n_workers);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < n_workers; w++) {
        workers.emplace_back([&, w]() {
            for (long long code = w; code < n_codes; code += n_workers)
                run_code(code, locals[w]);
        });
    }
    for (auto &t : workers)
        t.join();

    detail::BruteLocal best;
    double delta = 0.0;
    for (const auto &local : locals) {
        delta = std::max(delta, local.delta);
        if (local.code < 0)
            continue;
        if (local.value > best.value + 1e-15 ||
            (std::abs(local.value - best.value) <= 1e-15 && local.code < best.code) || best.code < 0)
            best = local;
    }

    Allocation alloc;
    alloc.y = Eigen::VectorXd::Zero(s.size());
    if (best.code >= 0 && best.value > 0.0) {
        for (std::size_t i = 0; i < best.pairs.size(); i++) {
            if (best.counts[i] <= 0)
                continue;
            const double p = best.counts[i] * step;
            alloc.y(slot(best.pairs[i].first, best.pairs[i].second)) = p;
            alloc.powers.push_back({best.pairs[i].first, best.pairs[i].second, p});
        }
        alloc.objective = best.value;

        // probe the best point's neighbours along every axis
        for (std::size_t i = 0; i < best.pairs.size(); i++) {
            int total = 0;
            for (int c : best.counts)
                total += c;
            for (int dir : {-1, 1}) {
                std::vector<int> counts = best.counts;
                counts[i] += dir;
                if (counts[i] < 0 || total + dir > grid_n)
                    continue;
                bool feasible = false;
                const double obj = evaluate(best.pairs, counts, feasible);
                if (feasible)
                    delta = std::max(delta, std::abs(obj - best.value));
            }
        }
    }
    alloc.rates = true_rates(g, alloc.powers);
    if (delta_grid)
        *delta_grid = delta;
    return alloc;
}

} // namespace thznoma
