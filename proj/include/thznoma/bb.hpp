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
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "lp.hpp"

namespace thznoma {

// Axis-aligned box in per-pair SINR space together with its bounds on the
// (minimized) box objective -sum log2(1 + x_p).
struct Rectangle {
    Eigen::VectorXd x_min;
    Eigen::VectorXd x_max;
    double lb = 0.0;
    double ub = 0.0;
    bool x_min_feasible = false;
    std::optional<Eigen::VectorXd> witness; // power split supporting x_min (or better)
};

struct BBConfig {
    double epsilon = 0.01; // absolute gap target, BPCU
    int n_itr = 200;       // iteration cap
    bool tighten = true;   // per-coordinate bound tightening
    bool prune = true;     // drop rectangles dominated by the incumbent
};

struct BoundRecord {
    double lower = 0.0;
    double upper = 0.0;
    int active = 0;
};

struct BBResult {
    Allocation best;
    Eigen::VectorXd best_y;
    double value = 0.0; // sum rate of best_y, BPCU
    double gap = 0.0;   // terminal U - L on the box objective
    int iterations = 0;
    long pruned_count = 0;
    std::vector<BoundRecord> bound_history;
};

inline double box_objective(const Eigen::VectorXd &x)
{
    double f = 0.0;
    for (int p = 0; p < x.size(); p++)
        f -= std::log2(1.0 + x(p));
    return f;
}

// Smallest box guaranteed to contain every attainable SINR vector: the cap
// per pair is the SINR it would see with the whole budget and no
// interference from other lent beams.
inline Rectangle initial_rectangle(const ProblemData &pd)
{
    Rectangle rect;
    rect.x_min = Eigen::VectorXd::Zero(pd.size());
    rect.x_max.resize(pd.size());
    for (int p = 0; p < pd.size(); p++)
        rect.x_max(p) = pd.P_max * pd.hs(p) / pd.tvals(p);
    return rect;
}

// Bounds over a rectangle: when the low corner is supportable by some power
// split the best value inside cannot beat the high corner (lb) and the low
// corner itself is attainable (ub).  A provably unsupportable low corner
// makes the whole rectangle worthless and both bounds collapse to zero; if
// the feasibility probe cannot produce a verified witness either way, only
// the always-valid high-corner lower bound is kept.
inline void evaluate_bounds(Rectangle &rect, const ProblemData &pd)
{
    const FeasibilityPoint fs = check_point_feasible(pd, rect.x_min);
    rect.x_min_feasible = fs.feasible;
    rect.witness.reset();
    if (fs.feasible) {
        rect.lb = box_objective(rect.x_max);
        rect.ub = box_objective(rect.x_min);
        rect.witness = fs.y;
    } else if (fs.proven_empty) {
        rect.lb = 0.0;
        rect.ub = 0.0;
    } else {
        rect.lb = box_objective(rect.x_max);
        rect.ub = 0.0;
    }
}

// Splits the longest edge at its midpoint; ties go to the lowest coordinate.
inline std::pair<Rectangle, Rectangle> branch(const Rectangle &rect)
{
    int axis = 0;
    double len = -1.0;
    for (int p = 0; p < rect.x_min.size(); p++) {
        const double l = rect.x_max(p) - rect.x_min(p);
        if (l > len) {
            len = l;
            axis = p;
        }
    }
    const double mid = 0.5 * (rect.x_min(axis) + rect.x_max(axis));
    Rectangle lo = rect;
    Rectangle hi = rect;
    lo.x_max(axis) = mid;
    hi.x_min(axis) = mid;
    return {lo, hi};
}

namespace detail {

// Constraint system of the per-coordinate refinement: coordinate p may move
// up to the rectangle cap while every other coordinate is pinned at the low
// corner; QoS, decoding, budget and nonnegativity rows come along.  Rows are
// equilibrated so the closed-form path stays well scaled.
inline FractionalProgram build_tighten_program(const ProblemData &pd, const Rectangle &rect, int p)
{
    const int n = pd.size();
    FractionalProgram fp;
    fp.numerator = Eigen::VectorXd::Zero(n);
    fp.numerator(p) = pd.hs(p);
    fp.denominator = pd.dR.col(p);
    fp.den_const = pd.tvals(p);

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    {
        Eigen::VectorXd row = -rect.x_max(p) * pd.dR.col(p);
        row(p) += pd.hs(p);
        rows.push_back(row);
        rhs.push_back(rect.x_max(p) * pd.tvals(p));
    }
    for (int q = 0; q < n; q++) {
        if (!std::isfinite(pd.cvals(q)))
            continue;
        rows.push_back(pd.eR.col(q));
        rhs.push_back(-pd.cvals(q));
    }
    for (int q = 0; q < n; q++) {
        if (!(rect.x_min(q) > 0.0) && q != p)
            continue;
        if (q == p && !(rect.x_max(p) > 0.0))
            continue;
        if (!std::isfinite(pd.bvals(q)))
            continue;
        rows.push_back(pd.fR.col(q));
        rhs.push_back(-pd.bvals(q));
    }
    rows.push_back(Eigen::VectorXd::Ones(n));
    rhs.push_back(pd.P_max);
    for (int q = 0; q < n; q++) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(q) = -1.0;
        rows.push_back(row);
        rhs.push_back(0.0);
    }

    fp.A.resize(static_cast<int>(rows.size()), n);
    fp.b.resize(static_cast<int>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); r++) {
        Eigen::VectorXd row = rows[r];
        double rv = rhs[r];
        const double scale = row.cwiseAbs().maxCoeff();
        if (scale > 0.0) {
            row /= scale;
            rv /= scale;
        }
        fp.A.row(static_cast<int>(r)) = row;
        fp.b(static_cast<int>(r)) = rv;
    }

    fp.A_eq.resize(n - 1, n);
    fp.b_eq.resize(n - 1);
    int r = 0;
    for (int q = 0; q < n; q++) {
        if (q == p)
            continue;
        Eigen::VectorXd row = rect.x_min(q) * pd.dR.col(q);
        row(q) -= pd.hs(q);
        double rv = -rect.x_min(q) * pd.tvals(q);
        const double scale = row.cwiseAbs().maxCoeff();
        if (scale > 0.0) {
            row /= scale;
            rv /= scale;
        }
        fp.A_eq.row(r) = row;
        fp.b_eq(r) = rv;
        r++;
    }
    return fp;
}

} // namespace detail

struct TightenStats {
    long closed_form = 0; // coordinates resolved by the closed form
    long lp_fallback = 0; // coordinates routed to the fractional LP
    long improved = 0;    // rectangles whose bounds moved
};

// Per-coordinate bound refinement.  Applied when the low corner is
// supportable but the high corner is not; a supportable high corner solves
// the rectangle outright.  Coordinate p's refined cap is the best SINR it
// can reach with the others pinned at the low corner; the refined caps
// shrink the high corner (improving lb) and each cap yields an attainable
// point (improving ub).
inline void tighten(Rectangle &rect, const ProblemData &pd, TightenStats *stats = nullptr)
{
    if (!rect.x_min_feasible)
        return;
    const FeasibilityPoint top = check_point_feasible(pd, rect.x_max);
    if (top.feasible) {
        rect.lb = box_objective(rect.x_max);
        rect.ub = rect.lb;
        rect.witness = top.y;
        if (stats != nullptr)
            stats->improved++;
        return;
    }

    const int n = pd.size();
    Eigen::VectorXd caps = rect.x_max;
    double best_ub = rect.ub;
    std::optional<Eigen::VectorXd> best_witness;

    for (int p = 0; p < n; p++) {
        const FractionalProgram fp = detail::build_tighten_program(pd, rect, p);
        Eigen::VectorXd y;
        std::optional<Eigen::VectorXd> closed = lemma1_solve(fp, p);
        if (closed.has_value()) {
            y = *closed;
            if (stats != nullptr)
                stats->closed_form++;
        } else {
            const FractionalSolution fs = solve_fractional(fp);
            if (stats != nullptr)
                stats->lp_fallback++;
            if (fs.status != LPStatus::optimal)
                continue; // keep the untightened cap on this coordinate
            y = fs.y;
        }
        y = y.cwiseMax(0.0);
        if (!fractional_point_valid(fp, y))
            continue;
        const double raw = fractional_value(fp, y);
        // Headroom on the stored cap: the refinement value carries solver
        // rounding, and an undershot cap would cut attainable points.
        const double val = std::min(rect.x_max(p), std::max(rect.x_min(p), raw));
        caps(p) = std::min(rect.x_max(p), std::max(rect.x_min(p), raw * (1.0 + 1e-9) + 1e-15));

        if (val > rect.x_min(p)) {
            Eigen::VectorXd corner = rect.x_min;
            corner(p) = val;
            const double ub_p = box_objective(corner);
            if (ub_p < best_ub && verify_point_witness(pd, corner, y)) {
                best_ub = ub_p;
                best_witness = y;
            }
        }
    }

    const double lb_new = box_objective(caps);
    if (stats != nullptr && (lb_new > rect.lb || best_ub < rect.ub))
        stats->improved++;
    rect.x_max = caps;
    rect.lb = std::max(rect.lb, lb_new);
    if (best_ub < rect.ub) {
        rect.ub = best_ub;
        rect.witness = best_witness;
    }
}

// Greedy budget top-up on a feasible power split: repeatedly grants the
// leftover budget (halved until feasible) to the pair whose grant raises the
// penalized sum rate most.  Every step is validated against the full
// constraint set, so the result is feasible whenever the input is.
inline Eigen::VectorXd polish_witness(const ProblemData &pd, Eigen::VectorXd y)
{
    const int n = pd.size();
    y = y.cwiseMax(0.0);
    for (int round = 0; round < 4 * n; round++) {
        const double left = pd.P_max - y.sum();
        if (left <= 1e-12 * pd.P_max)
            break;
        const double base = objective(pd, y);
        int best_p = -1;
        double best_gain = 1e-10;
        double best_add = 0.0;
        for (int p = 0; p < n; p++) {
            double add = left;
            Eigen::VectorXd cand = y;
            bool ok = false;
            for (int halvings = 0; halvings < 40 && !ok; halvings++) {
                cand(p) = y(p) + add;
                // Zero tolerance: a polished point one row-slack past the
                // boundary would outscore the exact caps the bounds rest on.
                ok = check_feasible(pd, cand, 0.0).feasible;
                if (!ok)
                    add *= 0.5;
            }
            if (!ok)
                continue;
            const double gain = objective(pd, cand) - base;
            if (gain > best_gain) {
                best_gain = gain;
                best_p = p;
                best_add = add;
            }
        }
        if (best_p < 0)
            break;
        y(best_p) += best_add;
    }
    return y;
}

// Global solver: best-first splitting of the SINR box with supportability
// checks at the corners.  Keeps the best concrete power split seen anywhere
// as the incumbent; terminates when the bound gap falls below epsilon or
// the iteration cap is reached.
inline BBResult run_bb(const ProblemData &pd, const BBConfig &cfg = {})
{
    BBResult res;
    if (pd.size() == 0) {
        res.best = zero_allocation(pd);
        res.best_y = Eigen::VectorXd();
        return res;
    }

    struct Node {
        Rectangle rect;
        bool alive = true;
    };
    std::vector<Node> nodes;
    // min-heap on (lb, insertion order)
    using HeapEntry = std::tuple<double, std::size_t>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;

    double best_obj = 0.0;
    Eigen::VectorXd best_y = Eigen::VectorXd::Zero(pd.size());
    auto offer_incumbent = [&](const std::optional<Eigen::VectorXd> &w) {
        if (!w.has_value())
            return;
        Eigen::VectorXd y = polish_witness(pd, *w);
        const double tot = y.sum();
        if (tot > pd.P_max && tot > 0.0)
            y *= pd.P_max / tot;
        if (!check_feasible(pd, y, 0.0).feasible)
            return;
        const double val = objective(pd, y);
        if (val > best_obj) {
            best_obj = val;
            best_y = y;
        }
    };

    Rectangle root = initial_rectangle(pd);
    evaluate_bounds(root, pd);
    if (cfg.tighten && root.x_min_feasible)
        tighten(root, pd);
    offer_incumbent(root.witness);
    nodes.push_back({root, true});
    heap.push({root.lb, 0});

    // Every evaluated upper bound is backed by an attainable witness, so the
    // global upper bound is the running minimum over all evaluations and over
    // the incumbents' own objective values; it stays valid (and monotone)
    // even after the node that produced it is split away.
    double upper = std::min(root.ub, -best_obj);
    double lower = root.lb;
    res.bound_history.push_back({lower, upper, 1});

    int k = 0;
    while (k < cfg.n_itr && upper - lower >= cfg.epsilon) {
        // select the live rectangle with the smallest lower bound
        std::size_t pick = nodes.size();
        while (!heap.empty()) {
            const auto [lb, idx] = heap.top();
            if (!nodes[idx].alive) {
                heap.pop();
                continue;
            }
            pick = idx;
            break;
        }
        if (pick == nodes.size()) {
            // live set exhausted: every remaining region was dominated
            lower = upper;
            res.bound_history.push_back({lower, upper, 0});
            break;
        }
        heap.pop();
        nodes[pick].alive = false;

        const auto [lo, hi] = branch(nodes[pick].rect);
        for (Rectangle child : {lo, hi}) {
            evaluate_bounds(child, pd);
            if (cfg.tighten && child.x_min_feasible)
                tighten(child, pd);
            offer_incumbent(child.witness);
            upper = std::min(upper, child.ub);
            nodes.push_back({child, true});
            heap.push({child.lb, nodes.size() - 1});
        }
        upper = std::min(upper, -best_obj);
        k++;

        if (cfg.prune) {
            for (Node &node : nodes) {
                if (node.alive && node.rect.lb > upper + 1e-12) {
                    node.alive = false;
                    res.pruned_count++;
                }
            }
        }
        lower = upper;
        int active = 0;
        for (const Node &node : nodes) {
            if (!node.alive)
                continue;
            lower = std::min(lower, node.rect.lb);
            active++;
        }
        res.bound_history.push_back({lower, upper, active});
    }

    res.iterations = k;
    res.gap = upper - lower;
    res.best_y = best_y;
    res.value = best_obj;
    res.best = recover_assignment(pd, best_y);
    return res;
}

} // namespace thznoma
