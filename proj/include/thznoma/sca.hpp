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
#include <vector>

#include "reformulation.hpp"

namespace thznoma {

enum class SCAVariant {
    one, // keep every active pair, enforce every decoding row
    two  // pre-schedule the best user per beam, then allocate power
};

struct SCAConfig {
    SCAVariant variant = SCAVariant::two;
    double outer_tol = 1e-4; // BPCU change that counts as converged
    int max_outer = 30;
    double inner_tol = 1e-8;  // barrier duality gap target
    bool warm_uniform = false; // expand around an even budget split first
};

// Concave inner problem produced by linearizing the interference term of the
// sum rate around y0:
//   maximize  sum_p log2(gain_rows.col(p) . y + tvals(p)) - slope . y + shift
//   subject to  A y <= b, y >= 0.
// The shift makes surrogate(y0) equal the true objective at y0, and the
// surrogate under-estimates the true objective everywhere else.
struct SCASubproblem {
    Eigen::VectorXd y0;
    Eigen::MatrixXd gain_rows; // n x n, column p = own gain + interference weights
    Eigen::VectorXd tvals;
    Eigen::VectorXd slope;
    double shift = 0.0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    double surrogate(const Eigen::VectorXd &y) const
    {
        double v = shift - slope.dot(y);
        for (int p = 0; p < gain_rows.cols(); p++)
            v += std::log2(gain_rows.col(p).dot(y) + tvals(p));
        return v;
    }
};

// Per-beam pre-scheduling: among the admitted pairs of each beam keep only
// the strongest user (ties to the lowest user index).  With one user per
// beam the co-beam penalty can never activate.
inline ActiveSet schedule_max_gain(const EffectiveGains &g, const ActiveSet &s)
{
    std::vector<int> best(static_cast<std::size_t>(g.K()), -1);
    for (const auto &[j, k] : s.pairs) {
        int &w = best[static_cast<std::size_t>(k)];
        if (w < 0 || g.hS(j, k) > g.hS(w, k))
            w = j;
    }
    ActiveSet out;
    for (int k = 0; k < g.K(); k++)
        if (best[static_cast<std::size_t>(k)] >= 0)
            out.pairs.emplace_back(best[static_cast<std::size_t>(k)], k);
    return out;
}

inline SCASubproblem build_subproblem(const ProblemData &pd, const Eigen::VectorXd &y0)
{
    const int n = pd.size();
    SCASubproblem sub;
    sub.y0 = y0;
    sub.gain_rows = pd.dR;
    for (int p = 0; p < n; p++)
        sub.gain_rows(p, p) += pd.hs(p);
    sub.tvals = pd.tvals;

    sub.slope = Eigen::VectorXd::Zero(n);
    sub.shift = 0.0;
    const double ln2 = std::log(2.0);
    for (int p = 0; p < n; p++) {
        const double den0 = pd.dR.col(p).dot(y0) + pd.tvals(p);
        sub.slope += pd.dR.col(p) / (ln2 * den0);
        sub.shift -= std::log2(den0);
    }
    sub.shift += sub.slope.dot(y0);

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (int p = 0; p < n; p++) {
        if (!std::isfinite(pd.cvals(p)))
            continue;
        rows.push_back(pd.eR.col(p));
        rhs.push_back(-pd.cvals(p));
    }
    for (int p = 0; p < n; p++) {
        if (!std::isfinite(pd.bvals(p)))
            continue;
        rows.push_back(pd.fR.col(p));
        rhs.push_back(-pd.bvals(p));
    }
    rows.push_back(Eigen::VectorXd::Ones(n));
    rhs.push_back(pd.P_max);

    sub.A.resize(static_cast<int>(rows.size()), n);
    sub.b.resize(static_cast<int>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); r++) {
        Eigen::VectorXd row = rows[r];
        double rv = rhs[r];
        const double scale = row.cwiseAbs().maxCoeff();
        if (scale > 0.0) {
            row /= scale;
            rv /= scale;
        }
        sub.A.row(static_cast<int>(r)) = row;
        sub.b(static_cast<int>(r)) = rv;
    }
    return sub;
}

enum class InnerStatus { ok, stalled };

struct InnerSolution {
    InnerStatus status = InnerStatus::ok;
    Eigen::VectorXd y;
};

// Logarithmic-barrier scheme with damped Newton steps.  Constraint rows that
// pin their variables to zero are eliminated up front so a strictly interior
// start always exists; the barrier parameter grows tenfold per stage until
// the duality gap bound drops below inner_tol.
inline InnerSolution solve_subproblem(const SCASubproblem &sub, double inner_tol = 1e-8)
{
    const int n = static_cast<int>(sub.slope.size());
    InnerSolution out;
    out.y = Eigen::VectorXd::Zero(n);
    if (n == 0)
        return out;

    // presolve: rows with nonnegative coefficients and no slack at zero force
    // their supported variables to zero
    std::vector<bool> fixed(static_cast<std::size_t>(n), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int r = 0; r < sub.A.rows(); r++) {
            if (sub.b(r) > 0.0)
                continue;
            bool nonneg = true;
            for (int j = 0; j < n; j++)
                if (!fixed[static_cast<std::size_t>(j)] && sub.A(r, j) < 0.0)
                    nonneg = false;
            if (!nonneg)
                continue;
            for (int j = 0; j < n; j++) {
                if (!fixed[static_cast<std::size_t>(j)] && sub.A(r, j) > 0.0) {
                    fixed[static_cast<std::size_t>(j)] = true;
                    changed = true;
                }
            }
        }
    }

    std::vector<int> keep;
    for (int j = 0; j < n; j++)
        if (!fixed[static_cast<std::size_t>(j)])
            keep.push_back(j);
    const int nk = static_cast<int>(keep.size());
    if (nk == 0)
        return out;

    // reduced data
    Eigen::MatrixXd gk(nk, sub.gain_rows.cols());
    Eigen::VectorXd sk(nk);
    std::vector<Eigen::VectorXd> arows;
    std::vector<double> brows;
    for (int i = 0; i < nk; i++) {
        gk.row(i) = sub.gain_rows.row(keep[static_cast<std::size_t>(i)]);
        sk(i) = sub.slope(keep[static_cast<std::size_t>(i)]);
    }
    for (int r = 0; r < sub.A.rows(); r++) {
        Eigen::VectorXd row(nk);
        for (int i = 0; i < nk; i++)
            row(i) = sub.A(r, keep[static_cast<std::size_t>(i)]);
        if (row.cwiseAbs().maxCoeff() <= 0.0)
            continue;
        arows.push_back(row);
        brows.push_back(sub.b(r));
    }
    const int m = static_cast<int>(arows.size());
    Eigen::MatrixXd A(m, nk);
    Eigen::VectorXd b(m);
    for (int r = 0; r < m; r++) {
        A.row(r) = arows[static_cast<std::size_t>(r)];
        b(r) = brows[static_cast<std::size_t>(r)];
    }

    // strictly interior start
    double delta = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; r++) {
        double pos = 0.0;
        for (int i = 0; i < nk; i++)
            pos += std::max(A(r, i), 0.0);
        if (pos > 0.0)
            delta = std::min(delta, b(r) / (2.0 * pos));
    }
    if (!std::isfinite(delta))
        delta = 1.0;
    if (!(delta > 0.0)) {
        out.status = InnerStatus::stalled;
        return out;
    }
    Eigen::VectorXd y = Eigen::VectorXd::Constant(nk, delta);

    const double ln2 = std::log(2.0);
    auto neg_obj = [&](const Eigen::VectorXd &v) {
        double f = sk.dot(v);
        for (int p = 0; p < gk.cols(); p++)
            f -= std::log2(gk.col(p).dot(v) + sub.tvals(p));
        return f;
    };
    auto barrier = [&](const Eigen::VectorXd &v, double tau, bool &interior) {
        interior = true;
        double phi = tau * neg_obj(v);
        for (int r = 0; r < m; r++) {
            const double slack = b(r) - A.row(r).dot(v);
            if (!(slack > 0.0)) {
                interior = false;
                return 0.0;
            }
            phi -= std::log(slack);
        }
        for (int i = 0; i < nk; i++) {
            if (!(v(i) > 0.0)) {
                interior = false;
                return 0.0;
            }
            phi -= std::log(v(i));
        }
        return phi;
    };

    const int total_constraints = m + nk;
    double tau = 1.0;
    bool stalled = false;
    while (true) {
        for (int step = 0; step < 200; step++) {
            Eigen::VectorXd grad = tau * sk;
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nk, nk);
            for (int p = 0; p < gk.cols(); p++) {
                const double den = gk.col(p).dot(y) + sub.tvals(p);
                grad -= tau * gk.col(p) / (ln2 * den);
                hess += (tau / (ln2 * den * den)) * (gk.col(p) * gk.col(p).transpose());
            }
            for (int r = 0; r < m; r++) {
                const double slack = b(r) - A.row(r).dot(y);
                grad += A.row(r).transpose() / slack;
                hess += (A.row(r).transpose() * A.row(r)) / (slack * slack);
            }
            for (int i = 0; i < nk; i++) {
                grad(i) -= 1.0 / y(i);
                hess(i, i) += 1.0 / (y(i) * y(i));
            }

            const Eigen::VectorXd dir = hess.ldlt().solve(-grad);
            const double decrement = -grad.dot(dir);
            if (!(decrement > 2e-10))
                break;

            bool interior = false;
            const double phi0 = barrier(y, tau, interior);
            double alpha = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 60; bt++) {
                const Eigen::VectorXd cand = y + alpha * dir;
                bool ok = false;
                const double phi = barrier(cand, tau, ok);
                if (ok && phi <= phi0 - 0.25 * alpha * decrement) {
                    y = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) {
                stalled = true;
                break;
            }
        }
        if (total_constraints / tau <= inner_tol)
            break;
        if (stalled)
            break;
        tau *= 10.0;
    }

    out.status = stalled ? InnerStatus::stalled : InnerStatus::ok;
    out.y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < nk; i++)
        out.y(keep[static_cast<std::size_t>(i)]) = std::max(y(i), 0.0);

    // a flat surrogate means the zero split is just as good; prefer it
    if ((sub.A * Eigen::VectorXd::Zero(n) - sub.b).maxCoeff() <= 0.0) {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
        if (sub.surrogate(zero) >= sub.surrogate(out.y) - 1e-12)
            out.y = zero;
    }
    return out;
}

struct SCAResult {
    Allocation best;
    Eigen::VectorXd best_y;
    double value = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    std::vector<double> trace; // true objective after each outer step
    ActiveSet scheduled;       // pairs the solver actually optimized over
};

// Outer successive-approximation loop.  Starts from the all-zero split,
// rebuilds the surrogate at every iterate and stops once the true objective
// moves less than outer_tol (or max_outer is hit).  The reported objective
// is always the true penalized sum rate, never the surrogate.
inline SCAResult run_sca(const ProblemData &pd, const SCAConfig &cfg = {})
{
    const ProblemData *work = &pd;
    ProblemData reduced;
    if (cfg.variant == SCAVariant::two) {
        const ActiveSet sched = schedule_max_gain(pd.gains, pd.active);
        reduced = build_problem(pd.gains, sched, pd.P_max, pd.xi);
        work = &reduced;
    }

    SCAResult res;
    res.scheduled = work->active;
    if (work->size() == 0) {
        res.best = zero_allocation(*work);
        res.best_y = Eigen::VectorXd();
        res.converged = true;
        return res;
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(work->size());
    // The warm start only centers the first expansion; accepted iterates
    // always come out of the inner solves, which respect the constraints.
    Eigen::VectorXd expand = y;
    if (cfg.warm_uniform && work->size() > 0)
        expand.setConstant(work->P_max / static_cast<double>(work->size()));
    double obj_prev = objective(*work, y);
    for (int it = 0; it < cfg.max_outer; it++) {
        const SCASubproblem sub = build_subproblem(*work, expand);
        const InnerSolution inner = solve_subproblem(sub, cfg.inner_tol);
        res.outer_iterations = it + 1;
        const double obj = objective(*work, inner.y);
        if (obj < obj_prev - 1e-8)
            break; // inner solve failed to improve; keep the last good iterate
        y = inner.y;
        expand = inner.y;
        res.trace.push_back(obj);
        if (std::abs(obj - obj_prev) < cfg.outer_tol) {
            obj_prev = obj;
            res.converged = true;
            break;
        }
        obj_prev = obj;
    }

    res.best_y = y;
    res.value = obj_prev;
    res.best = recover_assignment(*work, y);
    return res;
}

} // namespace thznoma
