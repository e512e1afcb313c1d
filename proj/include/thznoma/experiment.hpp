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

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "bb.hpp"
#include "sca.hpp"
#include "serialization.hpp"

namespace thznoma {

inline constexpr const char *kVersion = "0.1.0";

struct ExperimentSpec {
    SystemConfig base = default_config();
    std::string sweep = "M"; // one of M, K, N, N_Q, r_S, R_bar
    std::vector<double> values{1, 2, 4, 8};
    int trials = 200;
    std::vector<std::string> solvers{"bb", "sca1", "sca2", "greedy"};
    BBConfig bb;
    SCAConfig sca;
    int oracle_grid = 100;
    std::string output = "out";
    int parallel = 1;
    bool record_timing = false; // wall_ms stays 0 when off, keeping reruns byte-identical
    bool traces = false;        // dump solver traces for the first trial
};

inline SystemConfig apply_sweep(SystemConfig cfg, const std::string &sweep, double value)
{
    if (sweep == "M") {
        cfg.M = static_cast<int>(std::lround(value));
    } else if (sweep == "K") {
        const double r0 = cfg.R_bar.size() > 0 ? cfg.R_bar(0) : 1.0;
        cfg.K = static_cast<int>(std::lround(value));
        cfg.R_bar = Eigen::VectorXd::Constant(cfg.K, r0);
    } else if (sweep == "N") {
        cfg.N = static_cast<int>(std::lround(value));
    } else if (sweep == "N_Q") {
        cfg.N_Q = static_cast<int>(std::lround(value));
    } else if (sweep == "r_S") {
        cfg.r_S = value;
    } else if (sweep == "R_bar") {
        cfg.R_bar = Eigen::VectorXd::Constant(cfg.K, value);
    } else {
        throw std::invalid_argument("unknown sweep variable: " + sweep);
    }
    return cfg;
}

inline void validate_spec(const ExperimentSpec &spec)
{
    if (spec.trials < 1)
        throw std::invalid_argument("spec: trials must be at least 1");
    if (spec.values.empty())
        throw std::invalid_argument("spec: sweep value list is empty");
    if (spec.solvers.empty())
        throw std::invalid_argument("spec: solver list is empty");
    for (const auto &s : spec.solvers)
        if (s != "bb" && s != "sca1" && s != "sca2" && s != "greedy" && s != "oracle")
            throw std::invalid_argument("spec: unknown solver " + s);
    if (spec.parallel < 1)
        throw std::invalid_argument("spec: parallel must be at least 1");
    if (spec.oracle_grid < 1)
        throw std::invalid_argument("spec: oracle_grid must be at least 1");
    for (double v : spec.values)
        apply_sweep(spec.base, spec.sweep, v).validate();
}

inline nlohmann::json to_json(const BBConfig &cfg)
{
    nlohmann::json j;
    j["epsilon"] = cfg.epsilon;
    j["n_itr"] = cfg.n_itr;
    j["tighten"] = cfg.tighten;
    j["prune"] = cfg.prune;
    return j;
}

inline BBConfig bb_config_from_json(const nlohmann::json &j)
{
    require_known_keys(j, {"epsilon", "n_itr", "tighten", "prune"}, "bb config");
    BBConfig cfg;
    if (j.contains("epsilon"))
        cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("n_itr"))
        cfg.n_itr = j.at("n_itr").get<int>();
    if (j.contains("tighten"))
        cfg.tighten = j.at("tighten").get<bool>();
    if (j.contains("prune"))
        cfg.prune = j.at("prune").get<bool>();
    return cfg;
}

inline nlohmann::json to_json(const SCAConfig &cfg)
{
    nlohmann::json j;
    j["outer_tol"] = cfg.outer_tol;
    j["max_outer"] = cfg.max_outer;
    j["inner_tol"] = cfg.inner_tol;
    return j;
}

inline SCAConfig sca_config_from_json(const nlohmann::json &j)
{
    require_known_keys(j, {"outer_tol", "max_outer", "inner_tol"}, "sca config");
    SCAConfig cfg;
    if (j.contains("outer_tol"))
        cfg.outer_tol = j.at("outer_tol").get<double>();
    if (j.contains("max_outer"))
        cfg.max_outer = j.at("max_outer").get<int>();
    if (j.contains("inner_tol"))
        cfg.inner_tol = j.at("inner_tol").get<double>();
    return cfg;
}

inline nlohmann::json to_json(const ExperimentSpec &spec)
{
    nlohmann::json j;
    j["base"] = to_json(spec.base);
    j["sweep"] = spec.sweep;
    j["values"] = spec.values;
    j["trials"] = spec.trials;
    j["solvers"] = spec.solvers;
    j["bb"] = to_json(spec.bb);
    j["sca"] = to_json(spec.sca);
    j["oracle_grid"] = spec.oracle_grid;
    j["output"] = spec.output;
    j["parallel"] = spec.parallel;
    j["record_timing"] = spec.record_timing;
    j["traces"] = spec.traces;
    return j;
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json &j)
{
    require_known_keys(j,
                       {"base", "sweep", "values", "trials", "solvers", "bb", "sca", "oracle_grid",
                        "output", "parallel", "record_timing", "traces"},
                       "experiment spec");
    ExperimentSpec spec;
    if (j.contains("base"))
        spec.base = system_config_from_json(j.at("base"));
    if (j.contains("sweep"))
        spec.sweep = j.at("sweep").get<std::string>();
    if (j.contains("values"))
        spec.values = j.at("values").get<std::vector<double>>();
    if (j.contains("trials"))
        spec.trials = j.at("trials").get<int>();
    if (j.contains("solvers"))
        spec.solvers = j.at("solvers").get<std::vector<std::string>>();
    if (j.contains("bb"))
        spec.bb = bb_config_from_json(j.at("bb"));
    if (j.contains("sca"))
        spec.sca = sca_config_from_json(j.at("sca"));
    if (j.contains("oracle_grid"))
        spec.oracle_grid = j.at("oracle_grid").get<int>();
    if (j.contains("output"))
        spec.output = j.at("output").get<std::string>();
    if (j.contains("parallel"))
        spec.parallel = j.at("parallel").get<int>();
    if (j.contains("record_timing"))
        spec.record_timing = j.at("record_timing").get<bool>();
    if (j.contains("traces"))
        spec.traces = j.at("traces").get<bool>();
    return spec;
}

struct TrialRecord {
    std::uint64_t seed = 0;
    double sweep_value = 0.0;
    std::string solver;
    double sum_rate = 0.0;
    long long iterations = 0;
    double wall_ms = 0.0;
    double residual = 0.0;
    bool penalty_leak = false;
};

struct SummaryRow {
    double sweep_value = 0.0;
    std::string solver;
    int n = 0; // trials that produced a finite rate
    double mean = 0.0;
    double se = 0.0;
    int failures = 0;
    int leaks = 0;
};

struct PairDiffRow {
    double sweep_value = 0.0;
    std::string solver_a;
    std::string solver_b;
    int n = 0;
    double mean_diff = 0.0;
    double se_diff = 0.0;
};

struct ExperimentResults {
    ExperimentSpec spec;
    std::vector<TrialRecord> records;
    std::vector<SummaryRow> summary;
    std::vector<PairDiffRow> diffs;
    std::vector<long long> resamples; // singular-channel redraws per sweep value
    std::vector<long long> unsampled; // trials that never produced an instance
    double elapsed_s = 0.0;
    std::string bb_trace_csv;
    std::string sca_trace_csv;
};

namespace detail {

struct TrialOutput {
    std::vector<TrialRecord> records;
    long long resamples = 0;
    bool sampled = false;
    std::string bb_trace;
    std::string sca_trace;
};

inline std::string fmt_csv(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline TrialOutput run_trial(const SystemConfig &cfg, std::uint64_t seed, const ExperimentSpec &spec,
                             double sweep_value, bool want_traces)
{
    TrialOutput out;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::mt19937_64 rng(seed);
    EffectiveGains g;
    for (int attempt = 0; attempt < 32 && !out.sampled; attempt++) {
        try {
            g = sample_instance(cfg, rng);
            out.sampled = true;
        } catch (const SingularChannelError &) {
            out.resamples++;
        } catch (const DegenerateChannelError &) {
            out.resamples++;
        }
    }

    ActiveSet s;
    ProblemData pd;
    if (out.sampled) {
        s = build_active_set(g);
        pd = build_problem(g, s, cfg.P_max, cfg.xi);
    }

    for (const auto &name : spec.solvers) {
        TrialRecord rec;
        rec.seed = seed;
        rec.sweep_value = sweep_value;
        rec.solver = name;
        if (!out.sampled) {
            rec.sum_rate = nan;
            rec.residual = nan;
            out.records.push_back(rec);
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (name == "bb") {
                const BBResult r = run_bb(pd, spec.bb);
                rec.sum_rate = r.best.rates.sum_secondary;
                rec.iterations = r.iterations;
                rec.residual = check_feasible(pd, r.best.y).max_violation;
                rec.penalty_leak = r.best.penalty_leak;
                if (want_traces) {
                    std::ostringstream os;
                    os << "iteration,lower,upper,active\n";
                    for (std::size_t i = 0; i < r.bound_history.size(); i++)
                        os << i << "," << fmt_csv(r.bound_history[i].lower) << ","
                           << fmt_csv(r.bound_history[i].upper) << "," << r.bound_history[i].active
                           << "\n";
                    out.bb_trace = os.str();
                }
            } else if (name == "sca1" || name == "sca2") {
                SCAConfig sc = spec.sca;
                sc.variant = (name == "sca1") ? SCAVariant::one : SCAVariant::two;
                const SCAResult r = run_sca(pd, sc);
                rec.sum_rate = r.best.rates.sum_secondary;
                rec.iterations = r.outer_iterations;
                if (name == "sca1") {
                    rec.residual = check_feasible(pd, r.best.y).max_violation;
                } else {
                    const ProblemData pds = build_problem(g, r.scheduled, cfg.P_max, cfg.xi);
                    rec.residual = check_feasible(pds, r.best.y).max_violation;
                }
                rec.penalty_leak = r.best.penalty_leak;
                if (want_traces) {
                    std::ostringstream os;
                    for (std::size_t i = 0; i < r.trace.size(); i++)
                        os << name << "," << i + 1 << "," << fmt_csv(r.trace[i]) << "\n";
                    out.sca_trace += os.str();
                }
            } else if (name == "greedy") {
                const Allocation a = greedy_schedule(g, s, cfg.P_max);
                rec.sum_rate = a.rates.sum_secondary;
                rec.residual = check_feasible(pd, a.y).max_violation;
                rec.penalty_leak = a.penalty_leak;
            } else {
                const Allocation a = brute_force(g, s, cfg, spec.oracle_grid);
                rec.sum_rate = a.rates.sum_secondary;
                rec.residual = check_feasible(pd, a.y).max_violation;
                rec.penalty_leak = a.penalty_leak;
            }
        } catch (const std::exception &) {
            rec.sum_rate = nan;
            rec.residual = nan;
            rec.iterations = 0;
        }
        if (spec.record_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        out.records.push_back(rec);
    }
    return out;
}

inline void mean_se(const std::vector<double> &xs, double &mean, double &se)
{
    mean = 0.0;
    se = 0.0;
    if (xs.empty())
        return;
    for (double x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2)
        return;
    double var = 0.0;
    for (double x : xs)
        var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    se = std::sqrt(var / static_cast<double>(xs.size()));
}

} // namespace detail

// Runs every requested solver on the same sampled instance for each
// (sweep value, trial), in parallel across trials.  Solver failures and
// unsampleable trials become nan rows; the sweep always completes.
inline ExperimentResults run_experiment(const ExperimentSpec &spec)
{
    validate_spec(spec);
    ExperimentResults res;
    res.spec = spec;

    const int n_values = static_cast<int>(spec.values.size());
    const int n_tasks = n_values * spec.trials;
    std::vector<detail::TrialOutput> outputs(static_cast<std::size_t>(n_tasks));

    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks)
                return;
            const int sweep_idx = i / spec.trials;
            const int trial_idx = i % spec.trials;
            const double value = spec.values[static_cast<std::size_t>(sweep_idx)];
            const SystemConfig cfg = apply_sweep(spec.base, spec.sweep, value);
            const std::uint64_t seed = derive_trial_seed(spec.base.seed,
                                                         static_cast<std::uint64_t>(sweep_idx),
                                                         static_cast<std::uint64_t>(trial_idx));
            outputs[static_cast<std::size_t>(i)] =
                detail::run_trial(cfg, seed, spec, value, spec.traces && i == 0);
        }
    };
    const int n_threads = std::max(1, std::min(spec.parallel, n_tasks));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; t++)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
    }
    const auto t1 = std::chrono::steady_clock::now();
    res.elapsed_s = spec.record_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;

    res.resamples.assign(static_cast<std::size_t>(n_values), 0);
    res.unsampled.assign(static_cast<std::size_t>(n_values), 0);
    for (int i = 0; i < n_tasks; i++) {
        const auto &out = outputs[static_cast<std::size_t>(i)];
        const std::size_t sweep_idx = static_cast<std::size_t>(i / spec.trials);
        res.resamples[sweep_idx] += out.resamples;
        if (!out.sampled)
            res.unsampled[sweep_idx]++;
        for (const auto &rec : out.records)
            res.records.push_back(rec);
        if (!out.bb_trace.empty())
            res.bb_trace_csv = out.bb_trace;
        if (!out.sca_trace.empty())
            res.sca_trace_csv = "solver,outer,objective_bpcu\n" + out.sca_trace;
    }

    // per-(value, solver) aggregation and paired solver differences
    const int n_solvers = static_cast<int>(spec.solvers.size());
    for (int v = 0; v < n_values; v++) {
        std::vector<std::vector<double>> rates(static_cast<std::size_t>(n_solvers));
        std::vector<int> leaks(static_cast<std::size_t>(n_solvers), 0);
        for (int t = 0; t < spec.trials; t++) {
            const auto &recs = outputs[static_cast<std::size_t>(v * spec.trials + t)].records;
            for (int sidx = 0; sidx < n_solvers; sidx++) {
                const auto &rec = recs[static_cast<std::size_t>(sidx)];
                if (std::isfinite(rec.sum_rate)) {
                    rates[static_cast<std::size_t>(sidx)].push_back(rec.sum_rate);
                    if (rec.penalty_leak)
                        leaks[static_cast<std::size_t>(sidx)]++;
                }
            }
        }
        for (int sidx = 0; sidx < n_solvers; sidx++) {
            SummaryRow row;
            row.sweep_value = spec.values[static_cast<std::size_t>(v)];
            row.solver = spec.solvers[static_cast<std::size_t>(sidx)];
            row.n = static_cast<int>(rates[static_cast<std::size_t>(sidx)].size());
            detail::mean_se(rates[static_cast<std::size_t>(sidx)], row.mean, row.se);
            row.failures = spec.trials - row.n;
            row.leaks = leaks[static_cast<std::size_t>(sidx)];
            res.summary.push_back(row);
        }
        for (int a = 0; a < n_solvers; a++) {
            for (int b = a + 1; b < n_solvers; b++) {
                std::vector<double> ds;
                for (int t = 0; t < spec.trials; t++) {
                    const auto &recs = outputs[static_cast<std::size_t>(v * spec.trials + t)].records;
                    const double ra = recs[static_cast<std::size_t>(a)].sum_rate;
                    const double rb = recs[static_cast<std::size_t>(b)].sum_rate;
                    if (std::isfinite(ra) && std::isfinite(rb))
                        ds.push_back(ra - rb);
                }
                PairDiffRow row;
                row.sweep_value = spec.values[static_cast<std::size_t>(v)];
                row.solver_a = spec.solvers[static_cast<std::size_t>(a)];
                row.solver_b = spec.solvers[static_cast<std::size_t>(b)];
                row.n = static_cast<int>(ds.size());
                detail::mean_se(ds, row.mean_diff, row.se_diff);
                res.diffs.push_back(row);
            }
        }
    }
    return res;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path &path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path.string());
    return f;
}

} // namespace detail

// Writes trials.csv, summary.csv, diffs.csv, manifest.json and any captured
// solver traces under dir.
inline void emit_outputs(const ExperimentResults &res, const std::string &dir)
{
    if (res.spec.solvers.empty() || res.records.empty())
        throw std::invalid_argument("emit_outputs: no results to write");
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);

    {
        auto f = detail::open_out(base / "trials.csv");
        f << "seed,sweep,solver,sum_rate_bpcu,iterations,wall_ms,residual,penalty_leak\n";
        for (const auto &r : res.records) {
            f << r.seed << "," << detail::fmt_csv(r.sweep_value) << "," << r.solver << ","
              << detail::fmt_csv(r.sum_rate) << "," << r.iterations << ","
              << detail::fmt_csv(r.wall_ms) << "," << detail::fmt_csv(r.residual) << ","
              << (r.penalty_leak ? 1 : 0) << "\n";
        }
        if (!f.good())
            throw std::runtime_error("write failed: " + (base / "trials.csv").string());
    }
    {
        auto f = detail::open_out(base / "summary.csv");
        f << "sweep,solver,n,mean_bpcu,se_bpcu,failures,leaks\n";
        for (const auto &r : res.summary)
            f << detail::fmt_csv(r.sweep_value) << "," << r.solver << "," << r.n << ","
              << detail::fmt_csv(r.mean) << "," << detail::fmt_csv(r.se) << "," << r.failures << ","
              << r.leaks << "\n";
        if (!f.good())
            throw std::runtime_error("write failed: " + (base / "summary.csv").string());
    }
    {
        auto f = detail::open_out(base / "diffs.csv");
        f << "sweep,solver_a,solver_b,n,mean_diff_bpcu,se_diff_bpcu\n";
        for (const auto &r : res.diffs)
            f << detail::fmt_csv(r.sweep_value) << "," << r.solver_a << "," << r.solver_b << ","
              << r.n << "," << detail::fmt_csv(r.mean_diff) << "," << detail::fmt_csv(r.se_diff)
              << "\n";
        if (!f.good())
            throw std::runtime_error("write failed: " + (base / "diffs.csv").string());
    }
    {
        nlohmann::json manifest;
        manifest["spec"] = to_json(res.spec);
        manifest["version"] = kVersion;
        manifest["elapsed_s"] = res.elapsed_s;
        manifest["resamples"] = res.resamples;
        manifest["unsampled"] = res.unsampled;
        auto f = detail::open_out(base / "manifest.json");
        f << manifest.dump(2) << "\n";
        if (!f.good())
            throw std::runtime_error("write failed: " + (base / "manifest.json").string());
    }
    if (!res.bb_trace_csv.empty()) {
        auto f = detail::open_out(base / "bb_bounds.csv");
        f << res.bb_trace_csv;
    }
    if (!res.sca_trace_csv.empty()) {
        auto f = detail::open_out(base / "sca_trace.csv");
        f << res.sca_trace_csv;
    }
}

} // namespace thznoma
