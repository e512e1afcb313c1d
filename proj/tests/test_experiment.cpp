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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <thznoma/experiment.hpp>

#include "support/oracles.hpp"

using namespace thznoma;

namespace {

std::filesystem::path fresh_dir(const std::string &leaf)
{
    const auto dir = std::filesystem::temp_directory_path() / "thznoma_experiment_tests" / leaf;
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path &path)
{
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string first_line(const std::string &text)
{
    return text.substr(0, text.find('\n'));
}

// Small sweep that finishes quickly: two secondary-count points, two cheap
// solvers, three trials each.
ExperimentSpec small_spec()
{
    ExperimentSpec spec;
    spec.base = default_config();
    spec.base.K = 2;
    set_uniform_rate_target(spec.base, 1.0);
    spec.sweep = "M";
    spec.values = {1, 2};
    spec.trials = 3;
    spec.solvers = {"greedy", "sca2"};
    spec.parallel = 1;
    spec.record_timing = false;
    spec.traces = false;
    return spec;
}

} // namespace

TEST_CASE("trial seeds are reproducible and collision-free across the grid", "[experiment]")
{
    CHECK(derive_trial_seed(1, 0, 0) == derive_trial_seed(1, 0, 0));
    CHECK(derive_trial_seed(7, 3, 11) == derive_trial_seed(7, 3, 11));

    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {1ULL, 2ULL, 20260816ULL})
        for (std::size_t sweep = 0; sweep < 4; sweep++)
            for (std::size_t trial = 0; trial < 50; trial++)
                seen.insert(derive_trial_seed(master, sweep, trial));
    CHECK(seen.size() == 3 * 4 * 50);
}

TEST_CASE("every sweep variable lands on its config field", "[experiment]")
{
    SystemConfig base = default_config();
    set_uniform_rate_target(base, 1.5);

    const SystemConfig m = apply_sweep(base, "M", 8);
    CHECK(m.M == 8);
    CHECK(m.K == base.K);

    const SystemConfig k = apply_sweep(base, "K", 6);
    CHECK(k.K == 6);
    REQUIRE(k.R_bar.size() == 6);
    CHECK(k.R_bar.minCoeff() == 1.5);
    CHECK(k.R_bar.maxCoeff() == 1.5);

    const SystemConfig n = apply_sweep(base, "N", 20);
    CHECK(n.N == 20);

    const SystemConfig nq = apply_sweep(base, "N_Q", 40);
    CHECK(nq.N_Q == 40);

    const SystemConfig rs = apply_sweep(base, "r_S", 2.5);
    CHECK(rs.r_S == 2.5);

    const SystemConfig rb = apply_sweep(base, "R_bar", 0.5);
    REQUIRE(rb.R_bar.size() == base.K);
    CHECK(rb.R_bar.minCoeff() == 0.5);
    CHECK(rb.R_bar.maxCoeff() == 0.5);

    CHECK_THROWS_AS(apply_sweep(base, "bogus", 1.0), std::invalid_argument);
}

TEST_CASE("spec validation rejects empty or malformed sweeps", "[experiment]")
{
    CHECK_NOTHROW(validate_spec(ExperimentSpec{}));

    ExperimentSpec spec;

    spec = ExperimentSpec{};
    spec.trials = 0;
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = ExperimentSpec{};
    spec.values.clear();
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = ExperimentSpec{};
    spec.solvers.clear();
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = ExperimentSpec{};
    spec.solvers = {"bb", "magic"};
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = ExperimentSpec{};
    spec.parallel = 0;
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = ExperimentSpec{};
    spec.oracle_grid = 0;
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    // sweeping K past N must fail the per-value config validation
    spec = ExperimentSpec{};
    spec.sweep = "K";
    spec.values = {2, 20};
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);
}

TEST_CASE("experiment specs survive a JSON round trip byte for byte", "[experiment]")
{
    ExperimentSpec spec;
    spec.base = default_config();
    spec.base.M = 2;
    spec.base.seed = 99;
    spec.sweep = "R_bar";
    spec.values = {0.5, 1.0, 1.5};
    spec.trials = 7;
    spec.solvers = {"greedy", "sca2"};
    spec.bb.epsilon = 0.05;
    spec.bb.n_itr = 77;
    spec.bb.tighten = false;
    spec.bb.prune = false;
    spec.sca.outer_tol = 1e-3;
    spec.sca.max_outer = 12;
    spec.sca.inner_tol = 1e-7;
    spec.oracle_grid = 33;
    spec.output = "elsewhere";
    spec.parallel = 3;
    spec.record_timing = true;
    spec.traces = true;

    const nlohmann::json j = to_json(spec);
    const ExperimentSpec back = experiment_spec_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("config powers accept dBm aliases when parsed from JSON", "[experiment]")
{
    nlohmann::json j;
    j["P_max_dbm"] = 30.0;
    j["rho_P_dbm"] = 20.0;
    j["sigma2_dbm"] = -90.0;
    const SystemConfig cfg = system_config_from_json(j);
    CHECK(cfg.P_max == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(cfg.rho_P == Catch::Approx(0.1).epsilon(1e-12));
    CHECK(cfg.sigma2 == Catch::Approx(1e-12).epsilon(1e-9));

    // explicit watt keys win over their dBm aliases
    j["P_max"] = 2.0;
    CHECK(system_config_from_json(j).P_max == 2.0);
}

TEST_CASE("JSON readers reject unknown keys instead of ignoring them", "[experiment]")
{
    nlohmann::json cfg;
    cfg["sigma2_dBm"] = -90.0;
    CHECK_THROWS_AS(system_config_from_json(cfg), std::invalid_argument);

    nlohmann::json spec;
    spec["sweep_variable"] = "M";
    CHECK_THROWS_AS(experiment_spec_from_json(spec), std::invalid_argument);

    nlohmann::json bb;
    bb["iterations"] = 10;
    CHECK_THROWS_AS(bb_config_from_json(bb), std::invalid_argument);

    nlohmann::json sca;
    sca["tolerance"] = 1e-4;
    CHECK_THROWS_AS(sca_config_from_json(sca), std::invalid_argument);
}

TEST_CASE("a small sweep produces one record per value, trial and solver", "[experiment]")
{
    const ExperimentSpec spec = small_spec();
    const ExperimentResults res = run_experiment(spec);

    REQUIRE(res.records.size() == 2 * 3 * 2);
    for (std::size_t i = 0; i < res.records.size(); i++) {
        const auto &rec = res.records[i];
        CHECK(rec.sweep_value == spec.values[i / 6]);
        CHECK(rec.solver == spec.solvers[i % 2]);
        CHECK(rec.wall_ms == 0.0);
        const std::size_t trial = (i / 2) % 3;
        CHECK(rec.seed == derive_trial_seed(spec.base.seed, i / 6, trial));
    }
    CHECK(res.elapsed_s == 0.0);

    REQUIRE(res.summary.size() == 4);
    for (const auto &row : res.summary)
        CHECK(row.n + row.failures == spec.trials);
    CHECK(res.summary[0].sweep_value == 1.0);
    CHECK(res.summary[0].solver == "greedy");
    CHECK(res.summary[1].solver == "sca2");
    CHECK(res.summary[2].sweep_value == 2.0);

    REQUIRE(res.diffs.size() == 2);
    for (const auto &row : res.diffs) {
        CHECK(row.solver_a == "greedy");
        CHECK(row.solver_b == "sca2");
        CHECK(row.n <= spec.trials);
    }

    REQUIRE(res.resamples.size() == 2);
    REQUIRE(res.unsampled.size() == 2);
}

TEST_CASE("reruns and thread counts never change the emitted tables", "[experiment]")
{
    ExperimentSpec spec = small_spec();
    const auto dir_a = fresh_dir("serial");
    const auto dir_b = fresh_dir("parallel");

    spec.parallel = 1;
    const ExperimentResults serial = run_experiment(spec);
    emit_outputs(serial, dir_a.string());

    spec.parallel = 3;
    const ExperimentResults parallel = run_experiment(spec);
    emit_outputs(parallel, dir_b.string());

    CHECK(slurp(dir_a / "trials.csv") == slurp(dir_b / "trials.csv"));
    CHECK(slurp(dir_a / "summary.csv") == slurp(dir_b / "summary.csv"));
    CHECK(slurp(dir_a / "diffs.csv") == slurp(dir_b / "diffs.csv"));

    // a rerun of the identical spec is byte-identical too
    spec.parallel = 1;
    const auto dir_c = fresh_dir("rerun");
    emit_outputs(run_experiment(spec), dir_c.string());
    CHECK(slurp(dir_a / "trials.csv") == slurp(dir_c / "trials.csv"));
    CHECK(slurp(dir_a / "manifest.json") == slurp(dir_c / "manifest.json"));
}

TEST_CASE("emitted tables carry the pinned headers and row counts", "[experiment]")
{
    const ExperimentSpec spec = small_spec();
    const ExperimentResults res = run_experiment(spec);
    const auto dir = fresh_dir("tables");
    emit_outputs(res, dir.string());

    const std::string trials = slurp(dir / "trials.csv");
    CHECK(first_line(trials) == "seed,sweep,solver,sum_rate_bpcu,iterations,wall_ms,residual,penalty_leak");
    std::size_t lines = 0;
    for (char ch : trials)
        if (ch == '\n')
            lines++;
    CHECK(lines == res.records.size() + 1);

    CHECK(first_line(slurp(dir / "summary.csv")) == "sweep,solver,n,mean_bpcu,se_bpcu,failures,leaks");
    CHECK(first_line(slurp(dir / "diffs.csv")) == "sweep,solver_a,solver_b,n,mean_diff_bpcu,se_diff_bpcu");

    const nlohmann::json manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("version").get<std::string>() == std::string(kVersion));
    const ExperimentSpec back = experiment_spec_from_json(manifest.at("spec"));
    CHECK(to_json(back).dump() == to_json(res.spec).dump());
}

TEST_CASE("solver traces from the first trial reach their own files", "[experiment]")
{
    ExperimentSpec spec = small_spec();
    spec.solvers = {"bb", "sca2"};
    spec.values = {2};
    spec.trials = 1;
    spec.traces = true;
    spec.bb.n_itr = 40;

    // pick a master seed whose first trial yields a nonempty active set, so
    // both solvers have something to trace
    for (std::uint64_t master = 1; master <= 40; master++) {
        const SystemConfig cfg = apply_sweep(spec.base, spec.sweep, spec.values[0]);
        const auto pd = testsupport::sample_problem(cfg, derive_trial_seed(master, 0, 0));
        if (pd.has_value() && pd->size() > 0) {
            spec.base.seed = master;
            break;
        }
    }

    const ExperimentResults res = run_experiment(spec);
    REQUIRE_FALSE(res.bb_trace_csv.empty());
    CHECK(first_line(res.bb_trace_csv) == "iteration,lower,upper,active");
    REQUIRE_FALSE(res.sca_trace_csv.empty());
    CHECK(first_line(res.sca_trace_csv) == "solver,outer,objective_bpcu");

    const auto dir = fresh_dir("traces");
    emit_outputs(res, dir.string());
    CHECK(std::filesystem::exists(dir / "bb_bounds.csv"));
    CHECK(std::filesystem::exists(dir / "sca_trace.csv"));
    CHECK(slurp(dir / "bb_bounds.csv") == res.bb_trace_csv);
}

TEST_CASE("emitting an empty result set fails before touching the directory", "[experiment]")
{
    ExperimentResults res;
    res.spec = small_spec();
    const auto dir = fresh_dir("never_created");
    CHECK_THROWS_AS(emit_outputs(res, dir.string()), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(dir));
}
