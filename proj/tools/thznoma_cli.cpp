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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <thznoma/thznoma.hpp>

namespace {

struct Common {
    int trials = 0;
    std::uint64_t seed = 1;
    bool seed_set = false;
    std::string out;
    int parallel = 0;
    std::vector<std::string> solvers;
    bool timing = false;
};

void add_common(CLI::App *cmd, Common &c)
{
    cmd->add_option("--trials", c.trials, "Monte Carlo trials per sweep value");
    cmd->add_option("--seed", c.seed, "master seed")->each([&c](const std::string &) {
        c.seed_set = true;
    });
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--parallel", c.parallel, "worker threads");
    cmd->add_option("--solvers", c.solvers, "subset of bb,sca1,sca2,greedy,oracle")->delimiter(',');
    cmd->add_flag("--timing", c.timing, "record wall-clock times (reruns stop being byte-identical)");
}

void apply_common(thznoma::ExperimentSpec &spec, const Common &c, const std::string &default_out)
{
    if (spec.output.empty() || spec.output == "out")
        spec.output = default_out;
    if (c.trials > 0)
        spec.trials = c.trials;
    if (c.seed_set)
        spec.base.seed = c.seed;
    if (!c.out.empty())
        spec.output = c.out;
    if (c.parallel > 0)
        spec.parallel = c.parallel;
    if (!c.solvers.empty())
        spec.solvers = c.solvers;
    if (c.timing)
        spec.record_timing = true;
}

int default_parallel()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

void print_summary(const thznoma::ExperimentResults &res)
{
    std::printf("%10s %8s %6s %12s %10s %9s %6s\n", "sweep", "solver", "n", "mean_bpcu", "se_bpcu",
                "failures", "leaks");
    for (const auto &row : res.summary)
        std::printf("%10g %8s %6d %12.4f %10.4f %9d %6d\n", row.sweep_value, row.solver.c_str(),
                    row.n, row.mean, row.se, row.failures, row.leaks);
}

int execute(thznoma::ExperimentSpec &spec)
{
    const thznoma::ExperimentResults res = thznoma::run_experiment(spec);
    thznoma::emit_outputs(res, spec.output);
    print_summary(res);
    std::printf("wrote %s/{trials.csv,summary.csv,diffs.csv,manifest.json}\n", spec.output.c_str());
    return 0;
}

int run_falpha(const std::string &out_dir)
{
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/falpha.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path);
    f << "x,beta,argmax_alpha,f_at_1,f_at_0,quad\n";

    const int nx = 50, nb = 50, na = 10001;
    int argmax_at_one = 0;
    bool quad_positive = true;
    for (int i = 0; i < nx; i++) {
        const double x = std::exp(std::log(100.0) * (i + 1) / nx);
        for (int j = 0; j < nb; j++) {
            const double beta = 0.01 * std::pow(1e4, static_cast<double>(j) / (nb - 1));
            double best_alpha = 0.0, best_val = -1e300;
            for (int a = 0; a < na; a++) {
                const double alpha = static_cast<double>(a) / (na - 1);
                const double v = thznoma::f_alpha(alpha, x, beta);
                if (v > best_val) {
                    best_val = v;
                    best_alpha = alpha;
                }
            }
            const double quad = (1.0 + beta) * (1.0 + beta) * x * x - beta * x - beta * beta;
            if (best_alpha == 1.0)
                argmax_at_one++;
            if (quad <= 0.0)
                quad_positive = false;
            char line[160];
            std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", x, beta,
                          best_alpha, thznoma::f_alpha(1.0, x, beta), thznoma::f_alpha(0.0, x, beta),
                          quad);
            f << line;
        }
    }
    std::printf("argmax alpha == 1 on %d/%d grid cells; quadratic positive: %s\n", argmax_at_one,
                nx * nb, quad_positive ? "yes" : "no");
    std::printf("wrote %s\n", path.c_str());
    return argmax_at_one == nx * nb && quad_positive ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"thznoma: lends THz beams to secondary users and splits the power budget"};
    app.require_subcommand(1);

    Common c;
    std::string spec_path;
    double fig1_rs = 10.0, fig1_rbar = 1.0;

    auto *cmd_run = app.add_subcommand("run", "run an experiment described by a JSON spec file");
    cmd_run->add_option("spec", spec_path, "spec JSON path")->required();
    add_common(cmd_run, c);

    auto *cmd_table1 = app.add_subcommand(
        "table1", "sum-rate table over secondary-user counts, capped and short solver budgets");
    add_common(cmd_table1, c);

    auto *cmd_fig1 = app.add_subcommand("fig1", "sum rate vs number of secondary users");
    cmd_fig1->add_option("--rs", fig1_rs, "secondary cell radius in meters");
    cmd_fig1->add_option("--rbar", fig1_rbar, "primary rate target in BPCU");
    add_common(cmd_fig1, c);

    auto *cmd_fig2 = app.add_subcommand("fig2", "solver convergence traces on one instance");
    add_common(cmd_fig2, c);

    auto *cmd_fig3 = app.add_subcommand("fig3", "sum rate vs number of primary users");
    add_common(cmd_fig3, c);

    auto *cmd_fig4 = app.add_subcommand("fig4", "sum rate vs number of antennas");
    add_common(cmd_fig4, c);

    auto *cmd_fig5 = app.add_subcommand("fig5", "sum rate vs codebook size");
    add_common(cmd_fig5, c);

    auto *cmd_falpha = app.add_subcommand("falpha", "power-split property sweep for the two-user beam");
    add_common(cmd_falpha, c);

    CLI11_PARSE(app, argc, argv);

    try {
        thznoma::ExperimentSpec spec;
        spec.parallel = default_parallel();

        if (app.got_subcommand(cmd_run)) {
            std::ifstream f(spec_path);
            if (!f)
                throw std::runtime_error("cannot read spec file: " + spec_path);
            nlohmann::json j;
            f >> j;
            spec = thznoma::experiment_spec_from_json(j);
            apply_common(spec, c, spec.output.empty() ? "out/run" : spec.output);
            return execute(spec);
        }
        if (app.got_subcommand(cmd_table1)) {
            spec.sweep = "M";
            spec.values = {1, 2, 4, 6, 8};
            spec.solvers = {"bb"};
            apply_common(spec, c, "out/table1");
            const std::string out_base = spec.output;

            thznoma::ExperimentSpec cap = spec;
            cap.bb.n_itr = 20000; // stands in for an unbounded budget; labeled "cap"
            cap.output = out_base + "/nitr_cap";
            const auto res_cap = thznoma::run_experiment(cap);
            thznoma::emit_outputs(res_cap, cap.output);

            thznoma::ExperimentSpec short_run = spec;
            short_run.bb.n_itr = 200;
            short_run.output = out_base + "/nitr_200";
            const auto res_200 = thznoma::run_experiment(short_run);
            thznoma::emit_outputs(res_200, short_run.output);

            std::printf("%6s %18s %18s\n", "M", "bb(cap) mean_bpcu", "bb(200) mean_bpcu");
            for (std::size_t i = 0; i < spec.values.size(); i++)
                std::printf("%6g %18.4f %18.4f\n", spec.values[i], res_cap.summary[i].mean,
                            res_200.summary[i].mean);
            std::printf("wrote %s/{nitr_cap,nitr_200}\n", out_base.c_str());
            return 0;
        }
        if (app.got_subcommand(cmd_fig1)) {
            spec.sweep = "M";
            spec.values = {1, 2, 4, 8};
            spec.base.r_S = fig1_rs;
            thznoma::set_uniform_rate_target(spec.base, fig1_rbar);
            apply_common(spec, c, "out/fig1");
            return execute(spec);
        }
        if (app.got_subcommand(cmd_fig2)) {
            spec.sweep = "M";
            spec.values = {4};
            spec.trials = 1;
            spec.traces = true;
            spec.solvers = {"bb", "sca1", "sca2"};
            apply_common(spec, c, "out/fig2");
            return execute(spec);
        }
        if (app.got_subcommand(cmd_fig3)) {
            spec.sweep = "K";
            spec.values = {2, 4, 6};
            spec.base.M = 4;
            apply_common(spec, c, "out/fig3");
            return execute(spec);
        }
        if (app.got_subcommand(cmd_fig4)) {
            spec.sweep = "N";
            spec.values = {10, 20, 40};
            apply_common(spec, c, "out/fig4");
            return execute(spec);
        }
        if (app.got_subcommand(cmd_fig5)) {
            spec.sweep = "N_Q";
            spec.values = {10, 20, 40};
            apply_common(spec, c, "out/fig5");
            return execute(spec);
        }
        if (app.got_subcommand(cmd_falpha)) {
            return run_falpha(c.out.empty() ? "out/falpha" : c.out);
        }
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
