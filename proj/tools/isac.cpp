// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// isac run|sweep|beampattern|montecarlo --config <file> [--schemes a,b]
//      [--eta-grid 28:38:1] [--trials N] [--seed S] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible single run.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isac/isac.hpp"

namespace {

constexpr int kExitConfig = 2;

struct Options {
    std::string config_path;
    std::string schemes;
    std::string eta_grid;
    int trials = 20;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    unsigned threads = 0;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_path, "JSON configuration file (defaults built in when omitted)");
    sub->add_option("--schemes", o.schemes, "Comma-separated schemes: proposed, zero-forcing, fixed-d2d, "
                                            "communication-only, sensing-only");
    sub->add_option("--eta-grid", o.eta_grid, "SCNR thresholds in dB, start:stop:step or a,b,c");
    sub->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Seed of trial 0 (default: rng_seed from the config)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

void print_summary(const isac::ExperimentResult& res) {
    for (const auto& [name, table] : res.files)
        std::printf("wrote %s (%zu rows)\n", name.c_str(), table.rows.size());
    if (auto it = res.files.find("sweep.csv"); it != res.files.end()) {
        std::printf("%-20s %8s %12s %10s %10s\n", "scheme", "eta_db", "mean_rate", "std", "infeas");
        for (const auto& row : it->second.rows)
            std::printf("%-20s %8s %12s %10s %10s\n", row[0].c_str(), row[1].c_str(),
                        row[2].empty() ? "-" : row[2].c_str(), row[3].c_str(), row[5].c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"D2D-assisted ISAC joint beamforming and power control simulator"};
    app.require_subcommand(1);
    Options opts;
    for (const char* name : {"run", "sweep", "beampattern", "montecarlo"}) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub, opts);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    isac::ExperimentSpec spec;
    try {
        spec.command = isac::parse_command(app.get_subcommands().front()->get_name());
        spec.config = opts.config_path.empty() ? isac::default_config() : isac::load_config(opts.config_path);
        spec.schemes = opts.schemes.empty() ? isac::default_schemes(spec.command)
                                            : isac::parse_scheme_list(opts.schemes);
        if (!opts.eta_grid.empty()) spec.eta_grid = isac::parse_eta_grid(opts.eta_grid);
        spec.trials = opts.trials;
        spec.seed_base = opts.seed.value_or(spec.config.rng_seed);
        spec.output_dir = opts.out;
        spec.threads = opts.threads;
        spec.validate();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    }

    try {
        const isac::ExperimentResult res = isac::run_experiment(spec);
        isac::write_result(res, spec.output_dir);
        print_summary(res);
        if (res.exit_code != 0) std::fprintf(stderr, "%s\n", res.message.c_str());
        return res.exit_code;
    } catch (const isac::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
