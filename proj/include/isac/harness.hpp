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

#pragma once

// Experiment orchestration: convergence traces, beampatterns, sum rate versus
// SCNR threshold, and raw Monte Carlo tables. Trial i uses seed seed_base + i.
// Output CSVs start with `#` lines holding the version, command, seeds and the
// exact configuration.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "isac/channel.hpp"
#include "isac/config_io.hpp"
#include "isac/errors.hpp"
#include "isac/optimizer.hpp"
#include "isac/scenario.hpp"
#include "isac/sensing.hpp"

namespace isac {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { Run, Sweep, Beampattern, MonteCarlo };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::Run: return "run";
    case Command::Sweep: return "sweep";
    case Command::Beampattern: return "beampattern";
    case Command::MonteCarlo: return "montecarlo";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    for (Command c : {Command::Run, Command::Sweep, Command::Beampattern, Command::MonteCarlo})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown command '" + s + "'");
}

/// SCNR thresholds 28..38 dB in 1 dB steps.
inline std::vector<double> default_eta_grid() {
    std::vector<double> g;
    for (int e = 28; e <= 38; ++e) g.push_back(e);
    return g;
}

/// "a:b:step" (inclusive) or a comma-separated list.
inline std::vector<double> parse_eta_grid(const std::string& text) {
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::vector<double> parts;
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
            if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
                throw ConfigError("eta grid must be start:stop:step with step > 0");
            const int n = static_cast<int>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
            for (int i = 0; i < n; ++i) out.push_back(parts[0] + i * parts[2]);
        } else {
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
        }
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse eta grid '" + text + "'");
    }
    if (out.empty()) throw ConfigError("eta grid is empty");
    for (double v : out)
        if (!std::isfinite(v)) throw ConfigError("eta grid has a non-finite entry");
    return out;
}

inline std::vector<SchemeId> parse_scheme_list(const std::string& text) {
    std::vector<SchemeId> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(parse_scheme(tok));
    if (out.empty()) throw ConfigError("scheme list is empty");
    return out;
}

struct ExperimentSpec {
    Command command = Command::Run;
    SystemConfig config = default_config();
    std::vector<SchemeId> schemes;
    std::vector<double> eta_grid = default_eta_grid();
    int trials = 20;
    std::uint64_t seed_base = 1;
    std::string output_dir = ".";
    unsigned threads = 0; // 0: hardware concurrency

    void validate() const {
        config.validate();
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (eta_grid.empty()) throw ConfigError("eta grid must be nonempty");
        if (schemes.empty()) throw ConfigError("scheme list must be nonempty");
    }
};

inline std::vector<SchemeId> default_schemes(Command c) {
    if (c == Command::Beampattern) return {SchemeId::SensingOnly, SchemeId::Proposed, SchemeId::ZeroForcing};
    return {SchemeId::Proposed, SchemeId::ZeroForcing, SchemeId::FixedD2D, SchemeId::CommunicationOnly};
}

// ----- Worker pool ------------------------------------------------------------

/// Run fn(0..n-1) on a bounded pool; results come back in index order.
template <class Fn>
auto parallel_map(int n, Fn fn, unsigned threads = 0) -> std::vector<decltype(fn(0))> {
    using R = decltype(fn(0));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    unsigned hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    hw = std::min<unsigned>(hw, std::max(1, n));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (hw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::vector<R> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

// ----- Trials ---------------------------------------------------------------------

struct Realization {
    Geometry geometry;
    ChannelSet channels;
};

inline Realization draw_realization(const SystemConfig& cfg, std::uint64_t seed) {
    RngStream geo_rng(seed, "geometry");
    RngStream fading_rng(seed, "fading");
    Realization r;
    r.geometry = sample_geometry(cfg, geo_rng);
    r.channels = sample_channels(cfg, r.geometry, fading_rng);
    return r;
}

inline SystemConfig with_threshold(SystemConfig cfg, double eta_db) {
    cfg.scnr_threshold = eta_db;
    return cfg;
}

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    SchemeId scheme = SchemeId::Proposed;
    double eta_db = 0.0;
    bool feasible = true;
    double sum_rate = NAN; // relaxed-covariance rate
    double extracted_sum_rate = NAN;
    double cue_rate = NAN;
    double d2d_rate = NAN;
    double scnr_db = NAN;
    int iterations = 0;
    bool converged = false;
};

/// One scheme at one threshold on one realization; infeasibility becomes a flagged record.
inline TrialRecord evaluate_trial(const Realization& r, const RadarEnvironment& env, const SystemConfig& cfg,
                                  SchemeId scheme, int trial, std::uint64_t seed,
                                  BeamformingSolution* keep = nullptr) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = seed;
    rec.scheme = scheme;
    rec.eta_db = cfg.scnr_threshold;
    RngStream rng(seed, std::string("randomization/") + to_string(scheme));
    try {
        BeamformingSolution sol = solve_scheme(r.channels, env, cfg, scheme, rng);
        const RateReport rr = sum_rate(r.channels, sol.cov, sol.powers, cfg.comm_noise);
        rec.sum_rate = sol.relaxed_sum_rate;
        rec.extracted_sum_rate = sol.extracted_sum_rate;
        rec.cue_rate = rr.cue_sum();
        rec.d2d_rate = rr.d2d_sum();
        rec.scnr_db = sol.achieved_scnr;
        rec.iterations = sol.iterations_used;
        rec.converged = sol.converged;
        if (keep) *keep = std::move(sol);
    } catch (const InfeasibleError&) {
        rec.feasible = false;
    }
    return rec;
}

/// Every (scheme, eta) record for one trial. Schemes without the SCNR
/// constraint are solved once and repeated across the grid.
inline std::vector<TrialRecord> run_trial(const ExperimentSpec& spec, const RadarEnvironment& env, int trial,
                                          std::vector<BeamformingSolution>* keep = nullptr) {
    const std::uint64_t seed = spec.seed_base + static_cast<std::uint64_t>(trial);
    const Realization r = draw_realization(spec.config, seed);
    std::vector<TrialRecord> out;
    for (SchemeId s : spec.schemes) {
        if (!has_sensing_constraint(s)) {
            BeamformingSolution sol;
            const TrialRecord base = evaluate_trial(r, env, spec.config, s, trial, seed, keep ? &sol : nullptr);
            for (double eta : spec.eta_grid) {
                TrialRecord rec = base;
                rec.eta_db = eta;
                out.push_back(rec);
                if (keep) keep->push_back(sol);
            }
            continue;
        }
        for (double eta : spec.eta_grid) {
            BeamformingSolution sol;
            out.push_back(evaluate_trial(r, env, with_threshold(spec.config, eta), s, trial, seed,
                                         keep ? &sol : nullptr));
            if (keep) keep->push_back(std::move(sol));
        }
    }
    return out;
}

// ----- Tables and aggregation ---------------------------------------------------------

/// Loosely typed table: header plus string cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw AggregationError("table has no column '" + name + "'");
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline const std::vector<std::string>& trial_columns() {
    static const std::vector<std::string> cols = {"trial",    "seed",     "scheme",  "eta_db",
                                                  "feasible", "sum_rate", "extracted_sum_rate",
                                                  "cue_rate", "d2d_rate", "scnr_db", "iterations",
                                                  "converged"};
    return cols;
}

inline std::vector<std::string> to_row(const TrialRecord& r) {
    return {std::to_string(r.trial),        std::to_string(r.seed),
            to_string(r.scheme),            format_number(r.eta_db),
            r.feasible ? "1" : "0",         format_number(r.sum_rate),
            format_number(r.extracted_sum_rate), format_number(r.cue_rate),
            format_number(r.d2d_rate),      format_number(r.scnr_db),
            std::to_string(r.iterations),   r.converged ? "1" : "0"};
}

inline Table trial_table(const std::vector<TrialRecord>& recs) {
    Table t;
    t.columns = trial_columns();
    for (const auto& r : recs) t.rows.push_back(to_row(r));
    return t;
}

struct SummaryRow {
    SchemeId scheme = SchemeId::Proposed;
    double eta_db = 0.0;
    std::optional<double> mean_rate; // absent when every trial was infeasible
    double std_rate = 0.0;
    int trials = 0;
    double infeasible_rate = 0.0;
};

struct GainRow {
    double eta_db = 0.0;
    SchemeId scheme = SchemeId::Proposed;
    SchemeId baseline = SchemeId::FixedD2D;
    std::optional<double> relative_gain;
};

struct Summary {
    std::vector<SummaryRow> rows;
    std::vector<GainRow> gains;

    const SummaryRow* find(SchemeId s, double eta) const {
        for (const auto& r : rows)
            if (r.scheme == s && std::abs(r.eta_db - eta) < 1e-9) return &r;
        return nullptr;
    }
};

/// Mean / sample std over feasible trials per (scheme, eta), infeasibility
/// rate, and relative gains of proposed and zero-forcing over fixed-D2D.
/// Values are sorted before summation, so the result does not depend on
/// trial order.
inline Summary aggregate(const std::vector<Table>& tables) {
    if (tables.empty()) throw AggregationError("aggregate: no tables");
    for (const auto& t : tables)
        if (t.columns != tables.front().columns) throw AggregationError("aggregate: column mismatch between tables");
    const Table& ref = tables.front();
    const int c_scheme = ref.column("scheme");
    const int c_eta = ref.column("eta_db");
    const int c_feasible = ref.column("feasible");
    const int c_rate = ref.column("sum_rate");

    struct Acc {
        std::vector<double> values;
        int count = 0;
        int infeasible = 0;
    };
    std::map<std::pair<int, double>, Acc> groups;
    for (const auto& t : tables)
        for (const auto& row : t.rows) {
            if (row.size() != t.columns.size()) throw AggregationError("aggregate: ragged row");
            const SchemeId s = parse_scheme(row[c_scheme]);
            const double eta = std::stod(row[c_eta]);
            Acc& a = groups[{static_cast<int>(s), eta}];
            ++a.count;
            if (row[c_feasible] == "1") a.values.push_back(std::stod(row[c_rate]));
            else ++a.infeasible;
        }

    Summary out;
    for (auto& [key, acc] : groups) {
        SummaryRow r;
        r.scheme = static_cast<SchemeId>(key.first);
        r.eta_db = key.second;
        r.trials = acc.count;
        r.infeasible_rate = static_cast<double>(acc.infeasible) / acc.count;
        if (!acc.values.empty()) {
            std::sort(acc.values.begin(), acc.values.end());
            double sum = 0.0;
            for (double v : acc.values) sum += v;
            const double mean = sum / acc.values.size();
            double ss = 0.0;
            for (double v : acc.values) ss += (v - mean) * (v - mean);
            r.mean_rate = mean;
            r.std_rate = acc.values.size() > 1 ? std::sqrt(ss / (acc.values.size() - 1)) : 0.0;
        }
        out.rows.push_back(r);
    }
    for (const auto& base : out.rows) {
        if (base.scheme != SchemeId::FixedD2D) continue;
        for (SchemeId s : {SchemeId::Proposed, SchemeId::ZeroForcing}) {
            const SummaryRow* r = out.find(s, base.eta_db);
            if (!r) continue;
            GainRow g{base.eta_db, s, SchemeId::FixedD2D, std::nullopt};
            if (r->mean_rate && base.mean_rate && *base.mean_rate > 0.0)
                g.relative_gain = *r->mean_rate / *base.mean_rate - 1.0;
            out.gains.push_back(g);
        }
    }
    return out;
}

// ----- Experiment results -------------------------------------------------------------

struct ExperimentResult {
    std::map<std::string, Table> files; // file name -> table
    std::string metadata;               // '#' header lines shared by every file
    int exit_code = 0;
    std::string message;
};

inline std::string metadata_header(const ExperimentSpec& spec) {
    std::ostringstream os;
    os << "# isac " << kVersion << '\n';
    os << "# command: " << to_string(spec.command) << '\n';
    os << "# seed_base: " << spec.seed_base << '\n';
    os << "# trials: " << spec.trials << '\n';
    os << "# schemes:";
    for (SchemeId s : spec.schemes) os << ' ' << to_string(s);
    os << '\n';
    os << "# eta_grid_db:";
    for (double e : spec.eta_grid) os << ' ' << format_number(e);
    os << '\n';
    os << "# config: " << config_to_json(spec.config).dump() << '\n';
    return os.str();
}

inline void write_table(std::ostream& out, const std::string& metadata, const Table& t) {
    out << metadata;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

/// Parse a CSV written by write_table ('#' lines skipped).
inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header) {
            t.columns = cells;
            header = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    return t;
}

inline Table summary_table(const Summary& s) {
    Table t;
    t.columns = {"scheme", "eta_db", "mean_rate", "std_rate", "trials", "infeasible_rate"};
    for (const auto& r : s.rows)
        t.rows.push_back({to_string(r.scheme), format_number(r.eta_db),
                          r.mean_rate ? format_number(*r.mean_rate) : std::string(), format_number(r.std_rate),
                          std::to_string(r.trials), format_number(r.infeasible_rate)});
    return t;
}

inline Table gains_table(const Summary& s) {
    Table t;
    t.columns = {"eta_db", "scheme", "baseline", "relative_gain"};
    for (const auto& g : s.gains)
        t.rows.push_back({format_number(g.eta_db), to_string(g.scheme), to_string(g.baseline),
                          g.relative_gain ? format_number(*g.relative_gain) : std::string()});
    return t;
}

namespace detail {

inline ExperimentResult run_convergence(const ExperimentSpec& spec) {
    ExperimentResult res;
    const RadarEnvironment env = build_radar_environment(spec.config);
    const Realization r = draw_realization(spec.config, spec.seed_base);
    Table t;
    t.columns = {"scheme", "iteration", "objective_bps_hz"};
    for (SchemeId s : spec.schemes) {
        RngStream rng(spec.seed_base, std::string("randomization/") + to_string(s));
        try {
            const BeamformingSolution sol = solve_scheme(r.channels, env, spec.config, s, rng);
            for (std::size_t i = 0; i < sol.iteration_trace.size(); ++i)
                t.rows.push_back({to_string(s), std::to_string(i + 1), format_number(sol.iteration_trace[i])});
        } catch (const InfeasibleError& e) {
            res.exit_code = 3;
            res.message = std::string(to_string(s)) + ": " + e.what() + " (max SCNR " +
                          format_number(to_db(e.max_scnr())) + " dB)";
        }
    }
    res.files["convergence.csv"] = t;
    return res;
}

inline ExperimentResult run_beampatterns(const ExperimentSpec& spec) {
    ExperimentResult res;
    const RadarEnvironment env = build_radar_environment(spec.config);
    const Realization r = draw_realization(spec.config, spec.seed_base);
    const std::vector<double> grid = angle_grid();
    Table t;
    t.columns = {"scheme", "eta_db", "theta_rad", "power_db"};
    auto emit = [&](SchemeId s, double eta, const TransmitCovariance& cov) {
        for (const auto& p : beampattern(env, cov, grid))
            t.rows.push_back({to_string(s), format_number(eta), format_number(p.theta), format_number(p.power_db)});
    };
    for (SchemeId s : spec.schemes) {
        if (!has_sensing_constraint(s)) {
            RngStream rng(spec.seed_base, std::string("randomization/") + to_string(s));
            const BeamformingSolution sol = solve_scheme(r.channels, env, spec.config, s, rng);
            emit(s, NAN, sol.cov);
            continue;
        }
        for (double eta : spec.eta_grid) {
            RngStream rng(spec.seed_base, std::string("randomization/") + to_string(s));
            try {
                const BeamformingSolution sol = solve_scheme(r.channels, env, with_threshold(spec.config, eta), s, rng);
                emit(s, eta, sol.cov);
            } catch (const InfeasibleError&) {
                // no pattern at an unreachable threshold
            }
        }
    }
    res.files["beampattern.csv"] = t;
    return res;
}

inline std::vector<std::vector<TrialRecord>> run_all_trials(const ExperimentSpec& spec) {
    const RadarEnvironment env = build_radar_environment(spec.config);
    return parallel_map(
        spec.trials, [&](int i) { return run_trial(spec, env, i); }, spec.threads);
}

} // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult res;
    switch (spec.command) {
    case Command::Run: res = detail::run_convergence(spec); break;
    case Command::Beampattern: res = detail::run_beampatterns(spec); break;
    case Command::Sweep: {
        const auto per_trial = detail::run_all_trials(spec);
        std::vector<Table> tables;
        std::vector<TrialRecord> all;
        for (const auto& recs : per_trial) {
            tables.push_back(trial_table(recs));
            all.insert(all.end(), recs.begin(), recs.end());
        }
        const Summary s = aggregate(tables);
        res.files["sweep.csv"] = summary_table(s);
        res.files["gains.csv"] = gains_table(s);
        res.files["trials.csv"] = trial_table(all);
        break;
    }
    case Command::MonteCarlo: {
        std::vector<TrialRecord> all;
        for (const auto& recs : detail::run_all_trials(spec)) all.insert(all.end(), recs.begin(), recs.end());
        res.files["trials.csv"] = trial_table(all);
        break;
    }
    }
    res.metadata = metadata_header(spec);
    return res;
}

inline void write_result(const ExperimentResult& res, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, table] : res.files) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) throw std::runtime_error("cannot write " + name);
        write_table(out, res.metadata, table);
    }
}

} // namespace isac
