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

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sample
// sizes are fixed here and are not configurable from the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "support/oracles.hpp"

namespace {

using namespace isac;
using testing::Instance;
using testing::make_instance;

// Criterion 1
constexpr int kConvergenceSeeds = 100;
constexpr double kConvergenceEta = 30.0;
constexpr double kAscentSlack = 1e-6;
constexpr double kConvergedChange = 1e-3;
constexpr int kConvergedWithin = 8;
constexpr double kConvergedFraction = 0.90;
constexpr double kRuntimeBudgetS = 60.0;
// Criteria 2-4, 8
constexpr int kSweepSeeds = 50;
constexpr std::uint64_t kSeedBase = 1;
constexpr double kNullDepthDb = -20.0;
constexpr double kDominanceSlack = 0.01;
constexpr double kStrictDecrease = 1e-5; // relative; above the subproblem solver tolerance
constexpr double kGainLow = 0.10;
constexpr double kGainHigh = 0.35;
constexpr double kKneeDb = 34.0;
// Criteria 5-7
constexpr int kOracleInstances = 100;
constexpr int kCombinersPerInstance = 1000;
constexpr double kTraceQuotientTol = 1e-9;
constexpr double kClosedFormTol = 1e-6;
constexpr int kSurrogatePerturbations = 1000;
constexpr double kSurrogateExactTol = 1e-9;
// A bound counts as violated only beyond floating-point rounding of log2 (~30 ulp);
// near the expansion point the true gap is second order and falls below eps.
constexpr double kBoundRounding = 1e-13;
constexpr double kTinyOracleTol = 1e-4;
constexpr int kZfInstances = 20;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SystemConfig config_at(double eta_db) {
    SystemConfig c = default_config();
    c.scnr_threshold = eta_db;
    return c;
}

// Shared state: solutions emitted anywhere are audited by criterion 8.
struct Emitted {
    BeamformingSolution sol;
    ChannelSet channels;
    SystemConfig cfg;
    std::string where;
};
std::vector<Emitted> g_emitted;

void emit(const BeamformingSolution& s, const ChannelSet& ch, const SystemConfig& cfg, std::string where) {
    g_emitted.push_back({s, ch, cfg, std::move(where)});
}

// ----- 1 ----------------------------------------------------------------------

Outcome criterion_convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    int monotone_fail = 0;
    std::map<SchemeId, int> converged;
    for (int i = 0; i < kConvergenceSeeds; ++i) {
        const Instance in = make_instance(kSeedBase + i, config_at(kConvergenceEta));
        for (SchemeId s : {SchemeId::Proposed, SchemeId::ZeroForcing}) {
            const BeamformingSolution sol = run_sca(in.channels, in.env, in.cfg, s);
            emit(sol, in.channels, in.cfg, "convergence");
            const auto& tr = sol.iteration_trace;
            bool ok = true;
            for (std::size_t j = 1; j < tr.size(); ++j) ok = ok && tr[j] >= tr[j - 1] - kAscentSlack;
            if (!ok) ++monotone_fail;
            bool conv = false;
            for (std::size_t j = 1; j < tr.size() && static_cast<int>(j) < kConvergedWithin; ++j)
                conv = conv || std::abs(tr[j] - tr[j - 1]) < kConvergedChange * std::abs(tr[j - 1]);
            if (conv || (sol.converged && static_cast<int>(tr.size()) <= kConvergedWithin)) ++converged[s];
        }
    }
    const double secs = seconds_since(t0);
    const double fp = double(converged[SchemeId::Proposed]) / kConvergenceSeeds;
    const double fz = double(converged[SchemeId::ZeroForcing]) / kConvergenceSeeds;
    Outcome o;
    o.pass = monotone_fail == 0 && fp >= kConvergedFraction && fz >= kConvergedFraction && secs < kRuntimeBudgetS;
    o.detail = "non-monotone traces " + std::to_string(monotone_fail) + ", converged proposed " + fmt("%.2f", fp) +
               " zero-forcing " + fmt("%.2f", fz) + ", runtime " + fmt("%.1f s", secs);
    return o;
}

// ----- 2 ----------------------------------------------------------------------

struct PatternCheck {
    double peak_theta = 0.0;
    double at_minus = 0.0;
    double at_plus = 0.0;
};

PatternCheck inspect(const std::vector<BeampatternSample>& p) {
    PatternCheck c;
    double best = -1e300;
    std::size_t im = 0, ip = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].power_db > best) {
            best = p[i].power_db;
            c.peak_theta = p[i].theta;
        }
        if (std::abs(p[i].theta + kPi / 6) < std::abs(p[im].theta + kPi / 6)) im = i;
        if (std::abs(p[i].theta - kPi / 6) < std::abs(p[ip].theta - kPi / 6)) ip = i;
    }
    c.at_minus = p[im].power_db;
    c.at_plus = p[ip].power_db;
    return c;
}

double l2_linear(const std::vector<BeampatternSample>& a, const std::vector<BeampatternSample>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::pow(10.0, a[i].power_db / 10.0) - std::pow(10.0, b[i].power_db / 10.0);
        s += d * d;
    }
    return std::sqrt(s);
}

Outcome criterion_beampattern() {
    const std::vector<double> grid = angle_grid();
    const double step = grid[1] - grid[0];
    const std::vector<double> etas = default_eta_grid();
    const Instance in = make_instance(kSeedBase, config_at(etas.front()));
    const BeamformingSolution so = sensing_only_solution(in.env, in.cfg, in.channels);
    emit(so, in.channels, in.cfg, "beampattern");
    const auto ref = beampattern(in.env, so.cov, grid);
    const PatternCheck cs = inspect(ref);
    bool pass = std::abs(cs.peak_theta - in.cfg.target_angle) <= step + 1e-12 && cs.at_minus <= kNullDepthDb &&
                cs.at_plus <= kNullDepthDb;

    std::vector<double> dist;
    std::vector<BeampatternSample> top;
    double top_eta = NAN;
    for (double eta : etas) {
        const SystemConfig cfg = config_at(eta);
        try {
            const BeamformingSolution sol = run_sca(in.channels, in.env, cfg, SchemeId::Proposed);
            emit(sol, in.channels, cfg, "beampattern");
            top = beampattern(in.env, sol.cov, grid);
            top_eta = eta;
            dist.push_back(l2_linear(top, ref));
        } catch (const InfeasibleError&) {
        }
    }
    if (top.empty()) return {false, "no feasible threshold for the proposed scheme"};
    const PatternCheck cp = inspect(top);
    pass = pass && std::abs(cp.peak_theta - in.cfg.target_angle) <= step + 1e-12 && cp.at_minus <= kNullDepthDb &&
           cp.at_plus <= kNullDepthDb;
    bool monotone = true;
    for (std::size_t i = 1; i < dist.size(); ++i) monotone = monotone && dist[i] <= dist[i - 1] * (1.0 + 1e-9);
    pass = pass && monotone;
    Outcome o;
    o.pass = pass;
    o.detail = "sensing-only peak " + fmt("%.4f rad", cs.peak_theta) + " nulls " + fmt("%.1f", cs.at_minus) + "/" +
               fmt("%.1f dB", cs.at_plus) + "; proposed@" + fmt("%.0f dB", top_eta) + " peak " +
               fmt("%.4f rad", cp.peak_theta) + " at +-pi/6 " + fmt("%.1f", cp.at_minus) + "/" +
               fmt("%.1f dB", cp.at_plus) + "; L2 to sensing-only " + fmt("%.4g", dist.front()) + " -> " +
               fmt("%.4g", dist.back()) + (monotone ? " nonincreasing" : " NOT nonincreasing");
    return o;
}

// ----- 3, 4, 8 --------------------------------------------------------------------

Summary g_summary;

void run_sweep() {
    ExperimentSpec spec;
    spec.command = Command::Sweep;
    spec.schemes = {SchemeId::Proposed, SchemeId::ZeroForcing, SchemeId::FixedD2D, SchemeId::CommunicationOnly};
    spec.eta_grid = default_eta_grid();
    spec.trials = kSweepSeeds;
    spec.seed_base = kSeedBase;
    const RadarEnvironment env = build_radar_environment(spec.config);
    std::vector<Table> tables;
    for (int t = 0; t < spec.trials; ++t) {
        std::vector<BeamformingSolution> sols;
        const auto recs = run_trial(spec, env, t, &sols);
        const Realization r = draw_realization(spec.config, spec.seed_base + t);
        for (std::size_t i = 0; i < recs.size(); ++i)
            if (recs[i].feasible) emit(sols[i], r.channels, config_at(recs[i].eta_db), "sweep");
        tables.push_back(trial_table(recs));
    }
    g_summary = aggregate(tables);
}

double mean_of(SchemeId s, double eta) {
    const SummaryRow* r = g_summary.find(s, eta);
    return r && r->mean_rate ? *r->mean_rate : NAN;
}

Outcome criterion_tradeoff() {
    const auto etas = default_eta_grid();
    int order_viol = 0;
    std::string worst;
    for (double eta : etas) {
        const double c = mean_of(SchemeId::CommunicationOnly, eta), p = mean_of(SchemeId::Proposed, eta),
                     z = mean_of(SchemeId::ZeroForcing, eta), f = mean_of(SchemeId::FixedD2D, eta);
        if (!(c >= p * (1 - kDominanceSlack))) ++order_viol;
        if (!(p >= z * (1 - kDominanceSlack))) ++order_viol;
        if (!(z >= f * (1 - kDominanceSlack))) ++order_viol;
    }
    bool comm_const = true;
    for (double eta : etas) comm_const = comm_const && mean_of(SchemeId::CommunicationOnly, eta) ==
                                                           mean_of(SchemeId::CommunicationOnly, etas.front());
    // fixed-D2D must fall from the last threshold at or below the knee onward
    bool decreasing = true;
    int pairs = 0;
    std::string drops;
    for (std::size_t i = 1; i < etas.size(); ++i) {
        if (etas[i] <= kKneeDb) continue;
        const double a = mean_of(SchemeId::FixedD2D, etas[i - 1]);
        const double b = mean_of(SchemeId::FixedD2D, etas[i]);
        ++pairs;
        const double rel = (a - b) / a;
        drops += (drops.empty() ? "" : ",") + fmt("%.2e", rel);
        decreasing = decreasing && rel > kStrictDecrease;
    }
    Outcome o;
    o.pass = order_viol == 0 && comm_const && decreasing && pairs > 0;
    o.detail = "ordering violations " + std::to_string(order_viol) + "/" + std::to_string(3 * etas.size()) +
               ", communication-only constant " + (comm_const ? "yes" : "no") + ", fixed-d2d relative drops above " +
               fmt("%.0f dB", kKneeDb) + " [" + drops + "]; means@" + fmt("%.0f dB", etas.back()) + " comm " +
               fmt("%.4f", mean_of(SchemeId::CommunicationOnly, etas.back())) + " prop " +
               fmt("%.4f", mean_of(SchemeId::Proposed, etas.back())) + " zf " +
               fmt("%.4f", mean_of(SchemeId::ZeroForcing, etas.back())) + " fixed " +
               fmt("%.4f", mean_of(SchemeId::FixedD2D, etas.back()));
    return o;
}

Outcome criterion_gain() {
    const double top = default_eta_grid().back();
    const double g = mean_of(SchemeId::Proposed, top) / mean_of(SchemeId::FixedD2D, top) - 1.0;
    return {g >= kGainLow && g <= kGainHigh,
            "proposed vs fixed-d2d gain at " + fmt("%.0f dB", top) + " = " + fmt("%.2f%%", 100 * g) + " (band " +
                fmt("%.0f", 100 * kGainLow) + "-" + fmt("%.0f%%", 100 * kGainHigh) + ")"};
}

Outcome criterion_audit() {
    int failures = 0;
    std::string first;
    for (const auto& e : g_emitted) {
        const auto bad = testing::audit_solution(e.sol, e.channels, e.cfg);
        if (!bad.empty()) {
            ++failures;
            if (first.empty()) first = e.where + "/" + to_string(e.sol.scheme) + ": " + bad.front();
        }
    }
    return {failures == 0 && !g_emitted.empty(), std::to_string(g_emitted.size()) + " solutions audited, " +
                                                     std::to_string(failures) + " failures" +
                                                     (first.empty() ? "" : " (first: " + first + ")")};
}

// ----- 5 ----------------------------------------------------------------------

Outcome criterion_mvdr() {
    const SystemConfig cfg = default_config();
    const RadarEnvironment env = build_radar_environment(cfg);
    RngStream rng(kSeedBase, "acceptance/mvdr");
    double worst_rel = 0.0;
    int dominated = 0;
    for (int i = 0; i < kOracleInstances; ++i) {
        const TransmitCovariance cov =
            testing::random_covariance(cfg.n_tx, cfg.n_cue, rng.uniform(1.0, cfg.bs_power_budget), rng, 1 + i % 8);
        const CVector t = mvdr_weights(env, cov).weights;
        const double q = testing::scnr_quotient(env, cov.total(), t);
        worst_rel = std::max(worst_rel, std::abs(scnr(env, cov) / q - 1.0));
        for (int j = 0; j < kCombinersPerInstance; ++j)
            if (testing::scnr_quotient(env, cov.total(), testing::random_vector(cfg.n_rx, rng)) > q * (1 + 1e-12))
                ++dominated;
    }
    SystemConfig clean = cfg;
    clean.n_clutter = 0;
    clean.clutter_angles.clear();
    clean.clutter_gain_over_noise.clear();
    const Instance in = make_instance(kSeedBase, clean);
    const BeamformingSolution so = sensing_only_solution(in.env, clean, in.channels);
    const double closed = testing::clutter_free_scnr(clean);
    const double rel = std::abs(from_decibels(so.achieved_scnr) / closed - 1.0);
    Outcome o;
    o.pass = worst_rel <= kTraceQuotientTol && dominated == 0 && rel <= kClosedFormTol;
    o.detail = "trace vs quotient worst rel " + fmt("%.2e", worst_rel) + ", combiners beating MVDR " +
               std::to_string(dominated) + ", clutter-free sensing-only " + fmt("%.4f dB", so.achieved_scnr) +
               " vs closed form " + fmt("%.4f dB", to_db(closed)) + " (rel " + fmt("%.1e", rel) + ")";
    return o;
}

// ----- 6 ----------------------------------------------------------------------

Outcome criterion_surrogate() {
    RngStream rng(kSeedBase, "acceptance/surrogate");
    double worst_exact = 0.0;
    int violations = 0, checked = 0;
    const int points = 10;
    for (int e = 0; e < points; ++e) {
        const Instance in = make_instance(kSeedBase + e);
        const SystemConfig& cfg = in.cfg;
        const TransmitCovariance cov0 =
            testing::random_covariance(cfg.n_tx, cfg.n_cue, rng.uniform(1.0, cfg.bs_power_budget), rng);
        const PowerAllocation pa0 = testing::random_powers(cfg.n_d2d, cfg.d2d_power_budget, rng);
        const SurrogateModel m = build_surrogate(in.channels, sensing_constraint_coeff(in.env, cov0),
                                                 ExpansionPoint{cov0, pa0}, cfg);
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        for (int k = 0; k < cfg.n_cue; ++k)
            worst_exact = std::max(worst_exact, rel(m.phi_cue(k, cov0, pa0), std::log2(m.cue_interf(k, cov0, pa0))));
        for (int d = 0; d < cfg.n_d2d; ++d)
            worst_exact = std::max(worst_exact, rel(m.phi_d2d(d, cov0, pa0), std::log2(m.d2d_interf(d, cov0, pa0))));
        worst_exact = std::max(worst_exact, rel(m.surrogate_objective(cov0, pa0), m.true_objective(cov0, pa0)));

        for (int j = 0; j < kSurrogatePerturbations; ++j) {
            // half local moves around the expansion point, half anywhere feasible
            const TransmitCovariance far =
                testing::random_covariance(cfg.n_tx, cfg.n_cue, rng.uniform(0.0, cfg.bs_power_budget), rng, 1 + j % 4);
            const PowerAllocation pfar = testing::random_powers(cfg.n_d2d, cfg.d2d_power_budget, rng);
            const double lam = j % 2 ? 1.0 : std::pow(10.0, rng.uniform(-6.0, -1.0));
            TransmitCovariance cov = cov0.scaled(1.0 - lam);
            for (int b = 0; b < cov.n_blocks(); ++b) cov.block(b) += lam * far.block(b);
            PowerAllocation pa = pa0;
            for (int d = 0; d < cfg.n_d2d; ++d) pa.d2d_powers[d] = (1 - lam) * pa0.d2d_powers[d] + lam * pfar.d2d_powers[d];
            for (int k = 0; k < cfg.n_cue; ++k, ++checked)
                {
                const double lg = std::log2(m.cue_interf(k, cov, pa));
                if (m.phi_cue(k, cov, pa) < lg - kBoundRounding * std::max(1.0, std::abs(lg))) ++violations;
            }
            for (int d = 0; d < cfg.n_d2d; ++d, ++checked)
                {
                const double lg = std::log2(m.d2d_interf(d, cov, pa));
                if (m.phi_d2d(d, cov, pa) < lg - kBoundRounding * std::max(1.0, std::abs(lg))) ++violations;
            }
        }
    }
    Outcome o;
    o.pass = worst_exact <= kSurrogateExactTol && violations == 0;
    o.detail = "worst relative error at expansion " + fmt("%.2e", worst_exact) + ", upper-bound violations " +
               std::to_string(violations) + "/" + std::to_string(checked) + " over " + std::to_string(points) +
               " expansion points x " + std::to_string(kSurrogatePerturbations) + " perturbations";
    return o;
}

// ----- 7 ----------------------------------------------------------------------

SystemConfig scalar_config(int n_d2d) {
    SystemConfig cfg = default_config();
    cfg.n_tx = 1;
    cfg.n_rx = 1;
    cfg.n_cue = 1;
    cfg.n_d2d = n_d2d;
    cfg.n_clutter = 0;
    cfg.clutter_angles.clear();
    cfg.clutter_gain_over_noise.clear();
    return cfg;
}

Outcome criterion_tiny() {
    RngStream rng(kSeedBase, "acceptance/tiny");
    double worst_scalar = 0.0, worst_grid = 0.0, worst_zf = 0.0;
    // scalar: max log2(|h|^2 W + N) with W <= P, no sensing constraint
    for (int i = 0; i < 5; ++i) {
        const SystemConfig cfg = scalar_config(0);
        const Instance in = make_instance(kSeedBase + i, cfg);
        TransmitCovariance cov = TransmitCovariance::zeros(1, 1);
        cov.per_cue[0](0, 0) = rng.uniform(1.0, 500.0);
        cov.radar(0, 0) = rng.uniform(0.0, 400.0);
        const SurrogateModel m = build_surrogate(in.channels, sensing_constraint_coeff(in.env, cov),
                                                 ExpansionPoint{cov, PowerAllocation{}}, cfg, std::nullopt,
                                                 SurrogateOptions{false, std::nullopt});
        const SubproblemSolution s = solve_surrogate(m, cfg);
        TransmitCovariance best = TransmitCovariance::zeros(1, 1);
        best.per_cue[0](0, 0) = cfg.bs_power_budget;
        const double closed = m.surrogate_objective(best, PowerAllocation{});
        worst_scalar = std::max(worst_scalar, std::abs(s.objective / closed - 1.0));
    }
    // one dimension: only the D2D power matters (h = 0, f = 0)
    for (int i = 0; i < 5; ++i) {
        const SystemConfig cfg = scalar_config(1);
        ChannelSet ch;
        ch.bs_to_cue = {CVector::Zero(1)};
        ch.bs_to_d2drx = {CVector::Zero(1)};
        ch.d2d_to_cue = CMatrix::Constant(1, 1, rng.complex_normal() * std::pow(10.0, rng.uniform(-5.0, -2.0)));
        ch.d2d_to_d2d = CMatrix::Constant(1, 1, rng.complex_normal() * std::pow(10.0, rng.uniform(-5.0, -2.0)));
        const RadarEnvironment env = build_radar_environment(cfg);
        TransmitCovariance cov = TransmitCovariance::zeros(1, 1);
        cov.per_cue[0](0, 0) = 10.0;
        const PowerAllocation pa{{rng.uniform(0.0, cfg.d2d_power_budget)}};
        const SurrogateModel m = build_surrogate(ch, sensing_constraint_coeff(env, cov), ExpansionPoint{cov, pa}, cfg,
                                                 std::nullopt, SurrogateOptions{false, std::nullopt});
        const SubproblemSolution s = solve_surrogate(m, cfg);
        double best = -1e300;
        for (int g = 0; g <= 10000; ++g)
            best = std::max(best, m.surrogate_objective(cov, PowerAllocation{{cfg.d2d_power_budget * g / 10000.0}}));
        worst_grid = std::max(worst_grid, std::abs(s.objective - best) / std::max(std::abs(best), 1.0));
    }
    int zf_infeasible = 0;
    for (int i = 0; i < kZfInstances; ++i) {
        const testing::ZfComparison c = testing::zf_equality_vs_parameterization(make_instance(kSeedBase + i));
        if (!c.equality_feasible) {
            ++zf_infeasible;
            continue;
        }
        worst_zf = std::max(worst_zf, std::abs(c.parameterized / c.equality - 1.0));
    }
    Outcome o;
    o.pass = worst_scalar <= kTinyOracleTol && worst_grid <= kTinyOracleTol && worst_zf <= kTinyOracleTol &&
             zf_infeasible == 0;
    o.detail = "scalar closed form rel " + fmt("%.2e", worst_scalar) + ", 1-D grid rel " + fmt("%.2e", worst_grid) +
               ", ZF parameterization vs equality rel " + fmt("%.2e", worst_zf) + " on " +
               std::to_string(kZfInstances - zf_infeasible) + "/" + std::to_string(kZfInstances) + " instances";
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 SCA ascent and convergence", criterion_convergence},
        {"2 beampattern structure", criterion_beampattern},
        {"3 trade-off ordering", [] {
             run_sweep();
             return criterion_tradeoff();
         }},
        {"4 headline gain", criterion_gain},
        {"5 MVDR/SCNR oracles", criterion_mvdr},
        {"6 surrogate bounds", criterion_surrogate},
        {"7 tiny-instance solver oracles", criterion_tiny},
        {"8 feasibility audit", criterion_audit},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
