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

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isac/channel.hpp"
#include "isac/errors.hpp"
#include "isac/linalg.hpp"
#include "isac/rates.hpp"
#include "isac/scenario.hpp"
#include "isac/sensing.hpp"
#include "isac/subproblem.hpp"

namespace isac {

enum class SchemeId { Proposed, ZeroForcing, FixedD2D, CommunicationOnly, SensingOnly };

inline constexpr SchemeId kAllSchemes[] = {SchemeId::Proposed, SchemeId::ZeroForcing, SchemeId::FixedD2D,
                                           SchemeId::CommunicationOnly, SchemeId::SensingOnly};

inline const char* to_string(SchemeId s) {
    switch (s) {
    case SchemeId::Proposed: return "proposed";
    case SchemeId::ZeroForcing: return "zero-forcing";
    case SchemeId::FixedD2D: return "fixed-d2d";
    case SchemeId::CommunicationOnly: return "communication-only";
    case SchemeId::SensingOnly: return "sensing-only";
    }
    return "?";
}

inline SchemeId parse_scheme(std::string_view name) {
    for (SchemeId s : kAllSchemes)
        if (name == to_string(s)) return s;
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

/// Whether the scheme carries the SCNR constraint.
inline bool has_sensing_constraint(SchemeId s) {
    return s == SchemeId::Proposed || s == SchemeId::ZeroForcing || s == SchemeId::FixedD2D;
}

struct BeamformingSolution {
    SchemeId scheme = SchemeId::Proposed;
    TransmitCovariance cov;
    PowerAllocation powers;
    std::vector<CVector> extracted_beamformers;
    std::vector<bool> rank_flags;
    bool randomized = false;
    double relaxed_sum_rate = 0.0;
    double extracted_sum_rate = 0.0;
    double achieved_scnr = 0.0; // dB, M built from the solution's own covariance
    std::vector<double> iteration_trace;
    bool converged = false;
    int iterations_used = 0;
    /// Q of the subproblem that produced `cov` (empty for schemes without one).
    CMatrix last_q;
    std::optional<CMatrix> zf_basis;
    std::string note;

    TransmitCovariance extracted_cov() const {
        TransmitCovariance c = cov;
        for (std::size_t k = 0; k < extracted_beamformers.size(); ++k)
            c.per_cue[k] = extracted_beamformers[k] * extracted_beamformers[k].adjoint();
        return c;
    }
};

struct OptimizerSettings {
    SolverSettings solver;
    int randomization_samples = 200;
    double rank_one_ratio = 1e-3; // lambda_2 / lambda_1 at or below which a block counts as rank one
};

// ----- Rank-one recovery ------------------------------------------------------

/// Leading-eigenpair beamformer sqrt(lambda_1) u_1 per CUE block, and whether
/// the block is numerically rank one.
inline std::pair<std::vector<CVector>, std::vector<bool>> extract_beamformers(const TransmitCovariance& cov,
                                                                               double ratio = 1e-3) {
    std::vector<CVector> ws;
    std::vector<bool> flags;
    for (const auto& w : cov.per_cue) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(w));
        const int n = static_cast<int>(w.rows());
        const double l1 = std::max(es.eigenvalues()(n - 1), 0.0);
        const double l2 = n > 1 ? std::max(es.eigenvalues()(n - 2), 0.0) : 0.0;
        ws.push_back(std::sqrt(l1) * es.eigenvectors().col(n - 1));
        flags.push_back(l1 <= 0.0 || l2 <= ratio * l1);
    }
    return {ws, flags};
}

namespace detail {

/// Draw w_k ~ CN(0, W_k) for every block, rescale into the power budget.
inline std::vector<CVector> gaussian_candidate(const TransmitCovariance& cov, double budget, RngStream& rng) {
    std::vector<CVector> ws;
    double power = 0.0;
    for (const auto& w : cov.per_cue) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(w));
        const int n = static_cast<int>(w.rows());
        CVector z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.complex_normal();
        const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        ws.push_back(es.eigenvectors() * (root.cast<cplx>().asDiagonal() * z));
        power += ws.back().squaredNorm();
    }
    const double room = budget - cov.radar.trace().real();
    if (power > room && power > 0.0) {
        const double s = std::sqrt(std::max(room, 0.0) / power);
        for (auto& w : ws) w *= s;
    }
    return ws;
}

} // namespace detail

/// Fill the extraction fields of `sol`: eigen extraction, plus Gaussian
/// randomization when some block is not rank one. The best candidate by sum
/// rate among those meeting the power budget (and the SCNR threshold when the
/// scheme has one) is kept.
inline void recover_beamformers(BeamformingSolution& sol, const ChannelSet& ch, const RadarEnvironment& env,
                                const SystemConfig& cfg, RngStream& rng, const OptimizerSettings& settings = {}) {
    auto [ws, flags] = extract_beamformers(sol.cov, settings.rank_one_ratio);
    sol.rank_flags = flags;
    const bool need_sensing = has_sensing_constraint(sol.scheme);
    const double eta = cfg.scnr_threshold_linear();

    auto evaluate = [&](const std::vector<CVector>& cand, double& rate) {
        TransmitCovariance c = sol.cov;
        double power = c.radar.trace().real();
        for (std::size_t k = 0; k < cand.size(); ++k) {
            c.per_cue[k] = cand[k] * cand[k].adjoint();
            power += cand[k].squaredNorm();
        }
        rate = sum_rate(ch, c, sol.powers, cfg.comm_noise).sum_rate;
        if (power > cfg.bs_power_budget * (1.0 + 1e-9)) return false;
        return !need_sensing || scnr(env, c) >= eta * (1.0 - 1e-9);
    };

    double best_rate = 0.0;
    const bool eigen_ok = evaluate(ws, best_rate);
    std::vector<CVector> best = ws;
    bool have_feasible = eigen_ok;
    sol.randomized = false;

    bool all_rank_one = true;
    for (bool f : flags) all_rank_one = all_rank_one && f;
    if (!all_rank_one) {
        sol.randomized = true;
        for (int s = 0; s < settings.randomization_samples; ++s) {
            auto cand = detail::gaussian_candidate(sol.cov, cfg.bs_power_budget, rng);
            double rate = 0.0;
            const bool ok = evaluate(cand, rate);
            if (ok && (!have_feasible || rate > best_rate)) {
                best = std::move(cand);
                best_rate = rate;
                have_feasible = true;
            }
        }
    }
    sol.extracted_beamformers = best;
    sol.extracted_sum_rate = best_rate;
}

// ----- Initialization -----------------------------------------------------------

namespace detail {

/// Leading eigenvector of Q within the subspace spanned by `basis`.
inline CVector sensing_direction(const CMatrix& q, const std::optional<CMatrix>& basis) {
    if (!basis) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(q));
        return es.eigenvectors().col(q.rows() - 1);
    }
    const CMatrix qt = basis->adjoint() * q * *basis;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(qt));
    return *basis * es.eigenvectors().col(qt.rows() - 1);
}

inline double sensing_only_scnr_bound(const RadarEnvironment& env, const SystemConfig& cfg,
                                      const std::optional<CMatrix>& basis);

} // namespace detail

/// Matched-direction start at full power: half the budget split over the CUE
/// directions, half spread isotropically on the radar block, D2D at half
/// budget. If that misses the SCNR threshold, the radar block moves onto the
/// sensing direction with 0.5, 0.6, ..., 1.0 of the budget.
inline ExpansionPoint initialize(const ChannelSet& ch, const RadarEnvironment& env, const SystemConfig& cfg,
                                 SchemeId scheme = SchemeId::Proposed,
                                 const std::optional<CMatrix>& zf_basis = std::nullopt) {
    const int nt = cfg.n_tx;
    const int K = cfg.n_cue;
    const double p = cfg.bs_power_budget;
    auto project = [&](const CVector& v) { return zf_basis ? CVector(*zf_basis * (zf_basis->adjoint() * v)) : v; };

    std::vector<CVector> dirs;
    for (int k = 0; k < K; ++k) {
        CVector h = project(ch.bs_to_cue[k]);
        dirs.push_back(h.norm() > 0.0 ? CVector(h.normalized()) : CVector(CVector::Zero(nt)));
    }
    auto with_radar = [&](const CMatrix& radar, double cue_share) {
        TransmitCovariance cov = TransmitCovariance::zeros(nt, K);
        cov.radar = radar;
        for (int k = 0; k < K; ++k) cov.per_cue[k] = (cue_share / K) * dirs[k] * dirs[k].adjoint();
        return cov;
    };

    ExpansionPoint e;
    const CMatrix iso = zf_basis ? CMatrix(*zf_basis * zf_basis->adjoint() / static_cast<double>(zf_basis->cols()))
                                 : CMatrix(CMatrix::Identity(nt, nt) / static_cast<double>(nt));
    e.cov_prev = with_radar(0.5 * p * iso, 0.5 * p);
    const double p_d = scheme == SchemeId::FixedD2D ? cfg.fixed_d2d_power_fraction * cfg.d2d_power_budget
                                                    : 0.5 * cfg.d2d_power_budget;
    e.powers_prev = PowerAllocation::uniform(cfg.n_d2d, p_d);

    if (!has_sensing_constraint(scheme)) return e;
    const double eta = cfg.scnr_threshold_linear();
    if (scnr(env, e.cov_prev) >= eta) return e;

    for (int step = 5; step <= 10; ++step) {
        const double frac = step / 10.0;
        TransmitCovariance trial = e.cov_prev;
        for (int it = 0; it < 2; ++it) { // direction of Q frozen at the trial itself
            const CVector u = detail::sensing_direction(sensing_constraint_coeff(env, trial).q_matrix, zf_basis);
            trial = with_radar(frac * p * u * u.adjoint(), (1.0 - frac) * p);
        }
        if (scnr(env, trial) >= eta) {
            e.cov_prev = trial;
            return e;
        }
    }
    throw InfeasibleError("initialize: SCNR threshold unreachable at full power",
                          detail::sensing_only_scnr_bound(env, cfg, zf_basis));
}

// ----- Sensing-only ------------------------------------------------------------------

/// Radar-optimal covariance: all power on the leading eigenvector of Q, with
/// M re-frozen at each iterate. D2D pairs stay silent.
inline BeamformingSolution sensing_only_solution(const RadarEnvironment& env, const SystemConfig& cfg,
                                                 const ChannelSet& ch,
                                                 const std::optional<CMatrix>& basis = std::nullopt) {
    BeamformingSolution sol;
    sol.scheme = SchemeId::SensingOnly;
    const int nt = cfg.n_tx;
    sol.cov = TransmitCovariance::zeros(nt, cfg.n_cue);
    sol.cov.radar = basis ? CMatrix(cfg.bs_power_budget * *basis * basis->adjoint() / double(basis->cols()))
                          : CMatrix(cfg.bs_power_budget * CMatrix::Identity(nt, nt) / double(nt));
    sol.powers = PowerAllocation::uniform(cfg.n_d2d, 0.0);
    double prev = scnr(env, sol.cov);
    for (int i = 1; i <= cfg.max_iterations; ++i) {
        const SensingConstraintCoeff q = sensing_constraint_coeff(env, sol.cov);
        const CVector u = detail::sensing_direction(q.q_matrix, basis);
        sol.cov.radar = cfg.bs_power_budget * u * u.adjoint();
        sol.last_q = q.q_matrix;
        const double cur = scnr(env, sol.cov);
        sol.iteration_trace.push_back(sum_rate(ch, sol.cov, sol.powers, cfg.comm_noise).sum_rate);
        sol.iterations_used = i;
        if (std::abs(cur - prev) <= cfg.convergence_tol * std::abs(prev)) {
            sol.converged = true;
            break;
        }
        prev = cur;
    }
    sol.achieved_scnr = to_db(scnr(env, sol.cov));
    sol.relaxed_sum_rate = sum_rate(ch, sol.cov, sol.powers, cfg.comm_noise).sum_rate;
    sol.rank_flags.assign(cfg.n_cue, true);
    sol.extracted_beamformers.assign(cfg.n_cue, CVector::Zero(nt));
    sol.extracted_sum_rate = sol.relaxed_sum_rate;
    return sol;
}

namespace detail {

inline double sensing_only_scnr_bound(const RadarEnvironment& env, const SystemConfig& cfg,
                                      const std::optional<CMatrix>& basis) {
    ChannelSet empty;
    empty.bs_to_cue.assign(cfg.n_cue, CVector::Zero(cfg.n_tx));
    empty.d2d_to_cue = CMatrix::Zero(cfg.n_d2d, cfg.n_cue);
    empty.d2d_to_d2d = CMatrix::Zero(cfg.n_d2d, cfg.n_d2d);
    empty.bs_to_d2drx.assign(cfg.n_d2d, CVector::Zero(cfg.n_tx));
    for (int d = 0; d < cfg.n_d2d; ++d) empty.d2d_to_d2d(d, d) = 1.0;
    const BeamformingSolution s = sensing_only_solution(env, cfg, empty, basis);
    return from_decibels(s.achieved_scnr);
}

} // namespace detail

// ----- SCA outer loop ---------------------------------------------------------------

/// Successive convex approximation for the proposed, zero-forcing, fixed-D2D
/// and communication-only schemes. Each iteration refreezes M at the previous
/// covariance, rebuilds the tangent-plane surrogate there and solves it.
/// Stops on relative change of the sum rate below cfg.convergence_tol or after
/// cfg.max_iterations.
inline BeamformingSolution run_sca(const ChannelSet& ch, const RadarEnvironment& env, const SystemConfig& cfg,
                                   SchemeId scheme, const OptimizerSettings& settings = {}) {
    if (scheme == SchemeId::SensingOnly) throw PreconditionError("run_sca: sensing-only has its own solver");
    BeamformingSolution sol;
    sol.scheme = scheme;
    if (scheme == SchemeId::ZeroForcing) sol.zf_basis = zf_nullspace_basis(ch, cfg);

    ExpansionPoint exp = initialize(ch, env, cfg, scheme, sol.zf_basis);
    SurrogateOptions opts;
    opts.sensing_active = has_sensing_constraint(scheme);
    if (scheme == SchemeId::FixedD2D) opts.fixed_powers = exp.powers_prev.d2d_powers;

    double prev = sum_rate(ch, exp.cov_prev, exp.powers_prev, cfg.comm_noise).sum_rate;
    for (int i = 1; i <= cfg.max_iterations; ++i) {
        const SensingConstraintCoeff q = sensing_constraint_coeff(env, exp.cov_prev);
        const SurrogateModel model = build_surrogate(ch, q, exp, cfg, sol.zf_basis, opts);
        const SubproblemSolution sub = solve_surrogate(model, cfg, settings.solver);
        if (sub.status == SubproblemStatus::Infeasible) {
            if (i == 1)
                throw InfeasibleError("run_sca: first subproblem infeasible",
                                      detail::sensing_only_scnr_bound(env, cfg, sol.zf_basis));
            sol.note = "subproblem infeasible at iteration " + std::to_string(i) + "; kept previous iterate";
            sol.converged = false;
            break;
        }
        if (sub.status == SubproblemStatus::MaxIter)
            sol.note = "subproblem hit the Newton step limit at iteration " + std::to_string(i);
        exp = {sub.cov, sub.powers};
        sol.last_q = q.q_matrix;
        const double cur = sum_rate(ch, exp.cov_prev, exp.powers_prev, cfg.comm_noise).sum_rate;
        sol.iteration_trace.push_back(cur);
        sol.iterations_used = i;
        if (std::abs(cur - prev) < cfg.convergence_tol * std::max(std::abs(prev), 1e-12)) {
            sol.converged = true;
            break;
        }
        prev = cur;
    }
    sol.cov = exp.cov_prev;
    sol.powers = exp.powers_prev;
    sol.relaxed_sum_rate = sum_rate(ch, sol.cov, sol.powers, cfg.comm_noise).sum_rate;
    sol.achieved_scnr = to_db(scnr(env, sol.cov));
    return sol;
}

/// Run any scheme and attach the rank-one recovery.
inline BeamformingSolution solve_scheme(const ChannelSet& ch, const RadarEnvironment& env, const SystemConfig& cfg,
                                        SchemeId scheme, RngStream& rng, const OptimizerSettings& settings = {}) {
    if (scheme == SchemeId::SensingOnly) return sensing_only_solution(env, cfg, ch);
    BeamformingSolution sol = run_sca(ch, env, cfg, scheme, settings);
    recover_beamformers(sol, ch, env, cfg, rng, settings);
    return sol;
}

} // namespace isac
