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

// Convex surrogate of the relaxed sum-rate problem around an expansion point.
//
// With the covariance blocks W_0 (radar) and W_1..W_K (CUEs) relaxed to PSD
// matrices, the sum rate is a difference of concave functions:
//
//   sum_k [log2 S_k - log2 I_k] + sum_d [log2 T_d - log2 J_d]
//
// S_k / I_k are CUE k's received power with / without its own block, T_d / J_d
// D2D receiver d's received power with / without its own link (all including
// noise). Replacing log2 I_k and log2 J_d by their tangent planes at the
// expansion point gives a concave minorant that is tight there.

#include <cmath>
#include <iosfwd>
#include <optional>
#include <ostream>
#include <vector>

#include "isac/channel.hpp"
#include "isac/conic.hpp"
#include "isac/errors.hpp"
#include "isac/linalg.hpp"
#include "isac/rates.hpp"
#include "isac/scenario.hpp"
#include "isac/sensing.hpp"

namespace isac {

struct ExpansionPoint {
    TransmitCovariance cov_prev;
    PowerAllocation powers_prev;
};

struct SurrogateOptions {
    bool sensing_active = true;
    /// When set, D2D powers are constants rather than decision variables.
    std::optional<std::vector<double>> fixed_powers;
};

enum class SubproblemStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(SubproblemStatus s) {
    switch (s) {
    case SubproblemStatus::Optimal: return "optimal";
    case SubproblemStatus::MaxIter: return "max-iter";
    case SubproblemStatus::Infeasible: return "infeasible";
    }
    return "?";
}

struct SurrogateModel {
    ChannelSet channels;
    CMatrix q_matrix;
    double eta_linear = 0.0;
    double bs_budget = 0.0;
    double d2d_budget = 0.0;
    double comm_noise = 0.0;
    bool sensing_active = true;
    std::optional<std::vector<double>> fixed_powers;
    std::optional<CMatrix> zf_basis;
    ExpansionPoint expansion;
    std::vector<double> beta;  // 1 / I_k at the expansion point
    std::vector<double> delta; // 1 / J_d at the expansion point

    int n_cue() const { return channels.n_cue(); }
    int n_d2d() const { return channels.n_d2d(); }
    int n_tx() const { return static_cast<int>(q_matrix.rows()); }

    /// S_k: everything CUE k receives, noise included.
    double cue_total(int k, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        return cue_interference(k, channels, cov, pa, comm_noise) +
               clamp_nonnegative(quad_form(channels.bs_to_cue[k], cov.per_cue[k]));
    }
    /// I_k
    double cue_interf(int k, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        return cue_interference(k, channels, cov, pa, comm_noise);
    }
    /// T_d
    double d2d_total(int d, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        return d2d_interference(d, channels, cov, pa, comm_noise) +
               pa.d2d_powers[d] * std::norm(channels.d2d_to_d2d(d, d));
    }
    /// J_d
    double d2d_interf(int d, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        return d2d_interference(d, channels, cov, pa, comm_noise);
    }

    /// Tangent-plane upper bound of log2 I_k at the expansion point.
    double phi_cue(int k, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        const double i0 = 1.0 / beta[k];
        return std::log2(i0) + beta[k] * (cue_interf(k, cov, pa) - i0) / kLn2;
    }
    /// Tangent-plane upper bound of log2 J_d at the expansion point.
    double phi_d2d(int d, const TransmitCovariance& cov, const PowerAllocation& pa) const {
        const double j0 = 1.0 / delta[d];
        return std::log2(j0) + delta[d] * (d2d_interf(d, cov, pa) - j0) / kLn2;
    }

    double surrogate_objective(const TransmitCovariance& cov, const PowerAllocation& pa) const {
        double f = 0.0;
        for (int k = 0; k < n_cue(); ++k) f += std::log2(cue_total(k, cov, pa)) - phi_cue(k, cov, pa);
        for (int d = 0; d < n_d2d(); ++d) f += std::log2(d2d_total(d, cov, pa)) - phi_d2d(d, cov, pa);
        return f;
    }

    /// The relaxed sum rate in its four-logarithm form.
    double true_objective(const TransmitCovariance& cov, const PowerAllocation& pa) const {
        double f = 0.0;
        for (int k = 0; k < n_cue(); ++k)
            f += std::log2(cue_total(k, cov, pa)) - std::log2(cue_interf(k, cov, pa));
        for (int d = 0; d < n_d2d(); ++d)
            f += std::log2(d2d_total(d, cov, pa)) - std::log2(d2d_interf(d, cov, pa));
        return f;
    }

    /// Linearized sensing value tr(Q W).
    double sensing_value(const TransmitCovariance& cov) const { return trace_product(q_matrix, cov.total()); }

    /// Upper bound of tr(Q W) over tr(W) <= budget within the allowed subspace.
    double max_sensing_value() const {
        const CMatrix q = zf_basis ? CMatrix(zf_basis->adjoint() * q_matrix * *zf_basis) : q_matrix;
        return bs_budget * std::max(max_eigenvalue(q), 0.0);
    }
};

namespace detail {

inline void check_expansion(const ExpansionPoint& e, const SystemConfig& cfg, const ChannelSet& ch) {
    const double slack = 1e-6;
    if (e.cov_prev.n_cue() != ch.n_cue() || e.powers_prev.size() != ch.n_d2d())
        throw DimensionError("build_surrogate: expansion point dimensions do not match the channels");
    if (e.cov_prev.power() > cfg.bs_power_budget * (1.0 + slack))
        throw PreconditionError("build_surrogate: expansion point exceeds the BS power budget");
    for (double p : e.powers_prev.d2d_powers)
        if (p < -slack * cfg.d2d_power_budget || p > cfg.d2d_power_budget * (1.0 + slack))
            throw PreconditionError("build_surrogate: expansion point violates the D2D power box");
}

} // namespace detail

inline SurrogateModel build_surrogate(const ChannelSet& ch, const SensingConstraintCoeff& q, const ExpansionPoint& exp,
                                      const SystemConfig& cfg, const std::optional<CMatrix>& zf_basis = std::nullopt,
                                      const SurrogateOptions& opts = {}) {
    detail::check_expansion(exp, cfg, ch);
    SurrogateModel m;
    m.channels = ch;
    m.q_matrix = hermitian_part(q.q_matrix);
    m.eta_linear = cfg.scnr_threshold_linear();
    m.bs_budget = cfg.bs_power_budget;
    m.d2d_budget = cfg.d2d_power_budget;
    m.comm_noise = cfg.comm_noise;
    m.sensing_active = opts.sensing_active;
    m.fixed_powers = opts.fixed_powers;
    if (m.fixed_powers && static_cast<int>(m.fixed_powers->size()) != ch.n_d2d())
        throw DimensionError("build_surrogate: fixed power vector has the wrong length");
    m.zf_basis = zf_basis;
    m.expansion = exp;
    for (int k = 0; k < ch.n_cue(); ++k) m.beta.push_back(1.0 / m.cue_interf(k, exp.cov_prev, exp.powers_prev));
    for (int d = 0; d < ch.n_d2d(); ++d) m.delta.push_back(1.0 / m.d2d_interf(d, exp.cov_prev, exp.powers_prev));
    return m;
}

/// Orthonormal basis of the subspace orthogonal to every BS -> D2D receiver channel.
inline CMatrix zf_nullspace_basis(const ChannelSet& ch, const SystemConfig& cfg) {
    const int nt = cfg.n_tx;
    const int nd = cfg.n_d2d;
    if (nt <= nd) throw DimensionError("zf_nullspace_basis: need more transmit antennas than D2D pairs");
    if (nd == 0) return CMatrix::Identity(nt, nt);
    CMatrix f(nt, nd);
    for (int d = 0; d < nd; ++d) f.col(d) = ch.bs_to_d2drx.at(d);
    Eigen::JacobiSVD<CMatrix> svd(f, Eigen::ComputeFullU);
    const RVector& sv = svd.singularValues();
    if (!(sv(nd - 1) >= 1e-8 * sv(0))) throw NumericError("zf_nullspace_basis: BS -> D2D channels nearly dependent");
    return svd.matrixU().rightCols(nt - nd);
}

// ----- Lowering to the conic solver ----------------------------------------

/// Orthonormal basis of the smallest subspace the surrogate can see: every
/// channel vector and the range of Q, restricted to the ZF null space if any.
/// Confining the blocks to it loses nothing, since tr(A P W P) = tr(A W) for
/// each data matrix A and tr(P W P) <= tr(W).
inline CMatrix surrogate_subspace(const SurrogateModel& m) {
    const int nt = m.n_tx();
    std::vector<CVector> cols;
    for (const auto& h : m.channels.bs_to_cue) cols.push_back(h);
    for (const auto& f : m.channels.bs_to_d2drx) cols.push_back(f);
    {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(m.q_matrix);
        const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
        for (int i = 0; i < nt; ++i)
            if (top > 0.0 && std::abs(es.eigenvalues()(i)) > 1e-12 * top) cols.push_back(es.eigenvectors().col(i));
    }
    CMatrix x(nt, static_cast<int>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) x.col(i) = cols[i].normalized();
    if (m.zf_basis) x = *m.zf_basis * (m.zf_basis->adjoint() * x);
    if (x.cols() == 0) return m.zf_basis ? *m.zf_basis : CMatrix(CMatrix::Identity(nt, nt));
    Eigen::JacobiSVD<CMatrix> svd(x, Eigen::ComputeThinU);
    const RVector& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
    if (rank == 0) return m.zf_basis ? *m.zf_basis : CMatrix(CMatrix::Identity(nt, nt));
    CMatrix u = svd.matrixU().leftCols(rank);
    if (m.zf_basis) u = *m.zf_basis * (m.zf_basis->adjoint() * u); // strip rounding outside the null space
    return Eigen::HouseholderQR<CMatrix>(u).householderQ() * CMatrix::Identity(nt, rank);
}

/// Conic program over normalized variables: block b is W_b = P * U_b Y_b U_b^H,
/// D2D power d is p_d = P_d * s_d. Objective value equals the surrogate in bits.
inline conic::Problem lower_surrogate(const SurrogateModel& m, const std::vector<CMatrix>& bases) {
    const int nb = m.n_cue() + 1;
    if (static_cast<int>(bases.size()) != nb) throw DimensionError("lower_surrogate: one basis per block required");
    const bool free_powers = !m.fixed_powers;
    const int nd = m.n_d2d();
    const double p_bs = m.bs_budget;
    const double p_d2d = m.d2d_budget;
    const double nc = m.comm_noise;
    const std::vector<double> fixed = m.fixed_powers.value_or(std::vector<double>(nd, 0.0));

    conic::Problem prob;
    for (const auto& u : bases) prob.block_dims.push_back(static_cast<int>(u.cols()));
    prob.n_scalars = free_powers ? nd : 0;

    auto gram = [&](const CVector& v, int b) {
        const CVector uv = bases[b].adjoint() * v;
        return CMatrix(uv * uv.adjoint());
    };
    auto zero_scalars = [&]() { return RVector(RVector::Zero(prob.n_scalars)); };

    // CUE k: S_k / N_c and the variable part of I_k / N_c.
    std::vector<conic::AffineForm> s_forms, i_forms, t_forms, j_forms;
    for (int k = 0; k < m.n_cue(); ++k) {
        conic::AffineForm s, i;
        s.scalars = zero_scalars();
        i.scalars = zero_scalars();
        double leak = 0.0;
        for (int d = 0; d < nd; ++d) {
            const double g2 = std::norm(m.channels.d2d_to_cue(d, k));
            if (free_powers) {
                s.scalars(d) = p_d2d * g2 / nc;
                i.scalars(d) = p_d2d * g2 / nc;
            } else {
                leak += fixed[d] * g2;
            }
        }
        for (int b = 0; b < nb; ++b) {
            const CMatrix g = (p_bs / nc) * gram(m.channels.bs_to_cue[k], b);
            s.blocks.push_back(g);
            i.blocks.push_back(b == k + 1 ? CMatrix(CMatrix::Zero(g.rows(), g.cols())) : g);
        }
        s.constant = 1.0 + leak / nc;
        i.constant = 1.0 + leak / nc;
        s_forms.push_back(s);
        i_forms.push_back(i);
    }
    // D2D receiver d: T_d / N_c and J_d / N_c.
    for (int d = 0; d < nd; ++d) {
        conic::AffineForm t, j;
        t.scalars = zero_scalars();
        j.scalars = zero_scalars();
        double own = 0.0, other = 0.0;
        for (int dp = 0; dp < nd; ++dp) {
            const double r2 = std::norm(m.channels.d2d_to_d2d(dp, d));
            if (free_powers) {
                t.scalars(dp) = p_d2d * r2 / nc;
                if (dp != d) j.scalars(dp) = p_d2d * r2 / nc;
            } else {
                (dp == d ? own : other) += fixed[dp] * r2;
            }
        }
        for (int b = 0; b < nb; ++b) {
            const CMatrix g = (p_bs / nc) * gram(m.channels.bs_to_d2drx[d], b);
            t.blocks.push_back(g);
            j.blocks.push_back(g);
        }
        t.constant = 1.0 + (own + other) / nc;
        j.constant = 1.0 + other / nc;
        t_forms.push_back(t);
        j_forms.push_back(j);
    }

    // Objective: sum log2 S + sum log2 T - beta_k I_k / ln2 - delta_d J_d / ln2 + const.
    const double w = 1.0 / kLn2;
    double constant = 0.0;
    prob.linear.scalars = zero_scalars();
    for (int b = 0; b < nb; ++b) prob.linear.blocks.push_back(CMatrix::Zero(bases[b].cols(), bases[b].cols()));
    auto subtract_tangent = [&](const conic::AffineForm& f, double inv_at_prev) {
        // phi = log2(X0) + c (X - X0) / ln2 with c = 1 / X0, X = N_c * f.
        const double c = inv_at_prev * nc;
        for (int b = 0; b < nb; ++b) prob.linear.blocks[b] -= (c * w) * f.blocks[b];
        prob.linear.scalars -= (c * w) * f.scalars;
        constant -= std::log2(1.0 / inv_at_prev) + (c * f.constant - 1.0) * w;
    };
    for (int k = 0; k < m.n_cue(); ++k) {
        prob.log_terms.push_back({w, s_forms[k]});
        constant += std::log2(nc);
        subtract_tangent(i_forms[k], m.beta[k]);
    }
    for (int d = 0; d < nd; ++d) {
        prob.log_terms.push_back({w, t_forms[d]});
        constant += std::log2(nc);
        subtract_tangent(j_forms[d], m.delta[d]);
    }
    prob.linear.constant = constant;

    // Power budget: 1 - sum tr(Y_b) >= 0.
    conic::AffineForm power;
    for (int b = 0; b < nb; ++b) power.blocks.push_back(-CMatrix::Identity(bases[b].cols(), bases[b].cols()));
    power.constant = 1.0;
    prob.inequalities.push_back(power);

    if (m.sensing_active) {
        conic::AffineForm sense;
        for (int b = 0; b < nb; ++b)
            sense.blocks.push_back((p_bs / m.eta_linear) * CMatrix(bases[b].adjoint() * m.q_matrix * bases[b]));
        sense.constant = -1.0;
        prob.inequalities.push_back(sense);
    }
    if (free_powers)
        for (int d = 0; d < nd; ++d) {
            conic::AffineForm lo, hi;
            lo.scalars = zero_scalars();
            hi.scalars = zero_scalars();
            lo.scalars(d) = 1.0;
            hi.scalars(d) = -1.0;
            hi.constant = 1.0;
            prob.inequalities.push_back(lo);
            prob.inequalities.push_back(hi);
        }
    return prob;
}

/// Map a conic point back to covariance blocks and D2D powers.
inline std::pair<TransmitCovariance, PowerAllocation> lift_solution(const SurrogateModel& m,
                                                                   const std::vector<CMatrix>& bases,
                                                                   const conic::Point& x) {
    TransmitCovariance cov = TransmitCovariance::zeros(m.n_tx(), m.n_cue());
    for (int b = 0; b < cov.n_blocks(); ++b)
        cov.block(b) = hermitian_part(m.bs_budget * bases[b] * x.blocks[b] * bases[b].adjoint());
    PowerAllocation pa;
    if (m.fixed_powers) {
        pa.d2d_powers = *m.fixed_powers;
    } else {
        for (int d = 0; d < m.n_d2d(); ++d)
            pa.d2d_powers.push_back(std::clamp(m.d2d_budget * x.scalars(d), 0.0, m.d2d_budget));
    }
    return {cov, pa};
}

struct SubproblemSolution {
    TransmitCovariance cov;
    PowerAllocation powers;
    double objective = 0.0;
    SubproblemStatus status = SubproblemStatus::Infeasible;
    double max_sensing = 0.0; // sup tr(Q W) under the budget, for diagnostics
    int newton_steps = 0;
};

struct SolverSettings {
    conic::Options conic;
    bool compress = true; // restrict blocks to the data subspace
};

namespace detail {

/// Strictly feasible start: a blend of a scaled-identity point and a point
/// concentrated on the leading eigenvector of Q in the radar block.
inline conic::Point surrogate_start(const SurrogateModel& m, const std::vector<CMatrix>& bases, double max_ratio) {
    const int nb = static_cast<int>(bases.size());
    const int r = static_cast<int>(bases[0].cols());
    const int nsc = m.fixed_powers ? 0 : m.n_d2d();
    conic::Point center;
    for (int b = 0; b < nb; ++b) center.blocks.push_back(CMatrix::Identity(r, r) * (0.5 / (nb * r)));
    center.scalars = RVector::Constant(nsc, 0.5);
    if (!m.sensing_active) return center;

    const CMatrix qt = bases[0].adjoint() * m.q_matrix * bases[0];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(qt));
    const CVector u = es.eigenvectors().col(r - 1);
    const double scale = m.bs_budget / m.eta_linear;
    const double eps = std::min(1e-3, 0.25 * (max_ratio - 1.0) / max_ratio);
    conic::Point peak;
    for (int b = 0; b < nb; ++b) peak.blocks.push_back(CMatrix::Identity(r, r) * (eps / (nb * r)));
    peak.blocks[0] += (1.0 - 2.0 * eps) * u * u.adjoint();
    peak.scalars = center.scalars;

    auto ratio = [&](const conic::Point& p) {
        double s = 0.0;
        for (const auto& y : p.blocks) s += trace_product(qt, y);
        return scale * s;
    };
    const double s_c = ratio(center);
    const double s_p = ratio(peak);
    const double target = 1.0 + 0.5 * (s_p - 1.0);
    if (s_c >= target) return center;
    const double lam = (target - s_c) / (s_p - s_c);
    conic::Point x;
    for (int b = 0; b < nb; ++b) x.blocks.push_back((1.0 - lam) * center.blocks[b] + lam * peak.blocks[b]);
    x.scalars = center.scalars;
    return x;
}

} // namespace detail

/// Blocks' bases used by solve_surrogate.
inline std::vector<CMatrix> surrogate_bases(const SurrogateModel& m, bool compress) {
    CMatrix u;
    if (compress) u = surrogate_subspace(m);
    else u = m.zf_basis ? *m.zf_basis : CMatrix(CMatrix::Identity(m.n_tx(), m.n_tx()));
    return std::vector<CMatrix>(m.n_cue() + 1, u);
}

inline SubproblemSolution solve_surrogate(const SurrogateModel& m, const SystemConfig& cfg,
                                          const SolverSettings& settings = {}) {
    (void)cfg;
    SubproblemSolution sol;
    sol.max_sensing = m.max_sensing_value();
    const double max_ratio = sol.max_sensing / m.eta_linear;
    if (m.sensing_active && !(max_ratio > 1.0 + 1e-9)) {
        sol.status = SubproblemStatus::Infeasible;
        sol.cov = m.expansion.cov_prev;
        sol.powers = m.expansion.powers_prev;
        return sol;
    }
    const auto bases = surrogate_bases(m, settings.compress);
    const conic::Problem prob = lower_surrogate(m, bases);
    const conic::Point start = detail::surrogate_start(m, bases, max_ratio);
    const conic::Result r = conic::maximize(prob, start, settings.conic);
    auto [cov, pa] = lift_solution(m, bases, r.x);
    sol.cov = std::move(cov);
    sol.powers = std::move(pa);
    sol.objective = m.surrogate_objective(sol.cov, sol.powers);
    sol.status = r.status == conic::Status::Optimal ? SubproblemStatus::Optimal : SubproblemStatus::MaxIter;
    sol.newton_steps = r.newton_steps;
    return sol;
}

/// Human-readable listing of a subproblem for cross-checking with other solvers.
inline void dump_surrogate(std::ostream& out, const SurrogateModel& m) {
    const auto prec = out.precision(17);
    out << "n_tx " << m.n_tx() << "\nn_cue " << m.n_cue() << "\nn_d2d " << m.n_d2d() << '\n';
    out << "bs_budget_mw " << m.bs_budget << "\nd2d_budget_mw " << m.d2d_budget << "\ncomm_noise_mw " << m.comm_noise
        << '\n';
    out << "sensing_active " << m.sensing_active << "\neta_linear " << m.eta_linear << '\n';
    out << "zero_forcing " << (m.zf_basis ? 1 : 0) << '\n';
    out << "fixed_powers " << (m.fixed_powers ? 1 : 0) << '\n';
    out << "Q\n" << m.q_matrix << '\n';
    for (std::size_t k = 0; k < m.beta.size(); ++k) out << "beta " << k << ' ' << m.beta[k] << '\n';
    for (std::size_t d = 0; d < m.delta.size(); ++d) out << "delta " << d << ' ' << m.delta[d] << '\n';
    out << "expansion_radar\n" << m.expansion.cov_prev.radar << '\n';
    for (int k = 0; k < m.expansion.cov_prev.n_cue(); ++k)
        out << "expansion_cue " << k << '\n' << m.expansion.cov_prev.per_cue[k] << '\n';
    for (int d = 0; d < m.expansion.powers_prev.size(); ++d)
        out << "expansion_power " << d << ' ' << m.expansion.powers_prev.d2d_powers[d] << '\n';
    out.precision(prec);
}

} // namespace isac
