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

// Log-barrier interior-point method for
//
//   maximize   sum_j w_j ln(a_j(X, s)) + l(X, s)
//   subject to g_i(X, s) >= 0,  X_b >= 0 (Hermitian PSD) for every block b
//
// where every a_j, l, g_i is affine in the Hermitian blocks X_b and the real
// scalars s, and w_j >= 0. Each n x n Hermitian block is carried as n^2 real
// coordinates (diagonal, then real and imaginary parts of the strict upper
// triangle), so the barrier -ln det X_b and its derivatives are evaluated on
// the complex matrix directly and only the Newton system is real.
//
// The duality gap of the central point at barrier weight t is at most m / t,
// with m the sum of block sizes plus the number of inequalities.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "isac/errors.hpp"
#include "isac/linalg.hpp"

namespace isac::conic {

/// sum_b Re tr(C_b X_b) + scalars . s + constant. Empty blocks count as zero.
struct AffineForm {
    std::vector<CMatrix> blocks;
    RVector scalars;
    double constant = 0.0;
};

struct LogTerm {
    double weight = 1.0;
    AffineForm arg;
};

struct Problem {
    std::vector<int> block_dims;
    int n_scalars = 0;
    std::vector<LogTerm> log_terms;
    AffineForm linear;
    std::vector<AffineForm> inequalities;
};

struct Point {
    std::vector<CMatrix> blocks;
    RVector scalars;
};

struct Options {
    double gap_tol = 1e-7; // absolute bound on m / t at exit
    double mu = 50.0;
    double t0 = 1.0;
    double newton_tol = 1e-8; // lambda^2 / 2 at which a centering step stops
    int max_center_steps = 50; // rounding can keep lambda^2 above newton_tol at large t
    int max_newton = 600;
};

enum class Status { Optimal, MaxIter, Infeasible };

struct Result {
    Point x;
    double objective = 0.0;
    Status status = Status::MaxIter;
    int newton_steps = 0;
    double gap = std::numeric_limits<double>::infinity();
};

// ----- Coordinates --------------------------------------------------------

class Layout {
public:
    Layout(const std::vector<int>& dims, int n_scalars) : dims_(dims), n_scalars_(n_scalars) {
        int off = 0;
        for (int d : dims_) {
            offsets_.push_back(off);
            off += d * d;
        }
        scalar_offset_ = off;
        size_ = off + n_scalars;
    }

    int size() const { return size_; }
    int n_blocks() const { return static_cast<int>(dims_.size()); }
    int dim(int b) const { return dims_[b]; }
    int offset(int b) const { return offsets_[b]; }
    int scalar_offset() const { return scalar_offset_; }
    int n_scalars() const { return n_scalars_; }

    /// Coordinates of the linear functional X -> Re tr(C X) in block b.
    void write_block_coeffs(const CMatrix& c, int b, Eigen::Ref<RVector> out) const {
        const int n = dims_[b];
        int idx = offsets_[b];
        for (int i = 0; i < n; ++i) out(idx++) = c(i, i).real();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const cplx cij = 0.5 * (c(i, j) + std::conj(c(j, i)));
                out(idx++) = 2.0 * cij.real();
                out(idx++) = 2.0 * cij.imag();
            }
    }

    RVector to_vector(const AffineForm& f) const {
        RVector a = RVector::Zero(size_);
        for (int b = 0; b < n_blocks() && b < static_cast<int>(f.blocks.size()); ++b)
            if (f.blocks[b].size() > 0) {
                if (f.blocks[b].rows() != dims_[b] || f.blocks[b].cols() != dims_[b])
                    throw DimensionError("conic: coefficient block has the wrong size");
                write_block_coeffs(f.blocks[b], b, a);
            }
        if (f.scalars.size() > 0) {
            if (f.scalars.size() != n_scalars_) throw DimensionError("conic: scalar coefficients have the wrong size");
            a.tail(n_scalars_) = f.scalars;
        }
        return a;
    }

    CMatrix block(const RVector& x, int b) const {
        const int n = dims_[b];
        CMatrix m(n, n);
        int idx = offsets_[b];
        for (int i = 0; i < n; ++i) m(i, i) = x(idx++);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                m(i, j) = cplx(x(idx), x(idx + 1));
                m(j, i) = std::conj(m(i, j));
                idx += 2;
            }
        return m;
    }

    RVector pack(const Point& p) const {
        RVector x = RVector::Zero(size_);
        for (int b = 0; b < n_blocks(); ++b) {
            const CMatrix& m = p.blocks.at(b);
            int idx = offsets_[b];
            const int n = dims_[b];
            for (int i = 0; i < n; ++i) x(idx++) = m(i, i).real();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const cplx v = 0.5 * (m(i, j) + std::conj(m(j, i)));
                    x(idx++) = v.real();
                    x(idx++) = v.imag();
                }
        }
        if (n_scalars_ > 0) x.tail(n_scalars_) = p.scalars;
        return x;
    }

    Point unpack(const RVector& x) const {
        Point p;
        for (int b = 0; b < n_blocks(); ++b) p.blocks.push_back(block(x, b));
        p.scalars = x.tail(n_scalars_);
        return p;
    }

private:
    std::vector<int> dims_;
    int n_scalars_;
    std::vector<int> offsets_;
    int scalar_offset_ = 0;
    int size_ = 0;
};

// ----- Solver -------------------------------------------------------------

namespace detail {

/// A form kept in matrix shape, so it can be congruence-scaled per step.
struct FormBlocks {
    std::vector<CMatrix> blocks; // empty entries are zero
    RVector scalars;
};

struct Compiled {
    Layout layout;
    RMatrix log_a; // columns a_j
    RVector log_c;
    RVector log_w;
    RVector lin;
    double lin_c = 0.0;
    RMatrix ineq_a; // columns g_i
    RVector ineq_c;
    std::vector<FormBlocks> log_forms;
    std::vector<FormBlocks> ineq_forms;
    FormBlocks lin_form;
    int degree = 0;

    explicit Compiled(const Problem& p) : layout(p.block_dims, p.n_scalars) {
        const int n = layout.size();
        const int nl = static_cast<int>(p.log_terms.size());
        log_a.resize(n, nl);
        log_c.resize(nl);
        log_w.resize(nl);
        for (int j = 0; j < nl; ++j) {
            if (p.log_terms[j].weight < 0.0) throw PreconditionError("conic: log terms need nonnegative weights");
            log_a.col(j) = layout.to_vector(p.log_terms[j].arg);
            log_c(j) = p.log_terms[j].arg.constant;
            log_w(j) = p.log_terms[j].weight;
            log_forms.push_back(shape(p.log_terms[j].arg));
        }
        lin = layout.to_vector(p.linear);
        lin_c = p.linear.constant;
        lin_form = shape(p.linear);
        const int ni = static_cast<int>(p.inequalities.size());
        ineq_a.resize(n, ni);
        ineq_c.resize(ni);
        for (int i = 0; i < ni; ++i) {
            ineq_a.col(i) = layout.to_vector(p.inequalities[i]);
            ineq_c(i) = p.inequalities[i].constant;
            ineq_forms.push_back(shape(p.inequalities[i]));
        }
        degree = ni;
        for (int d : p.block_dims) degree += d;
    }

    FormBlocks shape(const AffineForm& f) const {
        FormBlocks fb;
        for (int b = 0; b < layout.n_blocks(); ++b) {
            if (b < static_cast<int>(f.blocks.size()) && f.blocks[b].size() > 0 && !f.blocks[b].isZero(0.0))
                fb.blocks.push_back(0.5 * (f.blocks[b] + f.blocks[b].adjoint()));
            else
                fb.blocks.emplace_back();
        }
        fb.scalars = f.scalars.size() > 0 ? f.scalars : RVector(RVector::Zero(layout.n_scalars()));
        return fb;
    }

    double objective(const RVector& x) const {
        const RVector u = log_a.transpose() * x + log_c;
        double f = lin.dot(x) + lin_c;
        for (int j = 0; j < u.size(); ++j) f += log_w(j) * std::log(u(j));
        return f;
    }
};

/// Barrier state at one point: slacks, log arguments, block Cholesky factors.
struct Eval {
    RVector u;  // log arguments
    RVector sl; // inequality slacks
    std::vector<CMatrix> chol_l;
    std::vector<double> logdet;
    bool ok = false;
};

inline Eval evaluate(const Compiled& c, const RVector& x) {
    Eval e;
    e.u = c.log_a.transpose() * x + c.log_c;
    e.sl = c.ineq_a.transpose() * x + c.ineq_c;
    for (int j = 0; j < e.u.size(); ++j)
        if (!(e.u(j) > 0.0) && c.log_w(j) > 0.0) return e;
    for (int i = 0; i < e.sl.size(); ++i)
        if (!(e.sl(i) > 0.0)) return e;
    for (int b = 0; b < c.layout.n_blocks(); ++b) {
        Eigen::LLT<CMatrix> llt(c.layout.block(x, b));
        if (llt.info() != Eigen::Success) return e;
        CMatrix l = llt.matrixL();
        double ld = 0.0;
        for (int i = 0; i < c.layout.dim(b); ++i) {
            const double dii = l(i, i).real();
            if (!(dii > 0.0)) return e;
            ld += 2.0 * std::log(dii);
        }
        e.chol_l.push_back(std::move(l));
        e.logdet.push_back(ld);
    }
    e.ok = true;
    return e;
}

/// F(y) - F(x) for F = -t f0 - sum ln g_i - sum ln det X_b, computed from ratios.
inline double barrier_change(const Compiled& c, double t, const RVector& dx, const Eval& ex, const Eval& ey) {
    double df = -t * c.lin.dot(dx);
    for (int j = 0; j < ex.u.size(); ++j)
        if (c.log_w(j) > 0.0) df -= t * c.log_w(j) * std::log(ey.u(j) / ex.u(j));
    for (int i = 0; i < ex.sl.size(); ++i) df -= std::log(ey.sl(i) / ex.sl(i));
    for (std::size_t b = 0; b < ex.logdet.size(); ++b) df -= ey.logdet[b] - ex.logdet[b];
    return df;
}

/// Coordinates of a form after the change of variables dX_b = L_b dY_b L_b^H.
inline RVector scaled_form(const Compiled& c, const FormBlocks& f, const Eval& e) {
    RVector a = RVector::Zero(c.layout.size());
    for (int b = 0; b < c.layout.n_blocks(); ++b)
        if (f.blocks[b].size() > 0) {
            const CMatrix& l = e.chol_l[b];
            c.layout.write_block_coeffs(l.adjoint() * f.blocks[b] * l, b, a);
        }
    if (c.layout.n_scalars() > 0) a.tail(c.layout.n_scalars()) = f.scalars;
    return a;
}

} // namespace detail

/// Called after every accepted Newton step; returning true stops the solve.
using StopPredicate = std::function<bool(const RVector&)>;

namespace detail {

// Newton steps are taken in congruence-scaled block coordinates, where the
// Hessian of -ln det is the constant metric tr(dY^2). This keeps the Newton
// system well conditioned when blocks approach low rank near the optimum.
inline Result run_barrier(const Compiled& c, RVector x, const Options& opt, const StopPredicate& stop) {
    Result res;
    Eval ex = evaluate(c, x);
    if (!ex.ok) throw PreconditionError("conic: start point is not strictly feasible");

    const Layout& lay = c.layout;
    const int n = lay.size();
    const int nl = static_cast<int>(c.log_forms.size());
    const int ni = static_cast<int>(c.ineq_forms.size());

    // Metric of -ln det in scaled coordinates: 1 on diagonals, 2 off-diagonal.
    RVector metric = RVector::Zero(n);
    RVector logdet_grad = RVector::Zero(n);
    for (int b = 0; b < lay.n_blocks(); ++b) {
        const int d = lay.dim(b);
        metric.segment(lay.offset(b), d).setOnes();
        metric.segment(lay.offset(b) + d, d * d - d).setConstant(2.0);
        logdet_grad.segment(lay.offset(b), d).setConstant(-1.0);
    }

    double t = opt.t0;
    int steps = 0;
    bool early = false;
    RMatrix h(n, n);
    RVector g(n);
    RMatrix a_log(n, nl), a_ineq(n, ni);

    while (true) {
        for (int cs = 0; cs < opt.max_center_steps && steps < opt.max_newton; ++cs) {
            for (int j = 0; j < nl; ++j) a_log.col(j) = scaled_form(c, c.log_forms[j], ex);
            for (int i = 0; i < ni; ++i) a_ineq.col(i) = scaled_form(c, c.ineq_forms[i], ex);
            const RVector a_lin = scaled_form(c, c.lin_form, ex);

            g = -t * a_lin + logdet_grad;
            h.setZero();
            h.diagonal() = metric;
            if (nl > 0) {
                RVector wg(nl), wh(nl);
                for (int j = 0; j < nl; ++j) {
                    const double inv = c.log_w(j) > 0.0 ? 1.0 / ex.u(j) : 0.0;
                    wg(j) = t * c.log_w(j) * inv;
                    wh(j) = std::sqrt(t * c.log_w(j)) * inv;
                }
                g.noalias() -= a_log * wg;
                const RMatrix sc = a_log * wh.asDiagonal();
                h.noalias() += sc * sc.transpose();
            }
            if (ni > 0) {
                const RVector inv = ex.sl.cwiseInverse();
                g.noalias() -= a_ineq * inv;
                const RMatrix sc = a_ineq * inv.asDiagonal();
                h.noalias() += sc * sc.transpose();
            }

            Eigen::LLT<RMatrix> llt(h);
            RVector dy;
            if (llt.info() == Eigen::Success) {
                dy = -llt.solve(g);
            } else {
                const double ridge = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
                dy = -(h + ridge * RMatrix::Identity(n, n)).ldlt().solve(g);
            }
            const double lambda2 = -g.dot(dy);
            if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) break;
            if (lambda2 / 2.0 <= opt.newton_tol) break;

            // Back to original coordinates.
            RVector dx(n);
            for (int b = 0; b < lay.n_blocks(); ++b) {
                const CMatrix& l = ex.chol_l[b];
                const CMatrix dxb = l * lay.block(dy, b) * l.adjoint();
                const int dd = lay.dim(b);
                int idx = lay.offset(b);
                for (int i = 0; i < dd; ++i) dx(idx++) = dxb(i, i).real();
                for (int i = 0; i < dd; ++i)
                    for (int j = i + 1; j < dd; ++j) {
                        const cplx v = 0.5 * (dxb(i, j) + std::conj(dxb(j, i)));
                        dx(idx++) = v.real();
                        dx(idx++) = v.imag();
                    }
            }
            if (lay.n_scalars() > 0) dx.tail(lay.n_scalars()) = dy.tail(lay.n_scalars());

            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
                const RVector y = x + alpha * dx;
                Eval ey = evaluate(c, y);
                if (!ey.ok) continue;
                // Inside the quadratic-convergence region a full step always decreases a
                // self-concordant barrier, and Armijo would only be testing rounding noise.
                const bool newton_region = alpha == 1.0 && lambda2 < 0.25;
                if (newton_region || barrier_change(c, t, alpha * dx, ex, ey) <= -0.25 * alpha * lambda2) {
                    x = y;
                    ex = std::move(ey);
                    accepted = true;
                    break;
                }
            }
            ++steps;
            if (!accepted) {
                break; // no further progress representable at this t
            }
            if (stop && stop(x)) {
                early = true;
                break;
            }
        }
        const double gap = c.degree / t;
        if (early || gap <= opt.gap_tol || steps >= opt.max_newton) {
            res.gap = gap;
            res.status = (gap <= opt.gap_tol || early) ? Status::Optimal : Status::MaxIter;
            break;
        }
        t *= opt.mu;
    }
    res.x = c.layout.unpack(x);
    res.objective = c.objective(x);
    res.newton_steps = steps;
    return res;
}

} // namespace detail

/// Maximize from a strictly feasible start.
inline Result maximize(const Problem& p, const Point& start, const Options& opt = {}) {
    const detail::Compiled c(p);
    return detail::run_barrier(c, c.layout.pack(start), opt, {});
}

/// Objective value at a point (no feasibility check).
inline double objective_at(const Problem& p, const Point& x) {
    const detail::Compiled c(p);
    return c.objective(c.layout.pack(x));
}

inline bool strictly_feasible(const Problem& p, const Point& x) {
    const detail::Compiled c(p);
    return detail::evaluate(c, c.layout.pack(x)).ok;
}

/// Phase I: search for a strictly feasible point starting from `hint`, whose
/// blocks must be positive definite. Returns nullopt when the inequalities
/// cannot all be made strictly positive.
inline std::optional<Point> find_strictly_feasible(const Problem& p, const Point& hint, const Options& opt = {}) {
    if (strictly_feasible(p, hint)) return hint;

    Problem aux;
    aux.block_dims = p.block_dims;
    aux.n_scalars = p.n_scalars + 1;
    auto extend = [&](const AffineForm& f, double slack_coeff) {
        AffineForm g = f;
        g.scalars = RVector::Zero(aux.n_scalars);
        if (f.scalars.size() > 0) g.scalars.head(p.n_scalars) = f.scalars;
        g.scalars(p.n_scalars) = slack_coeff;
        return g;
    };
    for (const auto& f : p.inequalities) aux.inequalities.push_back(extend(f, 1.0));
    for (const auto& lt : p.log_terms)
        if (lt.weight > 0.0) aux.inequalities.push_back(extend(lt.arg, 1.0));
    AffineForm floor;
    floor.scalars = RVector::Zero(aux.n_scalars);
    floor.scalars(p.n_scalars) = 1.0;
    floor.constant = 1.0; // slack >= -1
    aux.inequalities.push_back(floor);
    aux.linear.scalars = RVector::Zero(aux.n_scalars);
    aux.linear.scalars(p.n_scalars) = -1.0;

    const detail::Compiled c(aux);
    const Layout& lay = c.layout;
    Point start = hint;
    start.scalars = RVector::Zero(aux.n_scalars);
    if (hint.scalars.size() > 0) start.scalars.head(p.n_scalars) = hint.scalars;
    RVector x = lay.pack(start);
    const RVector sl = c.ineq_a.transpose() * x + c.ineq_c;
    double worst = 0.0;
    for (int i = 0; i + 1 < sl.size(); ++i) worst = std::min(worst, sl(i));
    x(lay.size() - 1) = -worst + 1.0;

    const int slack_idx = lay.size() - 1;
    Options o = opt;
    o.gap_tol = 1e-9;
    const Result r = detail::run_barrier(c, x, o, [&](const RVector& y) { return y(slack_idx) < 0.0; });
    const RVector xr = lay.pack(r.x);
    if (!(xr(slack_idx) < 0.0)) return std::nullopt;
    Point out = r.x;
    out.scalars = r.x.scalars.head(p.n_scalars);
    if (!strictly_feasible(p, out)) return std::nullopt;
    return out;
}

} // namespace isac::conic
