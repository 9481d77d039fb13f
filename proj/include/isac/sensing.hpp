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

// Radar-side quantities. Everything here is an expectation over the transmit
// symbols, so the transmit signal enters only through its covariance W.
//
//   M      = C W C^H + N_s I              (clutter-plus-noise at the receive array)
//   t*     = M^-1 a_r(theta_0)            (MVDR combiner, up to scale)
//   SCNR   = |a0|^2 t^H A W A^H t / t^H M t
//          = tr(Q W),  Q = |a0|^2 A^H M^-1 A   at t = t*

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "isac/channel.hpp"
#include "isac/errors.hpp"
#include "isac/linalg.hpp"

namespace isac {

/// BS transmit covariance split into per-CUE blocks and the radar block.
struct TransmitCovariance {
    std::vector<CMatrix> per_cue; // W_1..W_K
    CMatrix radar;                // W_0

    static TransmitCovariance zeros(int n_tx, int n_cue) {
        return {std::vector<CMatrix>(n_cue, CMatrix::Zero(n_tx, n_tx)), CMatrix::Zero(n_tx, n_tx)};
    }

    int n_tx() const { return static_cast<int>(radar.rows()); }
    int n_cue() const { return static_cast<int>(per_cue.size()); }

    /// W = W_0 + sum_k W_k
    CMatrix total() const {
        CMatrix w = radar;
        for (const auto& b : per_cue) w += b;
        return w;
    }

    /// Sum of block traces.
    double power() const {
        double p = radar.trace().real();
        for (const auto& b : per_cue) p += b.trace().real();
        return p;
    }

    /// Block b: 0 is the radar block, 1..K the CUE blocks.
    const CMatrix& block(int b) const { return b == 0 ? radar : per_cue[b - 1]; }
    CMatrix& block(int b) { return b == 0 ? radar : per_cue[b - 1]; }
    int n_blocks() const { return n_cue() + 1; }

    TransmitCovariance scaled(double s) const {
        TransmitCovariance c = *this;
        c.radar *= s;
        for (auto& b : c.per_cue) b *= s;
        return c;
    }
};

struct ReceiveBeamformer {
    CVector weights;
    CMatrix interference_matrix;
};

struct SensingConstraintCoeff {
    CMatrix q_matrix;
};

/// M = C W C^H + N_s I for a total covariance W.
inline CMatrix interference_matrix(const RadarEnvironment& env, const CMatrix& w_total) {
    const CMatrix& c = env.clutter_matrix;
    CMatrix m = hermitian_part(c * w_total * c.adjoint());
    m.diagonal().array() += env.radar_noise;
    return m;
}

namespace detail {

inline void check_covariance(const RadarEnvironment& env, const TransmitCovariance& cov) {
    if (cov.n_tx() != env.n_tx()) throw DimensionError("transmit covariance does not match the transmit array");
}

// The clutter term has rank at most n_clutter: C W C^H = R G R^H with
// R = [a_r(theta_i)] and G_ij = alpha_i alpha_j a_t(theta_i)^T W a_t(theta_j)^*.
// Working through R and G avoids forming M, whose condition number at strong
// clutter (~1e12) would otherwise cost about five significant digits.
struct ClutterFactor {
    CMatrix r;
    CMatrix g;
    CMatrix small_solve; // (N_s I + G R^H R)^-1 G
    double noise = 0.0;
};

inline ClutterFactor clutter_factor(const RadarEnvironment& env, const CMatrix& w) {
    const int nc = static_cast<int>(env.clutter_angles.size());
    ClutterFactor f;
    f.noise = env.radar_noise;
    f.r.resize(env.n_rx(), nc);
    CMatrix at(env.n_tx(), nc);
    for (int i = 0; i < nc; ++i) {
        const double amp = std::sqrt(env.clutter_gains_sq[i]);
        f.r.col(i) = steering_vector(env.clutter_angles[i], env.n_rx());
        at.col(i) = amp * steering_vector(env.clutter_angles[i], env.n_tx());
    }
    f.g = hermitian_part(at.transpose() * w * at.conjugate());
    if (nc > 0) {
        const CMatrix s = env.radar_noise * CMatrix::Identity(nc, nc) + f.g * (f.r.adjoint() * f.r);
        const Eigen::FullPivLU<CMatrix> lu(s);
        if (!lu.isInvertible()) throw NumericError("clutter-plus-noise matrix is not positive definite");
        f.small_solve = lu.solve(f.g);
    }
    return f;
}

/// M^-1 x via the push-through identity.
inline CMatrix interference_solve(const ClutterFactor& f, const CMatrix& x) {
    if (f.r.cols() == 0) return x / f.noise;
    return (x - f.r * (f.small_solve * (f.r.adjoint() * x))) / f.noise;
}

/// t^H M t as a sum of nonnegative terms.
inline double interference_form(const ClutterFactor& f, const CVector& t) {
    double v = f.noise * t.squaredNorm();
    if (f.r.cols() > 0) {
        const CVector rt = f.r.adjoint() * t;
        v += clamp_nonnegative(rt.dot(f.g * rt).real());
    }
    return v;
}

/// a_r^H M^-1 a_r for the target direction.
inline double mvdr_gain(const RadarEnvironment& env, const ClutterFactor& f) {
    const CVector minv_ar = interference_solve(f, env.target_steering_rx);
    return env.target_steering_rx.dot(minv_ar).real();
}

} // namespace detail

/// MVDR direction M^-1 a_r(theta_0), with M built from cov.total().
/// Only the direction matters: the SCNR quotient is scale invariant.
inline ReceiveBeamformer mvdr_weights(const RadarEnvironment& env, const TransmitCovariance& cov) {
    detail::check_covariance(env, cov);
    const CMatrix w = cov.total();
    ReceiveBeamformer rb;
    rb.interference_matrix = interference_matrix(env, w);
    rb.weights = detail::interference_solve(detail::clutter_factor(env, w), env.target_steering_rx);
    return rb;
}

/// Radar SCNR (linear). With `t` the Rayleigh quotient for that combiner;
/// without it, the MVDR-optimal value in trace form tr(Q W).
inline double scnr(const RadarEnvironment& env, const TransmitCovariance& cov,
                   const std::optional<CVector>& t = std::nullopt) {
    detail::check_covariance(env, cov);
    const CMatrix w = cov.total();
    const detail::ClutterFactor f = detail::clutter_factor(env, w);
    const double tx_power = clamp_nonnegative(quad_form(env.target_steering_tx.conjugate(), w)); // a_t^T W a_t^*
    if (t) {
        if (t->size() != env.n_rx()) throw DimensionError("scnr: combiner length != n_rx");
        if (t->squaredNorm() == 0.0) throw DomainError("scnr: zero combiner");
        const cplx gain = t->dot(env.target_steering_rx); // t^H a_r
        return env.target_gain_sq * std::norm(gain) * tx_power / detail::interference_form(f, *t);
    }
    // tr(Q W) with Q = |a0|^2 (a_r^H M^-1 a_r) a_t^* a_t^T
    return clamp_nonnegative(env.target_gain_sq * detail::mvdr_gain(env, f) * tx_power);
}

/// Q = |a0|^2 A^H M^-1 A with M frozen at `prev_cov`; tr(Q W) >= eta is the
/// linearized sensing constraint of the next subproblem.
inline SensingConstraintCoeff sensing_constraint_coeff(const RadarEnvironment& env, const TransmitCovariance& prev_cov) {
    detail::check_covariance(env, prev_cov);
    const double gain = detail::mvdr_gain(env, detail::clutter_factor(env, prev_cov.total())); // a_r^H M^-1 a_r
    const CVector at_conj = env.target_steering_tx.conjugate();
    return {env.target_gain_sq * gain * at_conj * at_conj.adjoint()};
}

struct BeampatternSample {
    double theta = 0.0;
    double power_db = 0.0;
};

inline constexpr double kBeampatternFloorDb = -300.0;

/// Uniform grid of `n` angles over [-pi/2, pi/2].
inline std::vector<double> angle_grid(int n = 721) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = -kPi / 2 + kPi * i / (n - 1);
    return g;
}

/// P(theta) = |t*^H a_r(theta)|^2 a_t(theta)^T W a_t(theta)^*, peak-normalized to
/// 0 dB and floored at -300 dB.
inline std::vector<BeampatternSample> beampattern(const RadarEnvironment& env, const TransmitCovariance& cov,
                                                  const std::vector<double>& thetas) {
    if (thetas.empty()) throw DomainError("beampattern: empty angle grid");
    const CVector t = mvdr_weights(env, cov).weights;
    const CMatrix w = cov.total();
    std::vector<double> p(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const CVector ar = steering_vector(thetas[i], env.n_rx());
        const CVector at = steering_vector(thetas[i], env.n_tx());
        p[i] = std::norm(t.dot(ar)) * clamp_nonnegative(quad_form(at.conjugate(), w));
    }
    const double peak = *std::max_element(p.begin(), p.end());
    std::vector<BeampatternSample> out(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double rel = peak > 0.0 ? p[i] / peak : 0.0;
        out[i] = {thetas[i], rel > 0.0 ? std::max(to_db(rel), kBeampatternFloorDb) : kBeampatternFloorDb};
    }
    return out;
}

} // namespace isac
