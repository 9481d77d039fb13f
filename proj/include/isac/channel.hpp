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
#include <iomanip>
#include <ostream>
#include <vector>

#include "isac/errors.hpp"
#include "isac/linalg.hpp"
#include "isac/scenario.hpp"

namespace isac {

// ----- Communication channels ----------------------------------------------

/// One fading realization of every communication link.
struct ChannelSet {
    std::vector<CVector> bs_to_cue;   // h_k, length n_tx
    CMatrix d2d_to_cue;               // (d, k) -> g_{d,k}
    CMatrix d2d_to_d2d;               // (d', d) -> rho_{d',d}, transmitter d' to receiver d
    std::vector<CVector> bs_to_d2drx; // f_d, length n_tx

    int n_cue() const { return static_cast<int>(bs_to_cue.size()); }
    int n_d2d() const { return static_cast<int>(bs_to_d2drx.size()); }
    int n_tx() const { return bs_to_cue.empty() ? 0 : static_cast<int>(bs_to_cue.front().size()); }

    friend bool operator==(const ChannelSet& a, const ChannelSet& b) {
        if (a.bs_to_cue.size() != b.bs_to_cue.size() || a.bs_to_d2drx.size() != b.bs_to_d2drx.size()) return false;
        for (std::size_t i = 0; i < a.bs_to_cue.size(); ++i)
            if (a.bs_to_cue[i] != b.bs_to_cue[i]) return false;
        for (std::size_t i = 0; i < a.bs_to_d2drx.size(); ++i)
            if (a.bs_to_d2drx[i] != b.bs_to_d2drx[i]) return false;
        return a.d2d_to_cue == b.d2d_to_cue && a.d2d_to_d2d == b.d2d_to_d2d;
    }
};

/// Complex amplitude of a link at `distance`: distance^-q * h0 with h0 ~ CN(0, 1).
inline cplx pathloss_coefficient(double distance, double exponent, RngStream& rng) {
    if (!(distance > 0.0)) throw DomainError("sample_channels: zero-length link");
    return std::pow(distance, -exponent) * rng.complex_normal();
}

inline ChannelSet sample_channels(const SystemConfig& cfg, const Geometry& geo, RngStream& rng) {
    if (geo.cue_positions.size() != static_cast<std::size_t>(cfg.n_cue) ||
        geo.d2d_tx_positions.size() != static_cast<std::size_t>(cfg.n_d2d) ||
        geo.d2d_rx_positions.size() != static_cast<std::size_t>(cfg.n_d2d))
        throw DimensionError("sample_channels: geometry does not match config");

    const double q = cfg.pathloss_exponent;
    auto vector_link = [&](const Point& a, const Point& b) {
        const double c = (a - b).norm();
        CVector v(cfg.n_tx);
        for (int m = 0; m < cfg.n_tx; ++m) v(m) = pathloss_coefficient(c, q, rng);
        return v;
    };

    ChannelSet ch;
    for (const auto& p : geo.cue_positions) ch.bs_to_cue.push_back(vector_link(geo.bs_position, p));
    for (const auto& p : geo.d2d_rx_positions) ch.bs_to_d2drx.push_back(vector_link(geo.bs_position, p));
    ch.d2d_to_cue.resize(cfg.n_d2d, cfg.n_cue);
    for (int d = 0; d < cfg.n_d2d; ++d)
        for (int k = 0; k < cfg.n_cue; ++k)
            ch.d2d_to_cue(d, k) = pathloss_coefficient((geo.d2d_tx_positions[d] - geo.cue_positions[k]).norm(), q, rng);
    ch.d2d_to_d2d.resize(cfg.n_d2d, cfg.n_d2d);
    for (int dp = 0; dp < cfg.n_d2d; ++dp)
        for (int d = 0; d < cfg.n_d2d; ++d)
            ch.d2d_to_d2d(dp, d) =
                pathloss_coefficient((geo.d2d_tx_positions[dp] - geo.d2d_rx_positions[d]).norm(), q, rng);
    return ch;
}

/// Flattened dump: one row per complex coefficient, `link,i,j,re,im`.
inline void write_channel_csv(std::ostream& out, const ChannelSet& ch) {
    out << "link,i,j,re,im\n" << std::setprecision(17);
    auto row = [&](const char* link, int i, int j, cplx v) {
        out << link << ',' << i << ',' << j << ',' << v.real() << ',' << v.imag() << '\n';
    };
    for (int k = 0; k < ch.n_cue(); ++k)
        for (int m = 0; m < ch.bs_to_cue[k].size(); ++m) row("h", k, m, ch.bs_to_cue[k](m));
    for (int d = 0; d < ch.d2d_to_cue.rows(); ++d)
        for (int k = 0; k < ch.d2d_to_cue.cols(); ++k) row("g", d, k, ch.d2d_to_cue(d, k));
    for (int dp = 0; dp < ch.d2d_to_d2d.rows(); ++dp)
        for (int d = 0; d < ch.d2d_to_d2d.cols(); ++d) row("rho", dp, d, ch.d2d_to_d2d(dp, d));
    for (int d = 0; d < ch.n_d2d(); ++d)
        for (int m = 0; m < ch.bs_to_d2drx[d].size(); ++m) row("f", d, m, ch.bs_to_d2drx[d](m));
}

// ----- Radar array ------------------------------------------------------------

/// Half-wavelength ULA response: entry m is exp(-j*pi*m*sin(theta)).
inline CVector steering_vector(double theta, int n) {
    if (n < 1) throw DomainError("steering_vector: antenna count must be >= 1");
    CVector a(n);
    const double s = std::sin(theta);
    for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, -kPi * m * s);
    return a;
}

/// a_r(theta) a_t(theta)^T, the n_rx x n_tx two-way response.
inline CMatrix array_response(double theta, int n_rx, int n_tx) {
    return steering_vector(theta, n_rx) * steering_vector(theta, n_tx).transpose();
}

struct RadarEnvironment {
    double target_angle = 0.0;
    CVector target_steering_tx;
    CVector target_steering_rx;
    CMatrix target_matrix; // A(theta_0)
    double target_gain_sq = 0.0;
    std::vector<double> clutter_angles;
    std::vector<double> clutter_gains_sq;
    CMatrix clutter_matrix; // sum_i alpha_i A(theta_i)
    double radar_noise = 0.0;

    int n_tx() const { return static_cast<int>(target_steering_tx.size()); }
    int n_rx() const { return static_cast<int>(target_steering_rx.size()); }
};

/// Gains are N_s * 10^(dB/10); clutter amplitudes are the nonnegative real roots.
inline RadarEnvironment build_radar_environment(const SystemConfig& cfg) {
    cfg.validate();
    RadarEnvironment env;
    env.target_angle = cfg.target_angle;
    env.target_steering_tx = steering_vector(cfg.target_angle, cfg.n_tx);
    env.target_steering_rx = steering_vector(cfg.target_angle, cfg.n_rx);
    env.target_matrix = env.target_steering_rx * env.target_steering_tx.transpose();
    env.radar_noise = cfg.radar_noise;
    env.target_gain_sq = cfg.radar_noise * from_decibels(cfg.target_gain_over_noise);
    env.clutter_angles = cfg.clutter_angles;
    env.clutter_matrix = CMatrix::Zero(cfg.n_rx, cfg.n_tx);
    for (int i = 0; i < cfg.n_clutter; ++i) {
        const double gain_sq = cfg.radar_noise * from_decibels(cfg.clutter_gain_over_noise[i]);
        env.clutter_gains_sq.push_back(gain_sq);
        env.clutter_matrix += std::sqrt(gain_sq) * array_response(cfg.clutter_angles[i], cfg.n_rx, cfg.n_tx);
    }
    return env;
}

} // namespace isac
