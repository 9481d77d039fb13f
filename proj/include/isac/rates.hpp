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
#include <numeric>
#include <vector>

#include "isac/channel.hpp"
#include "isac/errors.hpp"
#include "isac/linalg.hpp"
#include "isac/sensing.hpp"

namespace isac {

struct PowerAllocation {
    std::vector<double> d2d_powers; // mW

    static PowerAllocation uniform(int n_d2d, double p) { return {std::vector<double>(n_d2d, p)}; }
    int size() const { return static_cast<int>(d2d_powers.size()); }
};

struct RateReport {
    std::vector<double> cue_sinr;
    std::vector<double> d2d_sinr;
    std::vector<double> cue_rates; // bit/s/Hz
    std::vector<double> d2d_rates;
    double sum_rate = 0.0;

    double cue_sum() const { return std::accumulate(cue_rates.begin(), cue_rates.end(), 0.0); }
    double d2d_sum() const { return std::accumulate(d2d_rates.begin(), d2d_rates.end(), 0.0); }
};

namespace detail {

inline void check_rate_inputs(const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa) {
    if (cov.n_cue() != ch.n_cue()) throw DimensionError("rates: covariance has wrong number of CUE blocks");
    if (pa.size() != ch.n_d2d()) throw DimensionError("rates: power allocation has wrong length");
    if (ch.n_cue() > 0 && cov.n_tx() != ch.n_tx()) throw DimensionError("rates: covariance size != n_tx");
}

/// sum_d p_d |g_{d,k}|^2
inline double d2d_interference_at_cue(int k, const ChannelSet& ch, const PowerAllocation& pa) {
    double s = 0.0;
    for (int d = 0; d < pa.size(); ++d) s += pa.d2d_powers[d] * std::norm(ch.d2d_to_cue(d, k));
    return s;
}

} // namespace detail

/// Interference plus noise seen by CUE k: every other BS block, including
/// the radar block, plus D2D leakage and noise.
inline double cue_interference(int k, const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa,
                               double n_c) {
    const CVector& h = ch.bs_to_cue[k];
    double bs = 0.0;
    for (int b = 0; b < cov.n_blocks(); ++b)
        if (b != k + 1) bs += clamp_nonnegative(quad_form(h, cov.block(b)));
    return bs + detail::d2d_interference_at_cue(k, ch, pa) + n_c;
}

inline double sinr_cue(int k, const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa,
                       double n_c) {
    detail::check_rate_inputs(ch, cov, pa);
    if (k < 0 || k >= ch.n_cue()) throw DomainError("sinr_cue: index out of range");
    const double signal = clamp_nonnegative(quad_form(ch.bs_to_cue[k], cov.per_cue[k]));
    return signal / cue_interference(k, ch, cov, pa, n_c);
}

/// BS leakage into D2D receiver d: sum over all blocks of f_d^H W_b f_d.
inline double bs_interference_at_d2d(int d, const ChannelSet& ch, const TransmitCovariance& cov) {
    double s = 0.0;
    for (int b = 0; b < cov.n_blocks(); ++b) s += clamp_nonnegative(quad_form(ch.bs_to_d2drx[d], cov.block(b)));
    return s;
}

inline double d2d_interference(int d, const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa,
                               double n_c) {
    double s = 0.0;
    for (int dp = 0; dp < pa.size(); ++dp)
        if (dp != d) s += pa.d2d_powers[dp] * std::norm(ch.d2d_to_d2d(dp, d));
    return s + bs_interference_at_d2d(d, ch, cov) + n_c;
}

inline double sinr_d2d(int d, const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa,
                       double n_c) {
    detail::check_rate_inputs(ch, cov, pa);
    if (d < 0 || d >= ch.n_d2d()) throw DomainError("sinr_d2d: index out of range");
    const double signal = pa.d2d_powers[d] * std::norm(ch.d2d_to_d2d(d, d));
    return std::max(signal, 0.0) / d2d_interference(d, ch, cov, pa, n_c);
}

inline RateReport sum_rate(const ChannelSet& ch, const TransmitCovariance& cov, const PowerAllocation& pa, double n_c) {
    RateReport r;
    for (int k = 0; k < ch.n_cue(); ++k) {
        r.cue_sinr.push_back(sinr_cue(k, ch, cov, pa, n_c));
        r.cue_rates.push_back(std::log2(1.0 + r.cue_sinr.back()));
    }
    for (int d = 0; d < ch.n_d2d(); ++d) {
        r.d2d_sinr.push_back(sinr_d2d(d, ch, cov, pa, n_c));
        r.d2d_rates.push_back(std::log2(1.0 + r.d2d_sinr.back()));
    }
    r.sum_rate = r.cue_sum() + r.d2d_sum();
    return r;
}

} // namespace isac
