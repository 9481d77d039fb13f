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
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "isac/errors.hpp"
#include "isac/linalg.hpp"

namespace isac {

enum class DecibelKind { PowerRatio, DBm };

/// dB -> linear ratio, or dBm -> mW. Both are 10^(value/10).
inline double from_decibels(double value_db, DecibelKind kind = DecibelKind::PowerRatio) {
    (void)kind;
    if (!std::isfinite(value_db)) throw ConfigError("from_decibels: non-finite input");
    return std::pow(10.0, value_db / 10.0);
}

// ----- System configuration ---------------------------------------------

/// Cell, radar and algorithm parameters. Powers and noise are linear mW;
/// radar gains and the SCNR threshold stay in dB as configured.
struct SystemConfig {
    int n_tx = 8;
    int n_rx = 8;
    int n_cue = 3;
    int n_d2d = 2;
    int n_clutter = 2;

    double bs_power_budget = 1000.0; // mW
    double d2d_power_budget = 10.0;  // mW, per pair
    double comm_noise = 1e-7;        // mW
    double radar_noise = 1e-7;       // mW

    double target_angle = 0.0; // rad
    std::vector<double> clutter_angles{-kPi / 6.0, kPi / 6.0};
    double target_gain_over_noise = 20.0;                 // dB
    std::vector<double> clutter_gain_over_noise{80.0, 80.0}; // dB
    double scnr_threshold = 30.0;                          // dB

    double pathloss_exponent = 2.0;
    double bs_ue_distance = 100.0;   // m
    double d2d_pair_distance = 10.0; // m

    int max_iterations = 8;
    double convergence_tol = 1e-4;
    std::uint64_t rng_seed = 1;

    /// Fixed-D2D baseline transmits at this fraction of d2d_power_budget.
    double fixed_d2d_power_fraction = 1.0;

    double scnr_threshold_linear() const { return from_decibels(scnr_threshold); }

    /// Throws ConfigError on the first violated invariant.
    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("SystemConfig: " + m); };
        if (n_tx < 1) fail("n_tx must be >= 1");
        if (n_rx < 1) fail("n_rx must be >= 1");
        if (n_cue < 1) fail("n_cue must be >= 1");
        if (n_d2d < 0) fail("n_d2d must be >= 0");
        if (n_clutter < 0) fail("n_clutter must be >= 0");
        for (double v : {bs_power_budget, d2d_power_budget, comm_noise, radar_noise})
            if (!(std::isfinite(v) && v > 0.0)) fail("powers and noise variances must be finite and > 0");
        if (clutter_angles.size() != static_cast<std::size_t>(n_clutter))
            fail("clutter_angles must have n_clutter entries");
        if (clutter_gain_over_noise.size() != static_cast<std::size_t>(n_clutter))
            fail("clutter_gain_over_noise must have n_clutter entries");
        for (double v : clutter_angles)
            if (!std::isfinite(v) || std::abs(v) > kPi / 2 + 1e-12) fail("clutter angles must lie in [-pi/2, pi/2]");
        if (!std::isfinite(target_angle) || std::abs(target_angle) > kPi / 2 + 1e-12)
            fail("target_angle must lie in [-pi/2, pi/2]");
        for (double v : clutter_gain_over_noise)
            if (!std::isfinite(v)) fail("clutter gains must be finite");
        if (!std::isfinite(target_gain_over_noise)) fail("target gain must be finite");
        if (!std::isfinite(scnr_threshold)) fail("scnr_threshold must be finite");
        if (!(std::isfinite(pathloss_exponent) && pathloss_exponent >= 0.0)) fail("pathloss_exponent must be >= 0");
        if (!(bs_ue_distance > 0.0) || !(d2d_pair_distance > 0.0)) fail("distances must be > 0");
        if (max_iterations < 1) fail("max_iterations must be >= 1");
        if (!(convergence_tol > 0.0)) fail("convergence_tol must be > 0");
        if (!(fixed_d2d_power_fraction >= 0.0 && fixed_d2d_power_fraction <= 1.0))
            fail("fixed_d2d_power_fraction must lie in [0, 1]");
    }
};

/// The evaluation setup: 8x8 arrays, 3 CUEs, 2 D2D pairs, target at 0 with
/// clutter at -pi/6 and pi/6, 30 dBm BS budget, 10 dBm D2D budget, -70 dBm noise.
inline SystemConfig default_config() {
    SystemConfig cfg;
    cfg.bs_power_budget = from_decibels(30.0, DecibelKind::DBm);
    cfg.d2d_power_budget = from_decibels(10.0, DecibelKind::DBm);
    cfg.comm_noise = from_decibels(-70.0, DecibelKind::DBm);
    cfg.radar_noise = from_decibels(-70.0, DecibelKind::DBm);
    return cfg;
}

// ----- Random streams -----------------------------------------------------

/// Deterministic random stream keyed by (seed, label). Distinct labels give
/// statistically independent sequences, so consumers never perturb each other.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label)
        : seed_(seed), label_(std::move(label)), engine_(mix(seed, label_)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& label() const noexcept { return label_; }

    /// A fresh stream with the same seed and a nested label.
    RngStream substream(std::string_view child) const {
        return RngStream(seed_, label_ + "/" + std::string(child));
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    /// CN(0, 1): independent N(0, 1/2) real and imaginary parts.
    cplx complex_normal() {
        const double s = std::sqrt(0.5);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t mix(std::uint64_t seed, std::string_view label) {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return splitmix(splitmix(seed) ^ h);
    }

    std::uint64_t seed_;
    std::string label_;
    std::mt19937_64 engine_;
};

// ----- Geometry ------------------------------------------------------------

using Point = Eigen::Vector2d;

struct Geometry {
    Point bs_position = Point::Zero();
    std::vector<Point> cue_positions;
    std::vector<Point> d2d_tx_positions;
    std::vector<Point> d2d_rx_positions;

    friend bool operator==(const Geometry& a, const Geometry& b) {
        auto same = [](const std::vector<Point>& x, const std::vector<Point>& y) {
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i] != y[i]) return false;
            return true;
        };
        return a.bs_position == b.bs_position && same(a.cue_positions, b.cue_positions) &&
               same(a.d2d_tx_positions, b.d2d_tx_positions) && same(a.d2d_rx_positions, b.d2d_rx_positions);
    }
};

/// CUEs and D2D transmitters sit on the circle of radius bs_ue_distance at
/// uniform angles; each D2D receiver sits d2d_pair_distance from its
/// transmitter at a uniform angle.
inline Geometry sample_geometry(const SystemConfig& cfg, RngStream& rng) {
    cfg.validate();
    auto on_circle = [&](const Point& center, double radius) {
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        return Point(center.x() + radius * std::cos(phi), center.y() + radius * std::sin(phi));
    };
    Geometry geo;
    for (int k = 0; k < cfg.n_cue; ++k) geo.cue_positions.push_back(on_circle(geo.bs_position, cfg.bs_ue_distance));
    for (int d = 0; d < cfg.n_d2d; ++d) {
        const Point tx = on_circle(geo.bs_position, cfg.bs_ue_distance);
        geo.d2d_tx_positions.push_back(tx);
        geo.d2d_rx_positions.push_back(on_circle(tx, cfg.d2d_pair_distance));
    }
    return geo;
}

} // namespace isac
