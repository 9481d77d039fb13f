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

// JSON form of SystemConfig. Powers are written in dBm and radar gains in dB,
// the way the evaluation setup states them. Missing keys keep their
// default_config() value; unknown keys are rejected.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/scenario.hpp"

namespace isac {

inline nlohmann::json config_to_json(const SystemConfig& cfg) {
    nlohmann::json j;
    j["n_tx"] = cfg.n_tx;
    j["n_rx"] = cfg.n_rx;
    j["n_cue"] = cfg.n_cue;
    j["n_d2d"] = cfg.n_d2d;
    j["n_clutter"] = cfg.n_clutter;
    j["bs_power_budget_dbm"] = to_db(cfg.bs_power_budget);
    j["d2d_power_budget_dbm"] = to_db(cfg.d2d_power_budget);
    j["comm_noise_dbm"] = to_db(cfg.comm_noise);
    j["radar_noise_dbm"] = to_db(cfg.radar_noise);
    j["target_angle_rad"] = cfg.target_angle;
    j["clutter_angles_rad"] = cfg.clutter_angles;
    j["target_gain_over_noise_db"] = cfg.target_gain_over_noise;
    j["clutter_gain_over_noise_db"] = cfg.clutter_gain_over_noise;
    j["scnr_threshold_db"] = cfg.scnr_threshold;
    j["pathloss_exponent"] = cfg.pathloss_exponent;
    j["bs_ue_distance_m"] = cfg.bs_ue_distance;
    j["d2d_pair_distance_m"] = cfg.d2d_pair_distance;
    j["max_iterations"] = cfg.max_iterations;
    j["convergence_tol"] = cfg.convergence_tol;
    j["rng_seed"] = cfg.rng_seed;
    j["fixed_d2d_power_fraction"] = cfg.fixed_d2d_power_fraction;
    return j;
}

inline SystemConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    static const std::set<std::string> known = {
        "n_tx", "n_rx", "n_cue", "n_d2d", "n_clutter", "bs_power_budget_dbm", "d2d_power_budget_dbm",
        "comm_noise_dbm", "radar_noise_dbm", "target_angle_rad", "clutter_angles_rad",
        "target_gain_over_noise_db", "clutter_gain_over_noise_db", "scnr_threshold_db", "pathloss_exponent",
        "bs_ue_distance_m", "d2d_pair_distance_m", "max_iterations", "convergence_tol", "rng_seed",
        "fixed_d2d_power_fraction"};
    for (const auto& item : j.items())
        if (!known.count(item.key())) throw ConfigError("config: unknown key '" + item.key() + "'");

    SystemConfig cfg = default_config();
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        auto get_dbm = [&](const char* key, double& field) {
            if (j.contains(key)) field = from_decibels(j.at(key).get<double>(), DecibelKind::DBm);
        };
        get("n_tx", cfg.n_tx);
        get("n_rx", cfg.n_rx);
        get("n_cue", cfg.n_cue);
        get("n_d2d", cfg.n_d2d);
        get("n_clutter", cfg.n_clutter);
        get_dbm("bs_power_budget_dbm", cfg.bs_power_budget);
        get_dbm("d2d_power_budget_dbm", cfg.d2d_power_budget);
        get_dbm("comm_noise_dbm", cfg.comm_noise);
        get_dbm("radar_noise_dbm", cfg.radar_noise);
        get("target_angle_rad", cfg.target_angle);
        get("clutter_angles_rad", cfg.clutter_angles);
        get("target_gain_over_noise_db", cfg.target_gain_over_noise);
        get("clutter_gain_over_noise_db", cfg.clutter_gain_over_noise);
        get("scnr_threshold_db", cfg.scnr_threshold);
        get("pathloss_exponent", cfg.pathloss_exponent);
        get("bs_ue_distance_m", cfg.bs_ue_distance);
        get("d2d_pair_distance_m", cfg.d2d_pair_distance);
        get("max_iterations", cfg.max_iterations);
        get("convergence_tol", cfg.convergence_tol);
        get("rng_seed", cfg.rng_seed);
        get("fixed_d2d_power_fraction", cfg.fixed_d2d_power_fraction);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline SystemConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

inline SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace isac
