#include "acpsbc/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace acpsbc {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw ConfigError(path.empty() ? key + ": missing required field"
                                       : path + "." + key + ": missing required field");
    return obj.at(key);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

double num_field(const json& obj, const std::string& key, const std::string& path) {
    return as_number(require(obj, key, path), join(path, key));
}

double num_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return as_number(obj.at(key), join(path, key));
}

int int_field(const json& obj, const std::string& key, const std::string& path) {
    const json& j = require(obj, key, path);
    if (!j.is_number_integer()) throw ConfigError(join(path, key) + ": expected an integer");
    return j.get<int>();
}

int int_or(const json& obj, const std::string& key, const std::string& path, int fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_integer()) throw ConfigError(join(path, key) + ": expected an integer");
    return obj.at(key).get<int>();
}

bool bool_or(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) throw ConfigError(join(path, key) + ": expected a boolean");
    return obj.at(key).get<bool>();
}

std::string str_or(const json& obj, const std::string& key, const std::string& path,
                   const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) throw ConfigError(join(path, key) + ": expected a string");
    return obj.at(key).get<std::string>();
}

Eigen::Vector2d vec2_field(const json& obj, const std::string& key, const std::string& path) {
    const json& j = require(obj, key, path);
    const std::string full = join(path, key);
    if (!j.is_array() || j.size() != 2) throw ConfigError(full + ": expected [x, y]");
    return {as_number(j[0], full + "[0]"), as_number(j[1], full + "[1]")};
}

Eigen::Vector2d vec2_or(const json& obj, const std::string& key, const std::string& path,
                        const Eigen::Vector2d& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return vec2_field(obj, key, path);
}

NoiseSpec parse_noise(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    const std::string kind = str_or(j, "kind", path, "");
    NoiseSpec spec;
    spec.scale = vec2_or(j, "scale", path, {1.0, 1.0});
    if (kind == "gaussian") {
        spec.kind = NoiseSpec::Kind::gaussian;
        spec.sigma = vec2_field(j, "sigma", path);
    } else if (kind == "uniform") {
        spec.kind = NoiseSpec::Kind::uniform;
        spec.lo = vec2_field(j, "lo", path);
        spec.hi = vec2_field(j, "hi", path);
    } else if (kind == "mixture") {
        spec.kind = NoiseSpec::Kind::mixture;
        const json& comps = require(j, "components", path);
        const std::string full = join(path, "components");
        if (!comps.is_array() || comps.empty()) throw ConfigError(full + ": expected a non-empty array");
        for (std::size_t i = 0; i < comps.size(); ++i)
            spec.components.push_back(parse_noise(comps[i], full + "[" + std::to_string(i) + "]"));
    } else {
        throw ConfigError(join(path, "kind") + ": expected gaussian | uniform | mixture");
    }
    return spec;
}

ordered_json noise_to_json(const NoiseSpec& spec) {
    ordered_json j;
    switch (spec.kind) {
        case NoiseSpec::Kind::gaussian:
            j["kind"] = "gaussian";
            j["sigma"] = {spec.sigma[0], spec.sigma[1]};
            break;
        case NoiseSpec::Kind::uniform:
            j["kind"] = "uniform";
            j["lo"] = {spec.lo[0], spec.lo[1]};
            j["hi"] = {spec.hi[0], spec.hi[1]};
            break;
        case NoiseSpec::Kind::mixture: {
            j["kind"] = "mixture";
            ordered_json comps = ordered_json::array();
            for (const NoiseSpec& c : spec.components) comps.push_back(noise_to_json(c));
            j["components"] = comps;
            break;
        }
    }
    j["scale"] = {spec.scale[0], spec.scale[1]};
    return j;
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: invalid JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) throw ConfigError("scenario: top-level JSON object expected");

    Scenario sc;
    sc.name = str_or(doc, "name", "", "scenario");
    const std::string model = str_or(doc, "model", "", "single_integrator");
    if (model == "single_integrator")
        sc.model.kind = ModelKind::single_integrator;
    else if (model == "unicycle")
        sc.model.kind = ModelKind::unicycle;
    else
        throw ConfigError("model: expected single_integrator | unicycle");
    sc.model.dt = num_field(doc, "dt_s", "");
    sc.steps = int_field(doc, "steps", "");
    sc.seed = static_cast<std::uint64_t>(int_or(doc, "seed", "", 1));
    sc.workspace_half_extent = num_or(doc, "workspace_half_extent_m", "", 2.5);
    sc.goal_tolerance = num_or(doc, "goal_tolerance_m", "", 0.05);
    sc.gamma = num_field(doc, "gamma", "");
    sc.unicycle_offset = num_or(doc, "unicycle_offset_m", "", 0.05);
    sc.lipschitz_l = num_or(doc, "lipschitz_l", "", 0.0);

    const std::string mode = str_or(doc, "tighten_mode", "", "barrier");
    if (mode == "barrier")
        sc.tighten_mode = TightenMode::barrier;
    else if (mode == "state_lipschitz")
        sc.tighten_mode = TightenMode::state_lipschitz;
    else
        throw ConfigError("tighten_mode: expected barrier | state_lipschitz");

    const std::string method = str_or(doc, "method", "", "acp_sbc");
    if (method == "acp_sbc")
        sc.baseline = false;
    else if (method == "cbf_baseline")
        sc.baseline = true;
    else
        throw ConfigError("method: expected acp_sbc | cbf_baseline");

    const json& robots = require(doc, "robots", "");
    if (!robots.is_array() || robots.empty()) throw ConfigError("robots: expected a non-empty array");
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const std::string path = "robots[" + std::to_string(i) + "]";
        const json& r = robots[i];
        if (!r.is_object()) throw ConfigError(path + ": expected an object");
        RobotSpec spec;
        spec.start.position = vec2_field(r, "start_m", path);
        spec.goal = vec2_field(r, "goal_m", path);
        spec.start.radius = num_or(r, "radius_m", path, 0.0);
        if (r.contains("heading_rad")) spec.start.heading = num_field(r, "heading_rad", path);
        if (sc.model.kind == ModelKind::unicycle && !spec.start.heading)
            throw ConfigError(path + ".heading_rad: required for unicycle model");
        sc.robots.push_back(spec);
    }

    if (doc.contains("obstacles")) {
        const json& obstacles = doc.at("obstacles");
        if (!obstacles.is_array()) throw ConfigError("obstacles: expected an array");
        for (std::size_t o = 0; o < obstacles.size(); ++o) {
            const std::string path = "obstacles[" + std::to_string(o) + "]";
            ObstacleSpec spec;
            spec.center = vec2_field(obstacles[o], "center_m", path);
            spec.radius = num_field(obstacles[o], "radius_m", path);
            sc.obstacles.push_back(spec);
        }
    }

    sc.noise = parse_noise(require(doc, "noise", ""), "noise");

    const json& control = require(doc, "control", "");
    sc.mpc.u_min = vec2_field(control, "u_min", "control");
    sc.mpc.u_max = vec2_field(control, "u_max", "control");

    const json& mpc = require(doc, "mpc", "");
    sc.mpc.horizon = int_field(mpc, "horizon", "mpc");
    sc.mpc.q_weight = num_or(mpc, "q_weight", "mpc", 1.0);
    sc.mpc.r_weight = num_or(mpc, "r_weight", "mpc", 0.1);
    sc.mpc.p_weight = num_or(mpc, "p_weight", "mpc", 10.0);
    sc.mpc.slack_penalty = num_or(mpc, "slack_penalty", "mpc", 1e4);
    sc.mpc.eps_tol = num_or(mpc, "eps_tol", "mpc", 1e-8);
    sc.mpc.max_iter = int_or(mpc, "max_iter", "mpc", 4000);
    sc.mpc.sqp_max_iter = int_or(mpc, "sqp_max_iter", "mpc", 10);
    sc.mpc.sqp_step = num_or(mpc, "sqp_step", "mpc", 0.5);
    const std::string mpc_mode = str_or(mpc, "mode", "mpc", "centralized");
    if (mpc_mode == "centralized")
        sc.mpc.decoupled = false;
    else if (mpc_mode == "decoupled")
        sc.mpc.decoupled = true;
    else
        throw ConfigError("mpc.mode: expected centralized | decoupled");

    const json& acp = require(doc, "acp", "");
    sc.acp.alpha = num_field(acp, "alpha", "acp");
    sc.acp.delta = num_field(acp, "delta", "acp");
    sc.acp.e_init = num_or(acp, "e_init", "acp", 1.0);
    sc.acp.alpha_min = num_or(acp, "alpha_min", "acp", 0.001);
    sc.acp.alpha_max = num_or(acp, "alpha_max", "acp", 0.999);
    sc.acp.shared_set = bool_or(acp, "shared_set", "acp", false);
    sc.acp.per_pair = bool_or(acp, "per_pair", "acp", false);

    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
    ordered_json doc;
    doc["name"] = sc.name;
    doc["model"] = sc.model.kind == ModelKind::single_integrator ? "single_integrator" : "unicycle";
    doc["dt_s"] = sc.model.dt;
    doc["steps"] = sc.steps;
    doc["seed"] = sc.seed;
    doc["workspace_half_extent_m"] = sc.workspace_half_extent;
    doc["goal_tolerance_m"] = sc.goal_tolerance;
    doc["gamma"] = sc.gamma;
    doc["unicycle_offset_m"] = sc.unicycle_offset;
    doc["lipschitz_l"] = sc.lipschitz_l;
    doc["tighten_mode"] = sc.tighten_mode == TightenMode::barrier ? "barrier" : "state_lipschitz";
    doc["method"] = sc.baseline ? "cbf_baseline" : "acp_sbc";

    ordered_json robots = ordered_json::array();
    for (const RobotSpec& r : sc.robots) {
        ordered_json rj;
        rj["start_m"] = {r.start.position[0], r.start.position[1]};
        rj["goal_m"] = {r.goal[0], r.goal[1]};
        rj["radius_m"] = r.start.radius;
        if (r.start.heading) rj["heading_rad"] = *r.start.heading;
        robots.push_back(rj);
    }
    doc["robots"] = robots;

    ordered_json obstacles = ordered_json::array();
    for (const ObstacleSpec& o : sc.obstacles) {
        ordered_json oj;
        oj["center_m"] = {o.center[0], o.center[1]};
        oj["radius_m"] = o.radius;
        obstacles.push_back(oj);
    }
    doc["obstacles"] = obstacles;

    doc["noise"] = noise_to_json(sc.noise);
    doc["control"] = {{"u_min", {sc.mpc.u_min[0], sc.mpc.u_min[1]}},
                      {"u_max", {sc.mpc.u_max[0], sc.mpc.u_max[1]}}};

    ordered_json mpc;
    mpc["horizon"] = sc.mpc.horizon;
    mpc["q_weight"] = sc.mpc.q_weight;
    mpc["r_weight"] = sc.mpc.r_weight;
    mpc["p_weight"] = sc.mpc.p_weight;
    mpc["slack_penalty"] = sc.mpc.slack_penalty;
    mpc["eps_tol"] = sc.mpc.eps_tol;
    mpc["max_iter"] = sc.mpc.max_iter;
    mpc["sqp_max_iter"] = sc.mpc.sqp_max_iter;
    mpc["sqp_step"] = sc.mpc.sqp_step;
    mpc["mode"] = sc.mpc.decoupled ? "decoupled" : "centralized";
    doc["mpc"] = mpc;

    ordered_json acp;
    acp["alpha"] = sc.acp.alpha;
    acp["delta"] = sc.acp.delta;
    acp["e_init"] = sc.acp.e_init;
    acp["alpha_min"] = sc.acp.alpha_min;
    acp["alpha_max"] = sc.acp.alpha_max;
    acp["shared_set"] = sc.acp.shared_set;
    acp["per_pair"] = sc.acp.per_pair;
    doc["acp"] = acp;

    return doc.dump(2);
}

std::uint64_t config_hash(const Scenario& scenario) { return fnv1a64(scenario_to_json(scenario)); }

}  // namespace acpsbc
