#include "acpsbc/trajectory_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace acpsbc {

namespace {

constexpr const char* kHeader = "k,type,id_a,id_b,tau,h,b_hat,quantile,alpha,breached,min_rr,min_ro,slack,status";

std::string opt_num(const std::optional<double>& v) {
    if (!v || std::isnan(*v)) return "";
    return format_double(*v);
}

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

std::optional<double> parse_opt_num(const std::string& field, const std::string& context) {
    if (field.empty()) return std::nullopt;
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw ConfigError("trajectory csv: bad number in " + context);
    return v;
}

std::optional<int> parse_opt_int(const std::string& field, const std::string& context) {
    if (field.empty()) return std::nullopt;
    std::size_t used = 0;
    const int v = std::stoi(field, &used);
    if (used != field.size()) throw ConfigError("trajectory csv: bad integer in " + context);
    return v;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::vector<TrajectoryRow> trajectory_rows(const TrajectoryLog& log) {
    std::vector<TrajectoryRow> rows;
    for (const StepRecord& rec : log.steps) {
        for (std::size_t p = 0; p < rec.pairs.size(); ++p) {
            TrajectoryRow row;
            row.k = rec.k;
            row.type = log.pair_list[p].kind == PairKind::robot_robot ? "rr" : "ro";
            row.id_a = log.pair_list[p].i;
            row.id_b = log.pair_list[p].j;
            row.h = rec.pairs[p].h;
            if (!std::isnan(rec.pairs[p].b_hat)) row.b_hat = rec.pairs[p].b_hat;
            rows.push_back(row);
        }
        for (const LagRecord& lag : rec.lags) {
            TrajectoryRow row;
            row.k = rec.k;
            row.type = "lag";
            row.id_a = lag.group;
            row.tau = lag.tau;
            row.b_hat = lag.score;  // score column, see schema note
            row.quantile = lag.quantile;
            row.alpha = lag.alpha;
            row.breached = lag.breached ? 1 : 0;
            rows.push_back(row);
        }
        TrajectoryRow step;
        step.k = rec.k;
        step.type = "step";
        if (!std::isnan(rec.min_rr)) step.min_rr = rec.min_rr;
        if (!std::isnan(rec.min_ro)) step.min_ro = rec.min_ro;
        step.slack = rec.max_slack;
        step.status = rec.braked ? "brake" : to_string(rec.status);
        rows.push_back(step);
    }
    return rows;
}

std::string serialize_trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = kHeader;
    out.push_back('\n');
    for (const TrajectoryRow& r : rows) {
        out += std::to_string(r.k);
        out.push_back(',');
        out += r.type;
        out.push_back(',');
        out += opt_int(r.id_a);
        out.push_back(',');
        out += opt_int(r.id_b);
        out.push_back(',');
        out += opt_int(r.tau);
        out.push_back(',');
        out += opt_num(r.h);
        out.push_back(',');
        out += opt_num(r.b_hat);
        out.push_back(',');
        out += opt_num(r.quantile);
        out.push_back(',');
        out += opt_num(r.alpha);
        out.push_back(',');
        out += opt_int(r.breached);
        out.push_back(',');
        out += opt_num(r.min_rr);
        out.push_back(',');
        out += opt_num(r.min_ro);
        out.push_back(',');
        out += opt_num(r.slack);
        out.push_back(',');
        out += r.status.value_or("");
        out.push_back('\n');
    }
    return out;
}

std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text) {
    std::vector<TrajectoryRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw ConfigError("trajectory csv: missing or unexpected header");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        const std::string context = "line " + std::to_string(line_no);
        if (fields.size() != 14) throw ConfigError("trajectory csv: wrong column count at " + context);
        TrajectoryRow row;
        const auto k = parse_opt_int(fields[0], context);
        if (!k) throw ConfigError("trajectory csv: missing step index at " + context);
        row.k = *k;
        row.type = fields[1];
        if (row.type != "rr" && row.type != "ro" && row.type != "lag" && row.type != "step")
            throw ConfigError("trajectory csv: unknown row type at " + context);
        row.id_a = parse_opt_int(fields[2], context);
        row.id_b = parse_opt_int(fields[3], context);
        row.tau = parse_opt_int(fields[4], context);
        row.h = parse_opt_num(fields[5], context);
        row.b_hat = parse_opt_num(fields[6], context);
        row.quantile = parse_opt_num(fields[7], context);
        row.alpha = parse_opt_num(fields[8], context);
        row.breached = parse_opt_int(fields[9], context);
        row.min_rr = parse_opt_num(fields[10], context);
        row.min_ro = parse_opt_num(fields[11], context);
        row.slack = parse_opt_num(fields[12], context);
        if (!fields[13].empty()) row.status = fields[13];
        rows.push_back(row);
    }
    return rows;
}

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trajectory csv: " + path);
    out << serialize_trajectory_csv(trajectory_rows(log));
}

std::string metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    if (std::isfinite(m.min_h))
        j["min_h"] = m.min_h;
    else
        j["min_h"] = nullptr;  // no pairs
    j["collided"] = m.collided;
    if (m.goal_reach_step)
        j["goal_reach_step"] = *m.goal_reach_step;
    else
        j["goal_reach_step"] = nullptr;
    nlohmann::ordered_json cov = nlohmann::ordered_json::array();
    for (const auto& c : m.coverage_per_lag) {
        if (c)
            cov.push_back(*c);
        else
            cov.push_back(nullptr);
    }
    j["coverage_per_lag"] = cov;
    j["mean_solve_ms"] = m.mean_solve_ms;
    if (!std::isnan(m.min_clearance_rr)) j["min_clearance_rr"] = m.min_clearance_rr;
    if (!std::isnan(m.min_clearance_ro)) j["min_clearance_ro"] = m.min_clearance_ro;
    j["steps"] = m.steps_run;
    return j.dump(2) + "\n";
}

void write_metrics_json(const Metrics& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write metrics json: " + path);
    out << metrics_to_json(metrics);
}

void write_run_sidecar(const TrajectoryLog& log, const std::string& path) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(log.config_hash));
    nlohmann::ordered_json j;
    j["scenario"] = log.scenario_name;
    j["seed"] = log.seed;
    j["config_hash"] = hash;
    j["version"] = "0.1.0";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write run sidecar: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace acpsbc
