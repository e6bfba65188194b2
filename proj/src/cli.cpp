#include "acpsbc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "acpsbc/scenario_io.hpp"
#include "acpsbc/svg.hpp"
#include "acpsbc/trajectory_io.hpp"

namespace acpsbc {

namespace fs = std::filesystem;

namespace {

Scenario load_configured(const RunConfig& config) {
    Scenario sc = load_scenario(config.scenario_path);
    if (config.seed) sc.seed = *config.seed;
    if (config.method == "acp_sbc")
        sc.baseline = false;
    else if (config.method == "cbf_baseline")
        sc.baseline = true;
    else
        throw ConfigError("method: expected acp_sbc | cbf_baseline");
    sc.validate();
    return sc;
}

void write_run_artifacts(const Scenario& sc, const TrajectoryLog& log, const Metrics& metrics,
                         const fs::path& dir, bool plots) {
    fs::create_directories(dir);
    write_trajectory_csv(log, (dir / "trajectory.csv").string());
    write_metrics_json(metrics, (dir / "metrics.json").string());
    write_run_sidecar(log, (dir / "run.json").string());
    if (plots) {
        write_trajectory_svg(log, sc, (dir / "trajectory.svg").string());
        write_min_distance_svg(min_distance_series(log), sc.model.dt,
                               (dir / "min_distance.svg").string());
    }
}

int guarded(const std::string& what, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << what << ": configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << what << ": " << e.what() << "\n";
        return kExitSolver;
    }
}

std::string trim_number(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name) {
    if (name == "H" || name == "horizon") return SweepParameter::horizon;
    if (name == "gamma") return SweepParameter::gamma;
    if (name == "alpha") return SweepParameter::alpha;
    return std::nullopt;
}

int cmd_run(const RunConfig& config) {
    return guarded("run", [&]() {
        const Scenario sc = load_configured(config);
        const TrajectoryLog log = run(sc);
        const Metrics metrics = compute_metrics(log, sc);
        write_run_artifacts(sc, log, metrics, config.out_dir, config.plots);
        return kExitOk;
    });
}

int cmd_sweep(const RunConfig& config, SweepParameter parameter, const std::vector<double>& values) {
    return guarded("sweep", [&]() {
        if (values.empty()) throw ConfigError("sweep values: must be non-empty");
        const Scenario base = load_configured(config);
        fs::create_directories(config.out_dir);

        const char* pname = parameter == SweepParameter::horizon  ? "H"
                            : parameter == SweepParameter::gamma ? "gamma"
                                                                 : "alpha";
        std::ofstream sweep_csv(fs::path(config.out_dir) / "sweep.csv", std::ios::binary);
        sweep_csv << "parameter,value,min_clearance,coverage_lag1,goal_reach_step\n";

        std::vector<std::pair<std::string, std::vector<double>>> overlay;
        for (const double value : values) {
            Scenario sc = base;
            switch (parameter) {
                case SweepParameter::horizon:
                    sc.mpc.horizon = static_cast<int>(std::lround(value));
                    break;
                case SweepParameter::gamma:
                    sc.gamma = value;
                    break;
                case SweepParameter::alpha:
                    sc.acp.alpha = value;
                    break;
            }
            sc.validate();
            const TrajectoryLog log = run(sc);
            const Metrics metrics = compute_metrics(log, sc);
            const fs::path dir = fs::path(config.out_dir) / (std::string(pname) + "_" + trim_number(value));
            write_run_artifacts(sc, log, metrics, dir, config.plots);

            const MinDistanceSeries series = min_distance_series(log);
            const std::vector<double>& ro =
                series.robot_obstacle.empty() ? series.robot_robot : series.robot_obstacle;
            overlay.emplace_back(std::string(pname) + "=" + trim_number(value), ro);

            const double clearance = series.robot_obstacle.empty()
                                         ? metrics.min_clearance_rr
                                         : metrics.min_clearance_ro;
            sweep_csv << pname << "," << format_double(value) << "," << format_double(clearance) << ",";
            if (!metrics.coverage_per_lag.empty() && metrics.coverage_per_lag[0])
                sweep_csv << format_double(*metrics.coverage_per_lag[0]);
            sweep_csv << ",";
            if (metrics.goal_reach_step) sweep_csv << *metrics.goal_reach_step;
            sweep_csv << "\n";
        }
        if (config.plots)
            write_series_overlay_svg(overlay, base.model.dt,
                                     (fs::path(config.out_dir) / "sweep_overlay.svg").string());
        return kExitOk;
    });
}

int cmd_compare(const RunConfig& config) {
    return guarded("compare", [&]() {
        const Scenario base = load_configured(config);
        fs::create_directories(config.out_dir);
        std::ofstream table(fs::path(config.out_dir) / "compare.csv", std::ios::binary);
        table << "method,noise,min_h,collided\n";

        const NoiseSpec gaussian = NoiseSpec::gaussian({1.0, 1.0}, base.noise.scale);
        const NoiseSpec uniform = NoiseSpec::uniform({-1.0, -1.0}, {1.0, 1.0}, base.noise.scale);
        const NoiseSpec mixture = NoiseSpec::mixture(
            {NoiseSpec::gaussian({1.0, 1.0}), NoiseSpec::uniform({-1.0, -1.0}, {1.0, 1.0})},
            base.noise.scale);
        const std::pair<const char*, NoiseSpec> noises[] = {
            {"gaussian", gaussian}, {"uniform", uniform}, {"mixture", mixture}};

        for (const bool baseline : {false, true}) {
            for (const auto& [noise_name, noise] : noises) {
                Scenario sc = base;
                sc.baseline = baseline;
                sc.noise = noise;
                const char* method = baseline ? "cbf_baseline" : "acp_sbc";
                const TrajectoryLog log = run(sc);
                const Metrics metrics = compute_metrics(log, sc);
                write_run_artifacts(sc, log, metrics,
                                    fs::path(config.out_dir) / (std::string(method) + "_" + noise_name),
                                    config.plots);
                table << method << "," << noise_name << "," << format_double(metrics.min_h) << ","
                      << (metrics.collided ? 1 : 0) << "\n";
            }
        }
        return kExitOk;
    });
}

int cmd_batch(const RunConfig& config, int n_seeds) {
    return guarded("batch", [&]() {
        if (n_seeds < 1) throw ConfigError("batch n_seeds: must be >= 1");
        const Scenario base = load_configured(config);
        fs::create_directories(config.out_dir);

        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
        for (int s = 0; s < n_seeds; ++s) seeds[static_cast<std::size_t>(s)] = static_cast<std::uint64_t>(s + 1);
        const std::vector<Metrics> all = batch_run(base, seeds);

        double min_h = std::numeric_limits<double>::infinity();
        std::optional<int> worst_goal_step;
        bool all_reached = true;
        bool any_collided = false;
        for (std::size_t s = 0; s < all.size(); ++s) {
            const fs::path dir = fs::path(config.out_dir) / ("seed_" + std::to_string(seeds[s]));
            fs::create_directories(dir);
            write_metrics_json(all[s], (dir / "metrics.json").string());
            min_h = std::min(min_h, all[s].min_h);
            any_collided = any_collided || all[s].collided;
            if (all[s].goal_reach_step) {
                if (!worst_goal_step || *all[s].goal_reach_step > *worst_goal_step)
                    worst_goal_step = all[s].goal_reach_step;
            } else {
                all_reached = false;
            }
        }
        nlohmann::ordered_json agg;
        agg["n_seeds"] = n_seeds;
        if (std::isfinite(min_h))
            agg["min_h"] = min_h;
        else
            agg["min_h"] = nullptr;
        agg["any_collided"] = any_collided;
        agg["all_reached"] = all_reached;
        if (worst_goal_step)
            agg["worst_goal_reach_step"] = *worst_goal_step;
        else
            agg["worst_goal_reach_step"] = nullptr;
        std::ofstream out(fs::path(config.out_dir) / "aggregate.json", std::ios::binary);
        out << agg.dump(2) << "\n";
        return kExitOk;
    });
}

}  // namespace acpsbc
