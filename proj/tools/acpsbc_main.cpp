#include <CLI11.hpp>

#include <cstdlib>
#include <string>
#include <vector>

#include "acpsbc/cli.hpp"
#include "acpsbc/scenario_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Conformal safe-control toolkit: tightened CBF-MPC scenario runner"};
    app.require_subcommand(1);

    acpsbc::RunConfig config;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    std::string plots = "on";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", config.scenario_path, "Scenario JSON file")->required();
        cmd->add_option("--out", config.out_dir, "Output directory")->required();
        cmd->add_option("--seed", seed_flag, "Seed override")
            ->envname("ACPSBC_SEED")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--method", config.method, "acp_sbc | cbf_baseline")
            ->check(CLI::IsMember({"acp_sbc", "cbf_baseline"}));
        cmd->add_option("--plots", plots, "on | off")->check(CLI::IsMember({"on", "off"}));
    };

    CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario");
    add_common(run_cmd);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep with a shared seed");
    add_common(sweep_cmd);
    std::string parameter;
    std::vector<double> values;
    sweep_cmd->add_option("--parameter", parameter, "H | gamma | alpha")->required();
    sweep_cmd->add_option("--values", values, "Sweep values")->required()->delimiter(',');

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Method x noise-distribution comparison on one seed");
    add_common(compare_cmd);

    CLI::App* batch_cmd = app.add_subcommand("batch", "Repeated runs over seeds 1..N");
    add_common(batch_cmd);
    int n_seeds = 20;
    batch_cmd->add_option("--n-seeds", n_seeds, "Number of seeds");

    CLI11_PARSE(app, argc, argv);
    if (seed_set) config.seed = seed_flag;
    config.plots = plots == "on";

    if (app.got_subcommand(run_cmd)) return acpsbc::cmd_run(config);
    if (app.got_subcommand(sweep_cmd)) {
        const auto param = acpsbc::parse_sweep_parameter(parameter);
        if (!param) {
            std::fprintf(stderr, "sweep: parameter must be one of H | gamma | alpha\n");
            return acpsbc::kExitConfig;
        }
        return acpsbc::cmd_sweep(config, *param, values);
    }
    if (app.got_subcommand(compare_cmd)) return acpsbc::cmd_compare(config);
    if (app.got_subcommand(batch_cmd)) return acpsbc::cmd_batch(config, n_seeds);
    return acpsbc::kExitConfig;
}
