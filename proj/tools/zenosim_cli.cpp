// Scenario runner: integrates the stochastic, master-equation and
// pulsed-measurement engines on configured models and emits CSV time
// series plus a JSON summary with fitted rates and assertion outcomes.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "zenosim/harness.hpp"

namespace {

void apply_overrides(zenosim::ScenarioConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& out_dir,
                     const std::optional<std::size_t>& traj) {
    // precedence: flag > config > default
    if (seed) cfg.master_seed = *seed;
    if (traj) cfg.n_traj = *traj;
    if (out_dir) {
        cfg.out_dir = *out_dir;
    } else if (cfg.out_dir == "." ) {
        if (const char* env = std::getenv("ZENOSIM_OUT_DIR")) cfg.out_dir = env;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zenosim: noise-induced superselection scenario runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> traj;

    auto* run = app.add_subcommand("run", "run a scenario described by a config file");
    run->add_option("config", config_path, "path to key = value config file")->required();
    run->add_option("--seed", seed, "override master_seed");
    run->add_option("--out-dir", out_dir, "override output directory");
    run->add_option("--traj", traj, "override trajectory count");

    auto* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("config", config_path, "path to key = value config file")->required();

    app.add_subcommand("list-scenarios", "print the available scenario names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-scenarios")) {
            for (const auto& name : zenosim::scenario_names()) std::cout << name << "\n";
            return 0;
        }
        zenosim::ScenarioConfig cfg = zenosim::parse_config_file(config_path);
        apply_overrides(cfg, seed, out_dir, traj);
        if (app.got_subcommand("validate")) {
            std::cout << cfg.echo().dump(2) << "\n";
            return 0;
        }
        zenosim::RunReport rep = zenosim::run_scenario(cfg);
        std::cout << "scenario: " << rep.scenario << "\n";
        std::cout << "resolved config: " << cfg.echo().dump() << "\n";
        for (const auto& [name, value] : rep.rates)
            std::printf("%s = %.17g\n", name.c_str(), value);
        for (const auto& a : rep.assertions)
            std::printf("[%s] %s  (value %.6g, bound %.6g)\n", a.pass ? "PASS" : "FAIL",
                        a.name.c_str(), a.value, a.bound);
        std::printf("timeseries: %s\nsummary: %s\n", rep.timeseries_path.c_str(),
                    rep.summary_path.c_str());
        std::printf("wall time: %.3f s\n", rep.wall_seconds);
        return rep.all_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
