#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlpar/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal parabolic experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool strict = false;
    auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config and NLPAR_OUT_DIR)");
    run->add_flag("--strict", strict, "treat hypothesis audit failures as errors");

    auto* list = app.add_subcommand("list", "list registered experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (list->parsed()) {
        for (const auto& e : nlpar::registry()) std::printf("%-16s %s\n", e.id.c_str(), e.description.c_str());
        return 0;
    }

    nlpar::RunResult res;
    try {
        res = nlpar::run_experiment(nlpar::read_config(config_path), out_dir, strict);
    } catch (const nlpar::ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return 2;
    }
    (res.exit_code == 2 ? std::cerr : std::cout) << res.message << "\n";
    if (res.exit_code != 2) {
        for (const auto& c : res.manifest["checks"])
            std::cout << (c["pass"].get<bool>() ? "  ok   " : "  FAIL ") << c["name"].get<std::string>() << "\n";
    }
    return res.exit_code;
}
