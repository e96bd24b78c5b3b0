/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "mmwchan/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"mmWave channel simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir = "out";
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub, bool outputs) {
        sub->add_option("-c,--config", config_path, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("-s,--seed", seed, "override the master seed");
        if (outputs)
            sub->add_option("-o,--output-dir", output_dir, "directory for traces");
    };
    auto* run = app.add_subcommand("run", "simulate and write all traces");
    auto* sweep = app.add_subcommand("sweep-pathloss", "write the pathloss sweep only");
    auto* validate = app.add_subcommand("validate-config", "check a config and print its canonical form");
    add_common(run, true);
    add_common(sweep, true);
    add_common(validate, false);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        auto cfg = mmwchan::load_config(config_path);
        if (seed)
            cfg.seed = *seed;
        cfg.validate();
        if (validate->parsed())
        {
            std::cout << mmwchan::serialize_config(cfg);
            return 0;
        }
        const auto summary = run->parsed() ? mmwchan::run(cfg, output_dir) : mmwchan::run_sweep(cfg, output_dir);
        std::cerr << "mmwsim: " << summary.ticks << " ticks, config " << summary.config_hash << ", wrote";
        for (const auto& a : summary.artifacts)
            std::cerr << ' ' << a;
        std::cerr << " to " << output_dir << '\n';
        return 0;
    }
    catch (const mmwchan::ConfigError& e)
    {
        std::cerr << "mmwsim: config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "mmwsim: " << e.what() << '\n';
        return 3;
    }
}
