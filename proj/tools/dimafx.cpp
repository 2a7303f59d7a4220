// Command-line front end: dimafx <simulate|prototype|train|stratify|explain> --config PATH [...]

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dimafx/error.hpp"
#include "dimafx/pipeline/commands.hpp"
#include "dimafx/pipeline/config.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

int fail(int code, const char* kind, const std::string& message)
{
    // One JSON object on one line.
    std::cerr << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Disentangled multimodal survival modelling on synthetic cohorts"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    long long seed = -1;
    std::string out;

    const std::vector<std::string> names{"simulate", "prototype", "train", "stratify", "explain"};
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "overrides the configured seed");
        sub->add_option("--out", out, "overrides the configured output directory");
        sub->add_option("--set", overrides, "KEY=VALUE override, repeatable")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfig, "config", e.what());
    }

    try {
        if (seed < -1)
            throw dimafx::ConfigError("--seed must be non-negative");
        if (seed >= 0)
            overrides.push_back("seed=" + std::to_string(seed));
        if (!out.empty())
            overrides.push_back("out=" + nlohmann::json(out).dump());
        const nlohmann::json config = dimafx::pipeline::resolve_config(config_path, overrides);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate")
            dimafx::pipeline::cmd_simulate(config, std::cout);
        else if (cmd == "prototype")
            dimafx::pipeline::cmd_prototype(config, std::cout);
        else if (cmd == "train")
            dimafx::pipeline::cmd_train(config, std::cout);
        else if (cmd == "stratify")
            dimafx::pipeline::cmd_stratify(config, std::cout);
        else
            dimafx::pipeline::cmd_explain(config, std::cout);
    } catch (const dimafx::ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(kConfig, "config", e.what());
    } catch (const dimafx::DataError& e) {
        return fail(kData, "data", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(kData, "data", e.what());
    } catch (const dimafx::NumericalError& e) {
        return fail(kNumerical, "numerical", e.what());
    }
    return kOk;
}
