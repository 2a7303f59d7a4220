#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dimafx/pipeline/commands.hpp"
#include "dimafx/pipeline/config.hpp"
#include "json.hpp"

using namespace dimafx;
using namespace dimafx::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("dimafx_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_json(const fs::path& path, const json& doc)
{
    std::ofstream(path) << doc.dump(1);
    return path;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_run(const fs::path& out)
{
    return {{"seed", 3},
            {"out", out.string()},
            {"simulate", {{"n", 60}, {"sites", 6}, {"patch_dim", 8}, {"genes", 40}, {"pathways", 6}}},
            {"prototype", {{"components", 4}, {"kmeans_patches", 2000}, {"kmeans_iters", 20}, {"em_iters", 10}}},
            {"model", {{"d", 8}, {"d_z", 8}, {"hidden", 8}, {"pathway_token_width", 2}}},
            {"train", {{"epochs", 2}, {"batch_size", 16}}},
            {"evaluate", {{"folds", 3}}},
            {"explain", {{"samples", 2}, {"permutations", 4}}}};
}

} // namespace

TEST(Config, EmptyFileGivesDefaults)
{
    const auto dir = scratch("defaults");
    const json c = resolve_config(write_json(dir / "c.json", json::object()), {});
    EXPECT_EQ(c, default_config());
    const auto e = experiment_config(c);
    EXPECT_EQ(e.folds, 5u);
    EXPECT_EQ(e.train.epochs, 30);
    EXPECT_EQ(e.train.batch_size, 64);
    EXPECT_EQ(e.train.weights.dis, 7.0);
    EXPECT_EQ(e.prototypes.components, 16);
    EXPECT_EQ(e.tau, 120.0);
    EXPECT_EQ(manifest_path(c), fs::path("out") / "cohort" / "manifest.json");
}

TEST(Config, FileAndOverridesMerge)
{
    const auto dir = scratch("merge");
    const auto file = write_json(dir / "c.json", {{"train", {{"epochs", 3}}}, {"simulate", {{"site_shift", 0.5}}}});
    const json c = resolve_config(file, {"train.lambda_dis=0", "out=\"elsewhere\"", "seed=11",
                                         "simulate.preset=default"});
    EXPECT_EQ(c["train"]["epochs"], 3);
    EXPECT_EQ(c["train"]["lambda_dis"], 0);
    EXPECT_EQ(output_dir(c), fs::path("elsewhere"));
    EXPECT_EQ(run_seed(c), 11u);
    EXPECT_EQ(c["simulate"]["preset"], "default");
    EXPECT_EQ(experiment_config(c).train.weights.dis, 0.0);
    EXPECT_EQ(synthetic_config(c).site_shift, 0.5);
}

TEST(Config, ErrorsAreConfigErrors)
{
    const auto dir = scratch("errors");
    const auto ok = write_json(dir / "ok.json", json::object());
    EXPECT_THROW(resolve_config(dir / "missing.json", {}), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(resolve_config(dir / "bad.json", {}), ConfigError);
    EXPECT_THROW(resolve_config(write_json(dir / "u.json", {{"train", {{"epoch", 3}}}}), {}), ConfigError);
    EXPECT_THROW(resolve_config(write_json(dir / "t.json", {{"train", {{"epochs", "many"}}}}), {}), ConfigError);
    EXPECT_THROW(resolve_config(ok, {"train.epochs"}), ConfigError);
    EXPECT_THROW(resolve_config(ok, {"nope.key=1"}), ConfigError);
    EXPECT_THROW(resolve_config(ok, {"train.epochs=1.5"}), ConfigError);
    EXPECT_THROW(experiment_config(resolve_config(ok, {"train.epochs=-2"})), ConfigError);
    EXPECT_THROW(experiment_config(resolve_config(ok, {"model.d_z=63", "model.heads=2"})), ConfigError);
    EXPECT_THROW(synthetic_config(resolve_config(ok, {"simulate.preset=weak"})), ConfigError);
    EXPECT_THROW(synthetic_config(resolve_config(ok, {"simulate.censor_rate=1.5"})), ConfigError);
}

TEST(Config, SeedsDifferPerStageAndFold)
{
    EXPECT_NE(split_seed(7), split_seed(8));
    EXPECT_NE(prototype_seed(7, 0), prototype_seed(7, 1));
    EXPECT_NE(prototype_seed(7, 0), train_seed(7, 0));
    EXPECT_EQ(train_seed(7, 2), train_seed(7, 2));
}

#ifdef DIMAFX_CLI
namespace {

struct CliResult {
    int code;
    std::string stderr_text;
};

CliResult run_cli(const std::string& args, const fs::path& dir)
{
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(DIMAFX_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

void expect_error_line(const CliResult& r, int code, const std::string& kind)
{
    EXPECT_EQ(r.code, code);
    ASSERT_EQ(std::count(r.stderr_text.begin(), r.stderr_text.end(), '\n'), 1) << r.stderr_text;
    const json line = json::parse(r.stderr_text);
    EXPECT_EQ(line["error"], kind);
    EXPECT_EQ(line["exit_code"], code);
    EXPECT_TRUE(line["message"].is_string());
}

} // namespace

TEST(Cli, ExitCodes)
{
    const auto dir = scratch("cli");
    const auto cfg = write_json(dir / "c.json", small_run(dir / "out"));
    const std::string c = "--config " + cfg.string();

    expect_error_line(run_cli("train " + c, dir), 3, "data"); // nothing simulated yet
    expect_error_line(run_cli("simulate", dir), 2, "config");
    expect_error_line(run_cli("simulate " + c + " --set train.epochz=1", dir), 2, "config");
    expect_error_line(run_cli("simulate " + c + " --set model.d=\\\"wide\\\"", dir), 2, "config");
    expect_error_line(run_cli("simulate --config " + (dir / "none.json").string(), dir), 2, "config");
    expect_error_line(run_cli("simulate " + c + " --seed -4", dir), 2, "config");

    EXPECT_EQ(run_cli("simulate " + c, dir).code, 0);
    EXPECT_NE(slurp(dir / "stdout.txt").find("n=60"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "out" / "cohort" / "manifest.json"));
    EXPECT_EQ(run_cli("simulate " + c + " --out " + (dir / "other").string() + " --seed 5", dir).code, 0);
    EXPECT_TRUE(fs::exists(dir / "other" / "cohort" / "manifest.json"));

    expect_error_line(run_cli("train " + c + " --set train.learning_rate=1e8 --set train.epochs=5", dir), 4,
                      "numerical");
}
#endif

TEST(EndToEnd, DeterministicAndConsistent)
{
    const auto dir = scratch("e2e");
    const fs::path out = dir / "out";
    const json config = resolve_config(write_json(dir / "c.json", small_run(out)), {});

    auto run_all = [&] {
        std::ostringstream log;
        cmd_simulate(config, log);
        cmd_prototype(config, log);
        cmd_train(config, log);
        cmd_stratify(config, log);
        cmd_explain(config, log);
        return log.str();
    };
    const std::string log1 = run_all();
    fs::rename(out, dir / "first");
    const std::string log2 = run_all();
    EXPECT_EQ(log1, log2);

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "first")) {
        if (!entry.is_regular_file())
            continue;
        const fs::path rel = fs::relative(entry.path(), dir / "first");
        ASSERT_TRUE(fs::exists(out / rel)) << rel;
        EXPECT_EQ(slurp(entry.path()), slurp(out / rel)) << rel;
        ++compared;
    }
    EXPECT_GT(compared, 60u);

    // Stratification recomputes the same test-fold risks from the checkpoints.
    std::map<std::string, std::string> predicted;
    for (int k = 0; k < 3; ++k) {
        std::ifstream in(out / "train" / ("fold_" + std::to_string(k)) / "test_predictions.csv");
        std::string line;
        std::getline(in, line);
        EXPECT_EQ(line, "sample_id,site_id,time,event,risk");
        while (std::getline(in, line))
            predicted[line.substr(0, line.find(','))] = line.substr(line.rfind(',') + 1);
    }
    std::ifstream risks(out / "stratify" / "risks.csv");
    std::string header, line;
    std::getline(risks, header);
    const std::size_t risk_col = [&] {
        std::size_t col = 0;
        std::stringstream ss(header);
        for (std::string h; std::getline(ss, h, ','); ++col)
            if (h == "risk")
                return col;
        return std::string::npos;
    }();
    ASSERT_NE(risk_col, std::string::npos) << header;
    std::size_t rows = 0;
    while (std::getline(risks, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            cells.push_back(cell);
        ASSERT_TRUE(predicted.count(cells[0])) << cells[0];
        EXPECT_EQ(cells[risk_col], predicted[cells[0]]) << cells[0];
        ++rows;
    }
    EXPECT_EQ(rows, predicted.size());
    EXPECT_EQ(rows, 60u);

    const json results = json::parse(slurp(out / "train" / "results.json"));
    EXPECT_EQ(results["folds"].size(), 3u);
    EXPECT_EQ(results["version"], kVersion);
    const json strat = json::parse(slurp(out / "stratify" / "stratification.json"));
    EXPECT_EQ(strat["n_high"].get<int>() + strat["n_low"].get<int>(), 60);
}
