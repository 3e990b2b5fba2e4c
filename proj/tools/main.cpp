#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "merge/errors.hpp"
#include "merge/harness.hpp"
#include "merge/io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace merge;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitNumeric = 5;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("MERGE_MADDPG_SEED")) return std::strtoull(env, nullptr, 10);
    return fallback;
}

// Uses the config echoed next to the checkpoints when available, so
// evaluation replays the exact training geometry.
ScenarioConfig scenario_for_checkpoint(const fs::path& checkpoint_dir,
                                       const std::optional<std::string>& config_path) {
    if (config_path) return harness::load_run_config(*config_path).scenario;
    for (const fs::path candidate :
         {checkpoint_dir / "config.json", checkpoint_dir.parent_path() / "config.json"}) {
        if (fs::exists(candidate)) return harness::load_run_config(candidate).scenario;
    }
    return ScenarioConfig{};
}

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& out_dir,
              const std::optional<std::string>& profile) {
    harness::RunConfig cfg = harness::load_run_config(config_path, profile);
    if (seed) cfg.seed = resolve_seed(seed, cfg.seed);
    if (out_dir) cfg.out_dir = *out_dir;
    if (cfg.out_dir.empty()) throw ConfigError("train: no output directory (config out_dir or --out)");
    const harness::TrainingRecord rec = harness::train(cfg);
    std::cout << "trained " << rec.episodes.size() << " episodes; best rolling average "
              << rec.best_rolling << " at episode " << rec.best_episode << "\n";
    std::cout << "artifacts in " << cfg.out_dir << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& scenario_name,
             const std::string& out_path, const std::optional<std::uint64_t>& seed,
             const std::optional<std::string>& config_path, int source_agent) {
    const harness::Scenario scenario = harness::scenario_from_name(scenario_name);
    const ScenarioConfig cfg = scenario_for_checkpoint(checkpoint, config_path);
    const std::vector<nn::Mlp> actors = harness::load_actors(checkpoint);
    const std::vector<nn::Mlp> policies =
        harness::fit_policies(actors, harness::scenario_vehicle_count(scenario), source_agent);
    const harness::EpisodeTrace trace =
        harness::evaluate_scenario(policies, scenario, cfg, resolve_seed(seed, 1));
    io::atomic_write(out_path, harness::trace_csv(trace));
    std::cout << "wrote " << out_path << " (" << trace.steps << " steps, cause "
              << to_string(trace.cause) << ")\n";
    return kExitOk;
}

int cmd_demo(const std::string& scenario_name, const std::string& out_path,
             const std::optional<std::uint64_t>& seed_flag) {
    // Smoke-test rollout with freshly initialized (untrained) policies.
    const harness::Scenario scenario = harness::scenario_from_name(scenario_name);
    const ScenarioConfig cfg;
    const std::uint64_t seed = resolve_seed(seed_flag, 1);
    maddpg::Hyperparameters hp;
    Rng rng(stream_seed(seed, 0));
    const std::vector<maddpg::Agent> agents =
        maddpg::make_agents(harness::scenario_vehicle_count(scenario), hp, rng);
    std::vector<nn::Mlp> policies;
    for (const maddpg::Agent& a : agents) policies.push_back(a.actor);
    const harness::EpisodeTrace trace = harness::evaluate_scenario(policies, scenario, cfg, seed);
    io::atomic_write(out_path, harness::trace_csv(trace));
    std::cout << "wrote " << out_path << " (" << trace.steps << " steps, cause "
              << to_string(trace.cause) << ")\n";
    return kExitOk;
}

int cmd_speed_range(const std::string& checkpoint, int runs, const std::string& out_path,
                    const std::optional<std::uint64_t>& seed,
                    const std::optional<std::string>& config_path, int source_agent) {
    const ScenarioConfig cfg = scenario_for_checkpoint(checkpoint, config_path);
    const std::vector<nn::Mlp> actors = harness::load_actors(checkpoint);
    if (source_agent < 0 || source_agent >= static_cast<int>(actors.size()))
        throw ConfigError("--source-agent out of range");
    Rng rng(stream_seed(resolve_seed(seed, 1), 11));
    const auto rows = harness::speed_range_experiment(actors[source_agent], cfg, runs, rng);
    io::atomic_write(out_path, harness::speed_range_csv(rows));
    std::cout << "wrote " << out_path << " (" << rows.size() << " rows over " << runs
              << " runs)\n";
    return kExitOk;
}

int cmd_plot_data(const std::string& trace_path, const std::string& kind,
                  const std::string& out_path) {
    io::atomic_write(out_path, harness::plot_data(trace_path, kind, ScenarioConfig{}));
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized multi-agent actor-critic training for highway on-ramp merging"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_flag, profile, config_flag;
    int source_agent = 0;

    auto* train = app.add_subcommand("train", "Train agents from a JSON run config");
    std::string train_config;
    train->add_option("--config", train_config, "Run config JSON")->required();
    train->add_option("--seed", seed, "Master seed (overrides config)");
    train->add_option("--out", out_flag, "Output directory (overrides config)");
    train->add_option("--profile", profile, "Training profile: paper | reference")
        ->check(CLI::IsMember({"paper", "reference"}));

    auto* eval = app.add_subcommand("eval", "Roll out a trained checkpoint on a scenario");
    std::string eval_checkpoint, eval_scenario, eval_out = "trace.csv";
    eval->add_option("--checkpoint", eval_checkpoint, "Run or best/ directory")->required();
    eval->add_option("--scenario", eval_scenario, "rear_end | lateral | eight_cav")->required();
    eval->add_option("--out", eval_out, "Trace CSV path");
    eval->add_option("--seed", seed, "Evaluation seed");
    eval->add_option("--config", config_flag, "Run config JSON (defaults to checkpoint config)");
    eval->add_option("--source-agent", source_agent, "Actor replicated when sizes differ");

    auto* demo = app.add_subcommand("demo", "Scenario rollout with untrained policies");
    std::string demo_scenario, demo_out = "trace.csv";
    demo->add_option("scenario", demo_scenario, "rear_end | lateral | eight_cav")->required();
    demo->add_option("--out", demo_out, "Trace CSV path");
    demo->add_option("--seed", seed, "Seed for policy init and scenario sampling");

    auto* experiment = app.add_subcommand("experiment", "Aggregated evaluation experiments");
    experiment->require_subcommand(1);
    auto* speed_range = experiment->add_subcommand("speed-range",
                                                   "Per-road speed envelope over several runs");
    std::string exp_checkpoint, exp_out = "speed_range.csv";
    int exp_runs = 5;
    speed_range->add_option("--checkpoint", exp_checkpoint, "Run or best/ directory")->required();
    speed_range->add_option("--runs", exp_runs, "Number of rollouts");
    speed_range->add_option("--out", exp_out, "Output CSV path");
    speed_range->add_option("--seed", seed, "Experiment seed");
    speed_range->add_option("--config", config_flag, "Run config JSON");
    speed_range->add_option("--source-agent", source_agent, "Actor used for all vehicles");

    auto* plot = app.add_subcommand("plot-data", "Reshape a trace CSV into a tidy plot table");
    std::string plot_trace, plot_kind, plot_out = "plot.csv";
    plot->add_option("--trace", plot_trace, "Trace CSV produced by eval/demo")->required();
    plot->add_option("--kind", plot_kind, "position | speed | speed-range")
        ->required()
        ->check(CLI::IsMember({"position", "speed", "speed-range"}));
    plot->add_option("--out", plot_out, "Output CSV path");

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(train_config, seed, out_flag, profile);
        if (*eval) return cmd_eval(eval_checkpoint, eval_scenario, eval_out, seed, config_flag,
                                   source_agent);
        if (*demo) return cmd_demo(demo_scenario, demo_out, seed);
        if (*speed_range) return cmd_speed_range(exp_checkpoint, exp_runs, exp_out, seed,
                                                 config_flag, source_agent);
        if (*plot) return cmd_plot_data(plot_trace, plot_kind, plot_out);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
