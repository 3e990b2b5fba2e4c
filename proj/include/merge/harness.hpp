#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "merge/env.hpp"
#include "merge/maddpg.hpp"
#include "merge/nn.hpp"

namespace merge::harness {

inline constexpr int kRollingWindow = 100;

// Learning-rate profiles: "paper" keeps the original alpha = 0.3,
// "reference" uses 1e-3 which is stable for this architecture.
inline constexpr double kPaperLearningRate = 0.3;
inline constexpr double kReferenceLearningRate = 1e-3;

struct RunConfig {
    ScenarioConfig scenario;
    maddpg::Hyperparameters hp;
    int episodes = 15000;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string profile = "reference";
    std::vector<Road> train_roads;  // empty: first ceil(N/2) main, rest ramp

    std::vector<Road> resolved_roads() const;
    void validate() const;
};

// Sets profile learning rates; keys listed in `explicit_keys` are preserved.
void apply_profile(RunConfig& cfg, const std::string& profile,
                   const std::vector<std::string>& explicit_keys = {});

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::optional<std::string>& profile_override = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::string>& profile_override = {});

struct EpisodeStats {
    std::vector<double> agent_return;
    double network_return = 0.0;
    Cause cause = Cause::None;
    double sigma = 0.0;
    int steps = 0;
};

struct TrainingRecord {
    int n_agents = 0;
    std::vector<EpisodeStats> episodes;
    std::vector<double> rolling100;  // trailing mean of the network return
    std::vector<int> best_episodes;  // episodes that improved the best rolling average
    std::vector<double> best_values;
    double best_rolling = 0.0;
    int best_episode = -1;
    std::map<Cause, int> cause_counts;
};

// Full training loop: rollout with exploration noise, replay, periodic
// centralized-critic updates, Polyak target updates, best-checkpoint
// persistence. With an empty out_dir nothing is written to disk.
TrainingRecord train(const RunConfig& cfg);

// Trailing mean over the last min(elapsed, window) entries.
std::vector<double> rolling_average(std::span<const double> series, int window = kRollingWindow);

struct TraceRow {
    int episode = 0;
    double t = 0.0;
    int vehicle_id = 0;
    Road road = Road::Main;
    double p = 0.0;
    double v = 0.0;
    double u = 0.0;
    double d_merge = 0.0;
    RewardParts parts;
    double r_total = 0.0;
    Phase phase = Phase::InControlZone;
};

struct EpisodeTrace {
    std::vector<TraceRow> rows;
    Cause cause = Cause::None;
    int steps = 0;
    int n_vehicles = 0;
};

enum class Scenario { RearEnd, Lateral, EightCav };

Scenario scenario_from_name(std::string_view name);  // throws ConfigError
std::string to_string(Scenario s);

// Initial conditions of the demonstration scenarios. rear_end: two main-road
// vehicles, the follower faster. lateral: one vehicle per road at equal
// speeds. eight_cav: 8 vehicles at random positions, 13 m/s on the main road
// and 12 m/s on the ramp.
EpisodeInit build_scenario(Scenario s, const ScenarioConfig& cfg, Rng& rng);
int scenario_vehicle_count(Scenario s);

// Replicates one trained actor into n independent policy instances.
std::vector<nn::Mlp> transfer_policy(const nn::Mlp& actor, int n_target);

// Reads best/agent_<i>.json actors from a run directory (or from a directory
// that itself contains the agent files).
std::vector<nn::Mlp> load_actors(const std::filesystem::path& checkpoint_dir);

// Adapts a set of loaded actors to a scenario of n vehicles: exact-size sets
// are used as-is, otherwise `source` is replicated.
std::vector<nn::Mlp> fit_policies(const std::vector<nn::Mlp>& actors, int n, int source = 0);

// Deterministic noise-free rollout; never mutates the policies.
EpisodeTrace evaluate(std::span<const nn::Mlp> actors, const ScenarioConfig& cfg,
                      const EpisodeInit& init, Rng& rng, int episode_index = 0);
EpisodeTrace evaluate_scenario(std::span<const nn::Mlp> actors, Scenario s,
                               const ScenarioConfig& base_cfg, std::uint64_t seed);

struct SpeedRangeRow {
    double t = 0.0;
    Road road = Road::Main;
    double v_min = 0.0;
    double v_avg = 0.0;
    double v_max = 0.0;
    int count = 0;  // vehicle-samples aggregated into this row
};

// Independent eight-vehicle rollouts with initial speeds U[6, 13] m/s;
// aggregates instantaneous per-road speed statistics over vehicles inside
// the control zone, across runs, per time step.
std::vector<SpeedRangeRow> speed_range_experiment(const nn::Mlp& actor, ScenarioConfig cfg,
                                                  int runs, Rng& rng);

std::string metrics_csv(const TrainingRecord& record);
std::string trace_csv(const EpisodeTrace& trace);
std::string trace_csv(std::span<const TraceRow> rows);
std::string speed_range_csv(std::span<const SpeedRangeRow> rows);

// Tidy per-figure tables reshaped from a trace CSV file.
std::string plot_data(const std::filesystem::path& trace_path, std::string_view kind,
                      const ScenarioConfig& cfg);

}  // namespace merge::harness
