#include "merge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "merge/errors.hpp"
#include "merge/io.hpp"

namespace merge::harness {

namespace {

std::string fmt(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

Road road_from_name(const std::string& name) {
    if (name == "main") return Road::Main;
    if (name == "ramp") return Road::Ramp;
    throw ConfigError("unknown road name: " + name);
}

void reject_unknown_keys(const nlohmann::json& doc, const std::set<std::string>& known,
                         const std::string& where) {
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.contains(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

ScenarioConfig parse_scenario(const nlohmann::json& doc) {
    static const std::set<std::string> known = {
        "control_zone_length", "merging_zone_length", "d_safe", "v_min", "v_max",
        "u_min", "u_max", "dt", "episode_duration", "n_vehicles", "w_speed",
        "w_rear", "w_lateral", "speed_violation_penalty", "success_bonus",
        "collision_gap_epsilon", "sentinel_gap", "normalize_observations"};
    reject_unknown_keys(doc, known, "scenario");
    ScenarioConfig cfg;
    cfg.control_zone_length = doc.value("control_zone_length", cfg.control_zone_length);
    cfg.merging_zone_length = doc.value("merging_zone_length", cfg.merging_zone_length);
    cfg.d_safe = doc.value("d_safe", cfg.d_safe);
    cfg.v_min = doc.value("v_min", cfg.v_min);
    cfg.v_max = doc.value("v_max", cfg.v_max);
    cfg.u_min = doc.value("u_min", cfg.u_min);
    cfg.u_max = doc.value("u_max", cfg.u_max);
    cfg.dt = doc.value("dt", cfg.dt);
    cfg.episode_duration = doc.value("episode_duration", cfg.episode_duration);
    cfg.n_vehicles = doc.value("n_vehicles", cfg.n_vehicles);
    cfg.w_speed = doc.value("w_speed", cfg.w_speed);
    cfg.w_rear = doc.value("w_rear", cfg.w_rear);
    cfg.w_lateral = doc.value("w_lateral", cfg.w_lateral);
    cfg.speed_violation_penalty = doc.value("speed_violation_penalty", cfg.speed_violation_penalty);
    cfg.success_bonus = doc.value("success_bonus", cfg.success_bonus);
    cfg.collision_gap_epsilon = doc.value("collision_gap_epsilon", cfg.collision_gap_epsilon);
    cfg.normalize_observations = doc.value("normalize_observations", cfg.normalize_observations);
    // The virtual-leader offset tracks the control zone unless set explicitly.
    cfg.sentinel_gap = doc.value("sentinel_gap", 2.0 * cfg.control_zone_length);
    return cfg;
}

maddpg::Hyperparameters parse_hp(const nlohmann::json& doc, std::vector<std::string>& keys) {
    static const std::set<std::string> known = {
        "gamma", "tau", "batch_size", "buffer_capacity", "warmup_steps", "update_every",
        "noise_sigma0", "noise_decay", "noise_floor", "actor_lr", "critic_lr",
        "hidden1", "hidden2"};
    reject_unknown_keys(doc, known, "hyperparameters");
    for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
    maddpg::Hyperparameters hp;
    hp.gamma = doc.value("gamma", hp.gamma);
    hp.tau = doc.value("tau", hp.tau);
    hp.batch_size = doc.value("batch_size", hp.batch_size);
    hp.buffer_capacity = doc.value("buffer_capacity", hp.buffer_capacity);
    hp.warmup_steps = doc.value("warmup_steps", hp.warmup_steps);
    hp.update_every = doc.value("update_every", hp.update_every);
    hp.noise_sigma0 = doc.value("noise_sigma0", hp.noise_sigma0);
    hp.noise_decay = doc.value("noise_decay", hp.noise_decay);
    hp.noise_floor = doc.value("noise_floor", hp.noise_floor);
    hp.actor_lr = doc.value("actor_lr", hp.actor_lr);
    hp.critic_lr = doc.value("critic_lr", hp.critic_lr);
    hp.hidden1 = doc.value("hidden1", hp.hidden1);
    hp.hidden2 = doc.value("hidden2", hp.hidden2);
    return hp;
}

}  // namespace

std::vector<Road> RunConfig::resolved_roads() const {
    if (!train_roads.empty()) {
        if (static_cast<int>(train_roads.size()) != scenario.n_vehicles)
            throw ConfigError("train_roads length does not match n_vehicles");
        return train_roads;
    }
    std::vector<Road> roads(scenario.n_vehicles, Road::Ramp);
    const int n_main = (scenario.n_vehicles + 1) / 2;
    for (int i = 0; i < n_main; ++i) roads[i] = Road::Main;
    return roads;
}

void RunConfig::validate() const {
    scenario.validate();
    hp.validate();
    if (episodes < 1) throw ConfigError("run config: require episodes >= 1");
    if (profile != "paper" && profile != "reference")
        throw ConfigError("run config: profile must be 'paper' or 'reference'");
    (void)resolved_roads();
}

void apply_profile(RunConfig& cfg, const std::string& profile,
                   const std::vector<std::string>& explicit_keys) {
    if (profile != "paper" && profile != "reference")
        throw ConfigError("unknown training profile: " + profile);
    cfg.profile = profile;
    const double lr = profile == "paper" ? kPaperLearningRate : kReferenceLearningRate;
    const auto is_explicit = [&](const char* key) {
        return std::find(explicit_keys.begin(), explicit_keys.end(), key) != explicit_keys.end();
    };
    if (!is_explicit("actor_lr")) cfg.hp.actor_lr = lr;
    if (!is_explicit("critic_lr")) cfg.hp.critic_lr = lr;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json scenario = {
        {"control_zone_length", cfg.scenario.control_zone_length},
        {"merging_zone_length", cfg.scenario.merging_zone_length},
        {"d_safe", cfg.scenario.d_safe},
        {"v_min", cfg.scenario.v_min},
        {"v_max", cfg.scenario.v_max},
        {"u_min", cfg.scenario.u_min},
        {"u_max", cfg.scenario.u_max},
        {"dt", cfg.scenario.dt},
        {"episode_duration", cfg.scenario.episode_duration},
        {"n_vehicles", cfg.scenario.n_vehicles},
        {"w_speed", cfg.scenario.w_speed},
        {"w_rear", cfg.scenario.w_rear},
        {"w_lateral", cfg.scenario.w_lateral},
        {"speed_violation_penalty", cfg.scenario.speed_violation_penalty},
        {"success_bonus", cfg.scenario.success_bonus},
        {"collision_gap_epsilon", cfg.scenario.collision_gap_epsilon},
        {"sentinel_gap", cfg.scenario.sentinel_gap},
        {"normalize_observations", cfg.scenario.normalize_observations}};
    nlohmann::json hp = {{"gamma", cfg.hp.gamma},
                         {"tau", cfg.hp.tau},
                         {"batch_size", cfg.hp.batch_size},
                         {"buffer_capacity", cfg.hp.buffer_capacity},
                         {"warmup_steps", cfg.hp.warmup_steps},
                         {"update_every", cfg.hp.update_every},
                         {"noise_sigma0", cfg.hp.noise_sigma0},
                         {"noise_decay", cfg.hp.noise_decay},
                         {"noise_floor", cfg.hp.noise_floor},
                         {"actor_lr", cfg.hp.actor_lr},
                         {"critic_lr", cfg.hp.critic_lr},
                         {"hidden1", cfg.hp.hidden1},
                         {"hidden2", cfg.hp.hidden2}};
    std::vector<std::string> roads;
    for (Road r : cfg.resolved_roads()) roads.push_back(merge::to_string(r));
    return {{"scenario", scenario},   {"hyperparameters", hp}, {"episodes", cfg.episodes},
            {"seed", cfg.seed},       {"out_dir", cfg.out_dir}, {"profile", cfg.profile},
            {"train_roads", roads}};
}

RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::optional<std::string>& profile_override) {
    static const std::set<std::string> known = {"scenario", "hyperparameters", "episodes",
                                                "seed",     "out_dir",         "profile",
                                                "train_roads"};
    reject_unknown_keys(doc, known, "run config");
    RunConfig cfg;
    if (doc.contains("scenario")) cfg.scenario = parse_scenario(doc.at("scenario"));
    std::vector<std::string> hp_keys;
    if (doc.contains("hyperparameters")) cfg.hp = parse_hp(doc.at("hyperparameters"), hp_keys);
    cfg.episodes = doc.value("episodes", cfg.episodes);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    const std::string profile =
        profile_override.value_or(doc.value("profile", std::string("reference")));
    if (doc.contains("train_roads")) {
        for (const auto& name : doc.at("train_roads"))
            cfg.train_roads.push_back(road_from_name(name.get<std::string>()));
        if (!doc.contains("scenario") || !doc.at("scenario").contains("n_vehicles"))
            cfg.scenario.n_vehicles = static_cast<int>(cfg.train_roads.size());
    }
    apply_profile(cfg, profile, hp_keys);
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::string>& profile_override) {
    return run_config_from_json(io::read_json(path), profile_override);
}

std::vector<double> rolling_average(std::span<const double> series, int window) {
    if (window < 1) throw ConfigError("rolling_average: window must be >= 1");
    std::vector<double> out(series.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        sum += series[i];
        if (i >= static_cast<std::size_t>(window)) sum -= series[i - window];
        const std::size_t n = std::min<std::size_t>(i + 1, window);
        out[i] = sum / static_cast<double>(n);
    }
    return out;
}

namespace {

void check_finite(double value, const char* what, int episode) {
    if (!std::isfinite(value))
        throw NumericError(std::string(what) + " became non-finite at episode " +
                           std::to_string(episode));
}

}  // namespace

TrainingRecord train(const RunConfig& rc) {
    rc.validate();
    const std::vector<Road> roads = rc.resolved_roads();
    ScenarioConfig cfg = rc.scenario;
    const int n = cfg.n_vehicles;
    const maddpg::ActionScale scale{cfg.u_min, cfg.u_max};

    Rng init_rng(stream_seed(rc.seed, 0));
    Rng env_rng(stream_seed(rc.seed, 1));
    Rng sample_rng(stream_seed(rc.seed, 2));
    std::vector<Rng> noise_rngs;
    for (int i = 0; i < n; ++i) noise_rngs.emplace_back(stream_seed(rc.seed, 100 + i));

    std::vector<maddpg::Agent> agents = maddpg::make_agents(n, rc.hp, init_rng);
    MergeEnv env(cfg);
    maddpg::ReplayBuffer buffer(rc.hp.buffer_capacity);
    maddpg::NoiseProcess noise(rc.hp.noise_sigma0, rc.hp.noise_decay, rc.hp.noise_floor);

    EpisodeInit train_init;
    for (Road r : roads) train_init.vehicles.push_back(VehicleInit{.road = r});

    const bool persist = !rc.out_dir.empty();
    const std::filesystem::path out_dir = rc.out_dir;
    if (persist) io::write_json(out_dir / "config.json", run_config_to_json(rc));

    TrainingRecord rec;
    rec.n_agents = n;
    double rolling_sum = 0.0;
    long global_step = 0;
    std::vector<double> actions(n);

    for (int ep = 1; ep <= rc.episodes; ++ep) {
        std::vector<Observation> obs = env.reset(train_init, env_rng);
        EpisodeStats stats;
        stats.agent_return.assign(n, 0.0);
        stats.sigma = noise.sigma();
        while (true) {
            for (int i = 0; i < n; ++i)
                actions[i] = maddpg::act(agents[i], obs[i], scale, noise, noise_rngs[i]);
            StepOutcome step = env.step(actions);
            buffer.push({obs, step.applied_u, step.reward, step.obs, step.done});
            for (int i = 0; i < n; ++i) stats.agent_return[i] += step.reward[i];
            ++global_step;
            ++stats.steps;

            if (global_step >= rc.hp.warmup_steps && global_step % rc.hp.update_every == 0) {
                const maddpg::Batch batch = buffer.sample(rc.hp.batch_size, sample_rng);
                const auto targets = maddpg::compute_target(agents, batch, rc.hp.gamma, scale);
                for (int i = 0; i < n; ++i)
                    check_finite(maddpg::update_critic(agents[i], batch, targets[i]),
                                 "critic loss", ep);
                for (int i = 0; i < n; ++i)
                    check_finite(maddpg::update_actor(agents[i], batch, scale), "actor objective",
                                 ep);
                maddpg::update_targets(agents, rc.hp.tau);
            }
            obs = step.obs;
            if (step.done) {
                stats.cause = step.cause;
                break;
            }
        }
        for (int i = 0; i < n; ++i) stats.network_return += stats.agent_return[i];
        check_finite(stats.network_return, "episode return", ep);
        rec.episodes.push_back(stats);
        rec.cause_counts[stats.cause] += 1;

        rolling_sum += stats.network_return;
        if (ep > kRollingWindow)
            rolling_sum -= rec.episodes[ep - kRollingWindow - 1].network_return;
        const double rolling = rolling_sum / std::min(ep, kRollingWindow);
        rec.rolling100.push_back(rolling);

        if (rec.best_episode < 0 || rolling > rec.best_rolling) {
            rec.best_rolling = rolling;
            rec.best_episode = ep;
            rec.best_episodes.push_back(ep);
            rec.best_values.push_back(rolling);
            if (persist)
                for (int i = 0; i < n; ++i)
                    io::write_json(out_dir / "best" / ("agent_" + std::to_string(i) + ".json"),
                                   maddpg::save_agent(agents[i]));
        }
        noise.end_episode();
    }

    if (persist) io::atomic_write(out_dir / "metrics.csv", metrics_csv(rec));
    return rec;
}

Scenario scenario_from_name(std::string_view name) {
    if (name == "rear_end") return Scenario::RearEnd;
    if (name == "lateral") return Scenario::Lateral;
    if (name == "eight_cav") return Scenario::EightCav;
    throw ConfigError("unknown scenario: " + std::string(name));
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::RearEnd: return "rear_end";
        case Scenario::Lateral: return "lateral";
        case Scenario::EightCav: return "eight_cav";
    }
    return "rear_end";
}

int scenario_vehicle_count(Scenario s) { return s == Scenario::EightCav ? 8 : 2; }

EpisodeInit build_scenario(Scenario s, const ScenarioConfig& cfg, Rng& rng) {
    (void)rng;  // eight_cav positions are sampled by reset from the ranges below
    EpisodeInit init;
    switch (s) {
        case Scenario::RearEnd:
            // Follower behind on the same road with the higher initial speed.
            init.vehicles.push_back(VehicleInit{.road = Road::Main, .p = 0.0, .v = 13.0});
            init.vehicles.push_back(VehicleInit{.road = Road::Main, .p = 12.0, .v = 9.0});
            break;
        case Scenario::Lateral:
            init.vehicles.push_back(VehicleInit{.road = Road::Main, .p = 10.0, .v = 12.0});
            init.vehicles.push_back(VehicleInit{.road = Road::Ramp, .p = 0.0, .v = 12.0});
            break;
        case Scenario::EightCav:
            for (int i = 0; i < 8; ++i) {
                VehicleInit vi;
                vi.road = i < 4 ? Road::Main : Road::Ramp;
                vi.p_lo = 0.0;
                vi.p_hi = 30.0;
                vi.v = vi.road == Road::Main ? 13.0 : 12.0;
                init.vehicles.push_back(vi);
            }
            init.min_spacing = 2.0;
            break;
    }
    return init;
}

std::vector<nn::Mlp> transfer_policy(const nn::Mlp& actor, int n_target) {
    if (n_target < 1) throw ConfigError("transfer_policy: need at least one target policy");
    return std::vector<nn::Mlp>(static_cast<std::size_t>(n_target), actor);
}

std::vector<nn::Mlp> load_actors(const std::filesystem::path& checkpoint_dir) {
    namespace fs = std::filesystem;
    fs::path dir = checkpoint_dir;
    if (!fs::exists(dir / "agent_0.json") && fs::exists(dir / "best" / "agent_0.json"))
        dir /= "best";
    std::vector<nn::Mlp> actors;
    for (int i = 0;; ++i) {
        const fs::path file = dir / ("agent_" + std::to_string(i) + ".json");
        if (!fs::exists(file)) break;
        const nlohmann::json doc = io::read_json(file);
        try {
            actors.push_back(nn::load_checkpoint(doc.at("actor")));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("agent checkpoint " + file.string() + ": " + e.what());
        }
    }
    if (actors.empty())
        throw ConfigError("no agent_<i>.json checkpoints found under " + checkpoint_dir.string());
    return actors;
}

std::vector<nn::Mlp> fit_policies(const std::vector<nn::Mlp>& actors, int n, int source) {
    if (static_cast<int>(actors.size()) == n) return actors;
    if (source < 0 || source >= static_cast<int>(actors.size()))
        throw ConfigError("fit_policies: source actor index out of range");
    return transfer_policy(actors[source], n);
}

EpisodeTrace evaluate(std::span<const nn::Mlp> actors, const ScenarioConfig& cfg,
                      const EpisodeInit& init, Rng& rng, int episode_index) {
    ScenarioConfig c = cfg;
    c.n_vehicles = static_cast<int>(init.vehicles.size());
    if (actors.size() != init.vehicles.size())
        throw ConfigError("evaluate: policy count does not match scenario vehicle count");
    const maddpg::ActionScale scale{c.u_min, c.u_max};

    MergeEnv env(c);
    std::vector<Observation> obs = env.reset(init, rng);
    EpisodeTrace trace;
    trace.n_vehicles = c.n_vehicles;
    std::vector<double> actions(c.n_vehicles);
    while (true) {
        for (int i = 0; i < c.n_vehicles; ++i)
            actions[i] = maddpg::act(actors[i], obs[i], scale);
        StepOutcome step = env.step(actions);
        ++trace.steps;
        for (int i = 0; i < c.n_vehicles; ++i) {
            const VehicleState& veh = env.vehicles()[i];
            TraceRow row;
            row.episode = episode_index;
            row.t = env.time();
            row.vehicle_id = i;
            row.road = veh.road;
            row.p = veh.p;
            row.v = veh.v;
            row.u = step.applied_u[i];
            row.d_merge = distance_to_merge_end(veh, c);
            row.parts = step.parts[i];
            row.r_total = step.reward[i];
            row.phase = env.phase(i);
            trace.rows.push_back(row);
        }
        obs = step.obs;
        if (step.done) {
            trace.cause = step.cause;
            break;
        }
    }
    return trace;
}

EpisodeTrace evaluate_scenario(std::span<const nn::Mlp> actors, Scenario s,
                               const ScenarioConfig& base_cfg, std::uint64_t seed) {
    Rng rng(stream_seed(seed, 7));
    const EpisodeInit init = build_scenario(s, base_cfg, rng);
    return evaluate(actors, base_cfg, init, rng);
}

std::vector<SpeedRangeRow> speed_range_experiment(const nn::Mlp& actor, ScenarioConfig cfg,
                                                  int runs, Rng& rng) {
    if (runs < 1) throw ConfigError("speed_range_experiment: need at least one run");
    constexpr int kVehicles = 8;
    cfg.n_vehicles = kVehicles;
    const std::vector<nn::Mlp> policies = transfer_policy(actor, kVehicles);

    struct Accum {
        double lo = 0.0, hi = 0.0, sum = 0.0;
        int count = 0;
    };
    std::vector<std::array<Accum, 2>> per_step;  // [step][road]

    for (int run = 0; run < runs; ++run) {
        EpisodeInit init = build_scenario(Scenario::EightCav, cfg, rng);
        for (VehicleInit& vi : init.vehicles) {
            vi.v.reset();
            vi.v_lo = 6.0;
            vi.v_hi = 13.0;
        }
        const EpisodeTrace trace = evaluate(policies, cfg, init, rng, run);
        for (const TraceRow& row : trace.rows) {
            if (row.phase != Phase::InControlZone) continue;
            const auto step = static_cast<std::size_t>(std::lround(row.t / cfg.dt)) - 1;
            if (per_step.size() <= step) per_step.resize(step + 1);
            Accum& acc = per_step[step][row.road == Road::Main ? 0 : 1];
            if (acc.count == 0) {
                acc.lo = acc.hi = row.v;
            } else {
                acc.lo = std::min(acc.lo, row.v);
                acc.hi = std::max(acc.hi, row.v);
            }
            acc.sum += row.v;
            acc.count += 1;
        }
    }

    std::vector<SpeedRangeRow> rows;
    for (std::size_t step = 0; step < per_step.size(); ++step) {
        for (int r = 0; r < 2; ++r) {
            const Accum& acc = per_step[step][r];
            if (acc.count == 0) continue;
            SpeedRangeRow row;
            row.t = static_cast<double>(step + 1) * cfg.dt;
            row.road = r == 0 ? Road::Main : Road::Ramp;
            row.v_min = acc.lo;
            row.v_avg = acc.sum / acc.count;
            row.v_max = acc.hi;
            row.count = acc.count;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string metrics_csv(const TrainingRecord& record) {
    std::string out = "episode";
    for (int i = 0; i < record.n_agents; ++i) out += ",return_" + std::to_string(i);
    out += ",network_return,rolling100,cause,sigma\n";
    for (std::size_t e = 0; e < record.episodes.size(); ++e) {
        const EpisodeStats& s = record.episodes[e];
        out += std::to_string(e + 1);
        for (double r : s.agent_return) out += "," + fmt(r, 6);
        out += "," + fmt(s.network_return, 6);
        out += "," + fmt(record.rolling100[e], 6);
        out += "," + merge::to_string(s.cause);
        out += "," + fmt(s.sigma, 6);
        out += "\n";
    }
    return out;
}

std::string trace_csv(std::span<const TraceRow> rows) {
    std::string out =
        "episode,t,vehicle_id,road,p,v,u,d_merge,r_speed,r_rear,r_lateral,r_total,phase\n";
    for (const TraceRow& r : rows) {
        out += std::to_string(r.episode);
        out += "," + fmt(r.t, 1);
        out += "," + std::to_string(r.vehicle_id);
        out += "," + merge::to_string(r.road);
        out += "," + fmt(r.p, 6);
        out += "," + fmt(r.v, 6);
        out += "," + fmt(r.u, 6);
        out += "," + fmt(r.d_merge, 6);
        out += "," + fmt(r.parts.speed, 6);
        out += "," + fmt(r.parts.rear, 6);
        out += "," + fmt(r.parts.lateral, 6);
        out += "," + fmt(r.r_total, 6);
        out += "," + merge::to_string(r.phase);
        out += "\n";
    }
    return out;
}

std::string trace_csv(const EpisodeTrace& trace) { return trace_csv(trace.rows); }

std::string speed_range_csv(std::span<const SpeedRangeRow> rows) {
    std::string out = "t,road,v_min,v_avg,v_max,count\n";
    for (const SpeedRangeRow& r : rows) {
        out += fmt(r.t, 1);
        out += "," + merge::to_string(r.road);
        out += "," + fmt(r.v_min, 6);
        out += "," + fmt(r.v_avg, 6);
        out += "," + fmt(r.v_max, 6);
        out += "," + std::to_string(r.count);
        out += "\n";
    }
    return out;
}

std::string plot_data(const std::filesystem::path& trace_path, std::string_view kind,
                      const ScenarioConfig& cfg) {
    const io::CsvTable table = io::read_csv(trace_path);
    const int col_t = table.column("t");
    const int col_id = table.column("vehicle_id");
    const int col_road = table.column("road");
    const int col_p = table.column("p");
    const int col_v = table.column("v");
    const int col_phase = table.column("phase");

    if (kind == "position" || kind == "speed") {
        const int col = kind == "position" ? col_p : col_v;
        std::string out = "t,vehicle_id,road," + std::string(kind == "position" ? "p" : "v") + "\n";
        for (const auto& row : table.rows)
            out += row[col_t] + "," + row[col_id] + "," + row[col_road] + "," + row[col] + "\n";
        return out;
    }
    if (kind == "speed-range") {
        // Per-road speed envelope over vehicles inside the control zone.
        std::map<std::pair<std::string, std::string>, std::array<double, 3>> acc;  // min,sum,max
        std::map<std::pair<std::string, std::string>, int> counts;
        for (const auto& row : table.rows) {
            if (row[col_phase] != "control") continue;
            const auto key = std::make_pair(row[col_t], row[col_road]);
            const double v = std::stod(row[col_v]);
            auto [it, inserted] = acc.try_emplace(key, std::array<double, 3>{v, 0.0, v});
            it->second[0] = std::min(it->second[0], v);
            it->second[1] += v;
            it->second[2] = std::max(it->second[2], v);
            counts[key] += 1;
        }
        std::vector<SpeedRangeRow> rows;
        for (const auto& [key, a] : acc) {
            SpeedRangeRow row;
            row.t = std::stod(key.first);
            row.road = road_from_name(key.second);
            row.v_min = a[0];
            row.v_avg = a[1] / counts[key];
            row.v_max = a[2];
            row.count = counts[key];
            rows.push_back(row);
        }
        std::sort(rows.begin(), rows.end(), [](const SpeedRangeRow& a, const SpeedRangeRow& b) {
            return a.t != b.t ? a.t < b.t : a.road < b.road;
        });
        (void)cfg;
        return speed_range_csv(rows);
    }
    throw ConfigError("unknown plot-data kind: " + std::string(kind));
}

}  // namespace merge::harness
