#include "merge/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "merge/errors.hpp"

namespace merge {

std::string to_string(Road r) { return r == Road::Main ? "main" : "ramp"; }

std::string to_string(Phase p) {
    switch (p) {
        case Phase::InControlZone: return "control";
        case Phase::InMergingZone: return "merging";
        case Phase::Exited: return "exited";
    }
    return "control";
}

std::string to_string(Cause c) {
    switch (c) {
        case Cause::None: return "none";
        case Cause::TimeLimit: return "time_limit";
        case Cause::Collision: return "collision";
        case Cause::AllMerged: return "all_merged";
    }
    return "none";
}

void ScenarioConfig::validate() const {
    if (!(control_zone_length > merging_zone_length && merging_zone_length > 0.0))
        throw ConfigError("scenario: require L > S > 0");
    if (!(v_max > v_min && v_min >= 0.0))
        throw ConfigError("scenario: require v_max > v_min >= 0");
    if (!(u_max > 0.0 && u_min < 0.0))
        throw ConfigError("scenario: require u_max > 0 > u_min");
    if (!(dt > 0.0)) throw ConfigError("scenario: require dt > 0");
    if (!(episode_duration > 0.0)) throw ConfigError("scenario: require episode_duration > 0");
    if (n_vehicles < 1) throw ConfigError("scenario: require n_vehicles >= 1");
    if (!(d_safe > 0.0)) throw ConfigError("scenario: require d_safe > 0");
    if (!(collision_gap_epsilon > 0.0 && collision_gap_epsilon < d_safe))
        throw ConfigError("scenario: require 0 < collision_gap_epsilon < d_safe");
    if (!(sentinel_gap > 0.0)) throw ConfigError("scenario: require sentinel_gap > 0");
}

Phase phase_of(double p, const ScenarioConfig& cfg) {
    if (p < cfg.control_zone_length) return Phase::InControlZone;
    if (p <= cfg.zone_end()) return Phase::InMergingZone;
    return Phase::Exited;
}

std::pair<double, double> integrate(double p, double v, double u, double dt) {
    const double v_next = v + u * dt;
    if (v_next < 0.0) {
        // Speed reaches zero at t* = -v/u; the vehicle stands still afterwards.
        const double t_stop = (u < 0.0) ? -v / u : 0.0;
        return {p + v * t_stop + 0.5 * u * t_stop * t_stop, 0.0};
    }
    return {p + v * dt + 0.5 * u * dt * dt, v_next};
}

double distance_to_merge_end(const VehicleState& veh, const ScenarioConfig& cfg) {
    return cfg.zone_end() - veh.p;
}

double reward_speed(double v, const ScenarioConfig& cfg) {
    if (v > cfg.v_max || v < cfg.v_min) return cfg.speed_violation_penalty;
    return (cfg.v_max - std::sqrt((v - cfg.v_max) * (v - cfg.v_max))) / cfg.v_max;
}

namespace {

double clamped_inverse_penalty(double gap, const ScenarioConfig& cfg) {
    const double magnitude = std::min(1.0 / gap, 1.0 / cfg.collision_gap_epsilon);
    return -magnitude;
}

}  // namespace

double reward_rear(double p_i, double p_k, const ScenarioConfig& cfg) {
    const double gap = p_k - p_i;
    if (gap > 0.0 && gap < cfg.d_safe) return clamped_inverse_penalty(gap, cfg);
    return 0.0;
}

double reward_lateral(double d_i, double d_j, const ScenarioConfig& cfg) {
    if (!(d_j < cfg.merging_zone_length && d_i < cfg.merging_zone_length)) return 0.0;
    const double gap = d_i - d_j;
    if (gap > 0.0 && gap < cfg.d_safe) return clamped_inverse_penalty(gap, cfg);
    return 0.0;
}

MergeEnv::MergeEnv(ScenarioConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<Observation> MergeEnv::reset(const EpisodeInit& init, Rng& rng) {
    if (static_cast<int>(init.vehicles.size()) != cfg_.n_vehicles)
        throw ConfigError("reset: init spec has " + std::to_string(init.vehicles.size()) +
                          " vehicles, scenario expects " + std::to_string(cfg_.n_vehicles));

    const double spacing = init.min_spacing.value_or(2.0 * cfg_.d_safe);
    const int n = cfg_.n_vehicles;
    constexpr int kMaxAttempts = 10000;

    std::vector<VehicleState> drawn(n);
    std::vector<bool> sampled(n, false);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        for (int i = 0; i < n; ++i) {
            const VehicleInit& vi = init.vehicles[i];
            drawn[i].id = i;
            drawn[i].road = vi.road;
            sampled[i] = !vi.p.has_value();
            drawn[i].p = vi.p ? *vi.p : rng.uniform(vi.p_lo, vi.p_hi);
            drawn[i].v = vi.v ? *vi.v
                              : rng.uniform(vi.v_lo.value_or(cfg_.v_min),
                                            vi.v_hi.value_or(cfg_.v_max));
            drawn[i].last_u = 0.0;
        }
        // Spacing binds sampling only; explicit positions pass through exactly.
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j)
                if ((sampled[i] || sampled[j]) && drawn[i].road == drawn[j].road &&
                    std::abs(drawn[i].p - drawn[j].p) < spacing)
                    ok = false;
        if (ok) {
            vehicles_ = drawn;
            steps_ = 0;
            done_ = false;
            std::vector<Observation> obs(n);
            for (int i = 0; i < n; ++i) obs[i] = observe(i);
            return obs;
        }
    }
    throw ConfigError("reset: could not satisfy same-road spacing >= " +
                      std::to_string(spacing) + " m after bounded resampling");
}

std::pair<std::optional<int>, std::optional<int>> MergeEnv::neighbors(int i) const {
    if (i < 0 || i >= static_cast<int>(vehicles_.size()))
        throw std::invalid_argument("neighbors: vehicle index out of range");
    const double d_i = distance_to_merge_end(vehicles_[i], cfg_);
    std::optional<int> k, j;
    double best_k = 0.0, best_j = 0.0;
    for (int l = 0; l < static_cast<int>(vehicles_.size()); ++l) {
        if (l == i) continue;
        const double d_l = distance_to_merge_end(vehicles_[l], cfg_);
        if (!(d_l < d_i)) continue;  // strictly ahead only
        const double lead = d_i - d_l;
        if (vehicles_[l].road == vehicles_[i].road) {
            if (!k || lead < best_k) { k = l; best_k = lead; }
        } else {
            if (!j || lead < best_j) { j = l; best_j = lead; }
        }
    }
    return {k, j};
}

Observation MergeEnv::observe(int i) const {
    const auto [k, j] = neighbors(i);
    const VehicleState& self = vehicles_[i];
    Observation obs;
    obs[0] = self.p;
    obs[1] = self.v;
    obs[2] = k ? vehicles_[*k].p : self.p + cfg_.sentinel_gap;
    obs[3] = k ? vehicles_[*k].v : cfg_.v_max;
    obs[4] = j ? vehicles_[*j].p : self.p + cfg_.sentinel_gap;
    obs[5] = j ? vehicles_[*j].v : cfg_.v_max;
    if (cfg_.normalize_observations) {
        const double ps = 1.0 / cfg_.zone_end();
        const double vs = 1.0 / cfg_.v_max;
        obs[0] *= ps; obs[2] *= ps; obs[4] *= ps;
        obs[1] *= vs; obs[3] *= vs; obs[5] *= vs;
    }
    return obs;
}

StepOutcome MergeEnv::step(std::span<const double> actions) {
    if (done_) throw std::logic_error("step: episode is finished; call reset first");
    if (static_cast<int>(actions.size()) != cfg_.n_vehicles)
        throw std::invalid_argument("step: expected " + std::to_string(cfg_.n_vehicles) +
                                    " actions, got " + std::to_string(actions.size()));

    const int n = cfg_.n_vehicles;
    std::vector<double> pre_p(n);
    std::vector<Phase> pre_phase(n);
    for (int i = 0; i < n; ++i) {
        pre_p[i] = vehicles_[i].p;
        pre_phase[i] = phase_of(vehicles_[i].p, cfg_);
    }

    StepOutcome out;
    out.applied_u.resize(n);
    for (int i = 0; i < n; ++i) {
        VehicleState& veh = vehicles_[i];
        if (pre_phase[i] == Phase::Exited) {
            // Past the merging zone vehicles cruise at their exit speed.
            veh.p += veh.v * cfg_.dt;
            veh.last_u = 0.0;
        } else {
            const double u = std::clamp(actions[i], cfg_.u_min, cfg_.u_max);
            auto [p_next, v_next] = integrate(veh.p, veh.v, u, cfg_.dt);
            veh.p = p_next;
            veh.v = v_next;
            veh.last_u = u;
        }
        out.applied_u[i] = veh.last_u;
    }
    ++steps_;

    // Collision detection on the post-step state. A pair that swapped order
    // during the step passed through zero gap, so it is recorded with gap 0.
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double pre_diff = pre_p[b] - pre_p[a];
            const double post_diff = vehicles_[b].p - vehicles_[a].p;
            const bool crossed = pre_diff * post_diff < 0.0;
            if (vehicles_[a].road == vehicles_[b].road) {
                const double gap = std::abs(post_diff);
                if (gap <= cfg_.collision_gap_epsilon || crossed) {
                    const bool a_behind = post_diff > 0.0 || (crossed && pre_diff > 0.0);
                    out.collisions.push_back({a_behind ? a : b, a_behind ? b : a,
                                              CollisionType::Rear, crossed ? 0.0 : gap});
                }
            } else {
                const bool both_merging =
                    phase_of(vehicles_[a].p, cfg_) == Phase::InMergingZone &&
                    phase_of(vehicles_[b].p, cfg_) == Phase::InMergingZone;
                const bool both_merging_pre = pre_phase[a] == Phase::InMergingZone &&
                                              pre_phase[b] == Phase::InMergingZone;
                const double gap = std::abs(post_diff);  // |d_a - d_b| on the shared coordinate
                if ((both_merging && gap <= cfg_.collision_gap_epsilon) ||
                    (both_merging && both_merging_pre && crossed)) {
                    const bool a_behind = post_diff > 0.0 || (crossed && pre_diff > 0.0);
                    out.collisions.push_back({a_behind ? a : b, a_behind ? b : a,
                                              CollisionType::Lateral, crossed ? 0.0 : gap});
                }
            }
        }
    }

    // Rewards from the post-step state; exited vehicles collect nothing.
    out.obs.resize(n);
    out.reward.resize(n);
    out.parts.resize(n);
    bool all_exited = true;
    for (int i = 0; i < n; ++i) {
        out.obs[i] = observe(i);
        const Phase ph = phase_of(vehicles_[i].p, cfg_);
        if (ph != Phase::Exited) all_exited = false;
        RewardParts parts;
        if (ph != Phase::Exited) {
            parts.speed = reward_speed(vehicles_[i].v, cfg_);
            const auto [k, j] = neighbors(i);
            if (k) parts.rear = reward_rear(vehicles_[i].p, vehicles_[*k].p, cfg_);
            if (j)
                parts.lateral = reward_lateral(distance_to_merge_end(vehicles_[i], cfg_),
                                               distance_to_merge_end(vehicles_[*j], cfg_), cfg_);
        }
        out.parts[i] = parts;
        out.reward[i] = cfg_.w_speed * parts.speed + cfg_.w_rear * parts.rear +
                        cfg_.w_lateral * parts.lateral;
    }

    if (!out.collisions.empty()) {
        out.done = true;
        out.cause = Cause::Collision;
    } else if (all_exited) {
        out.done = true;
        out.cause = Cause::AllMerged;
        for (int i = 0; i < n; ++i) out.reward[i] += cfg_.success_bonus;
    } else if (time() + 1e-9 >= cfg_.episode_duration) {
        out.done = true;
        out.cause = Cause::TimeLimit;
    }
    done_ = out.done;
    return out;
}

}  // namespace merge
