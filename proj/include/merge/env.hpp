#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "merge/rng.hpp"

namespace merge {

// Dimension of a single vehicle's observation: [p_i, v_i, p_k, v_k, p_j, v_j].
inline constexpr int kStateDim = 6;
using Observation = std::array<double, kStateDim>;

enum class Road { Main, Ramp };
enum class Phase { InControlZone, InMergingZone, Exited };
enum class Cause { None, TimeLimit, Collision, AllMerged };
enum class CollisionType { Rear, Lateral };

std::string to_string(Road r);
std::string to_string(Phase p);
std::string to_string(Cause c);

// Geometry, limits, reward weights and timing of the merging scenario.
// Defaults are the standard simulation parameters for this scenario.
struct ScenarioConfig {
    double control_zone_length = 90.0;  // L, meters
    double merging_zone_length = 10.0;  // S, meters
    double d_safe = 0.5;                // meters
    double v_min = 5.0;                 // m/s
    double v_max = 15.0;                // m/s
    double u_min = -3.0;                // m/s^2
    double u_max = 3.0;                 // m/s^2
    double dt = 0.1;                    // seconds
    double episode_duration = 50.0;     // seconds
    int n_vehicles = 3;
    double w_speed = 1.0;
    double w_rear = 20.0;
    double w_lateral = 20.0;
    double speed_violation_penalty = -10.0;
    double success_bonus = 10.0;
    double collision_gap_epsilon = 0.1;  // meters; gap at or below this ends the episode
    double sentinel_gap = 180.0;         // meters; virtual-leader offset, 2*L by default
    bool normalize_observations = true;

    // End of the merging zone on the shared path coordinate.
    double zone_end() const { return control_zone_length + merging_zone_length; }

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct VehicleState {
    int id = 0;
    Road road = Road::Main;
    double p = 0.0;       // path coordinate, 0 at control-zone entry
    double v = 0.0;       // m/s, never negative
    double last_u = 0.0;  // control applied on the most recent step
};

// Both roads share the path coordinate, so the phase partition is a pure
// function of p: [0,L) control zone, [L, L+S] merging zone, (L+S, inf) exited.
Phase phase_of(double p, const ScenarioConfig& cfg);

// Exact double-integrator step under piecewise-constant control. Speed is
// clamped at zero; if it would cross zero mid-step the position integral
// stops at the zero-speed time.
std::pair<double, double> integrate(double p, double v, double u, double dt);

// (L + S) - p on either road; the ramp projection is the identity because
// both path coordinates share origin and terminus.
double distance_to_merge_end(const VehicleState& veh, const ScenarioConfig& cfg);

// Speed reward: the violation penalty outside the open band (v_min, v_max),
// otherwise (v_max - |v - v_max|) / v_max.
double reward_speed(double v, const ScenarioConfig& cfg);

// Rear-end proximity penalty -1/gap on the open band gap in (0, d_safe),
// clamped to magnitude 1/collision_gap_epsilon.
double reward_rear(double p_i, double p_k, const ScenarioConfig& cfg);

// Lateral proximity penalty -1/(d_i - d_j), active only when both distances
// are inside the merging zone and the difference is in (0, d_safe).
double reward_lateral(double d_i, double d_j, const ScenarioConfig& cfg);

struct RewardParts {
    double speed = 0.0;
    double rear = 0.0;
    double lateral = 0.0;
};

struct CollisionEvent {
    int behind = 0;  // vehicle id of the trailing / later vehicle
    int ahead = 0;
    CollisionType type = CollisionType::Rear;
    double gap = 0.0;  // meters at detection (0 when the pair crossed mid-step)
};

struct StepOutcome {
    std::vector<Observation> obs;
    std::vector<double> reward;
    std::vector<RewardParts> parts;
    std::vector<double> applied_u;  // control actually executed (0 for exited)
    bool done = false;
    Cause cause = Cause::None;
    std::vector<CollisionEvent> collisions;
};

// Per-vehicle initialization: a road plus either an explicit state or
// sampling ranges. Positions default to U[0, 15], speeds to U[v_min, v_max].
struct VehicleInit {
    Road road = Road::Main;
    std::optional<double> p;
    std::optional<double> v;
    double p_lo = 0.0;
    double p_hi = 15.0;
    std::optional<double> v_lo;
    std::optional<double> v_hi;
};

struct EpisodeInit {
    std::vector<VehicleInit> vehicles;
    std::optional<double> min_spacing;  // same-road spacing; default 2*d_safe
};

class MergeEnv {
public:
    explicit MergeEnv(ScenarioConfig cfg);

    // Samples (or copies) initial states and returns the initial observations.
    // Sampled positions are redrawn until every same-road pair respects the
    // spacing constraint; throws ConfigError when that never succeeds.
    std::vector<Observation> reset(const EpisodeInit& init, Rng& rng);

    // Advances every vehicle by dt. Requires exactly one action per vehicle.
    StepOutcome step(std::span<const double> actions);

    // (k, j): nearest vehicle ahead on the same road / on the other road,
    // ordered by distance to the merge-zone end. Exited vehicles stay eligible.
    std::pair<std::optional<int>, std::optional<int>> neighbors(int i) const;

    Observation observe(int i) const;

    const ScenarioConfig& config() const { return cfg_; }
    const std::vector<VehicleState>& vehicles() const { return vehicles_; }
    Phase phase(int i) const { return phase_of(vehicles_[i].p, cfg_); }
    double time() const { return static_cast<double>(steps_) * cfg_.dt; }
    int steps() const { return steps_; }
    bool done() const { return done_; }

private:
    ScenarioConfig cfg_;
    std::vector<VehicleState> vehicles_;
    int steps_ = 0;
    bool done_ = true;  // step() is invalid until the first reset
};

}  // namespace merge
