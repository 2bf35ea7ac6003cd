#pragma once

#include "midnet/planner.hpp"
#include "midnet/scenario.hpp"
#include "midnet/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace midnet::sim {

struct SimState {
    int step = 0;
    double t = 0.0;
    std::vector<Position> positions;
    std::vector<bool> active;
};

/// Initial state: task agents at their trajectory start, network agents at
/// their configured positions.
SimState initial_state(const ScenarioConfig& config, std::span<const Trajectory> trajectories);

std::vector<Trajectory> make_trajectories(const ScenarioConfig& config);

/// Closest point to `target` within `max_step` of `from`.
Position move_toward(const Position& from, const Position& target, double max_step);

/// Advances the state by one dt. Task agents follow their trajectories;
/// network agents move toward their target at v_max in mobile mode and stay
/// put in fixed mode. `targets` is indexed by agent; nullopt means hold.
SimState step(const ScenarioConfig& config, std::span<const Trajectory> trajectories, const SimState& state,
              std::span<const std::optional<Position>> targets);

/// One Gaussian draw N(mean, variance) per ordered pair, clipped to [0, 1].
/// The draw for (i, j) depends only on (seed, step, i, j).
Eigen::MatrixXd realize_rates(const channel::ChannelParams& channel, std::span<const Position> positions,
                              std::uint64_t seed, std::uint64_t step);

struct StepRecord {
    int step = 0;
    double t = 0.0;
    int plan_id = -1;  ///< index of the plan in force, -1 before the first
    std::vector<Position> positions;
    std::vector<bool> active;
    Eigen::MatrixXd realized;  ///< sampled instantaneous rates
    routing::QosReport qos{0, 0};
    std::vector<routing::RoutingTableEntry> tables;
    bool outage = false;        ///< any active demand node below its margin
    std::vector<bool> flow_outage;
    double task_distance = 0.0; ///< largest distance between active task agents
};

struct PlanRecord {
    int plan_id = 0;
    planner::PlanOutput output;
    std::string error;  ///< non-routing failure in the cycle, empty otherwise
    double wall_ms = 0.0;
};

struct OutageInterval {
    double start = 0.0;
    double end = 0.0;
};

struct FlowSummary {
    double outage_fraction = 0.0;
    double min_q = 0.0;
    double mean_q = 0.0;
};

struct RunSummary {
    double outage_fraction = 0.0;
    double min_q = 0.0;
    double mean_q = 0.0;
    /// Largest task-pair distance d such that no outage occurred at any step
    /// whose task-pair distance was at most d.
    double max_range_m = 0.0;
    /// Largest task-pair distance seen at an outage-free step.
    double max_range_any_m = 0.0;
    std::vector<FlowSummary> per_flow;
    std::vector<OutageInterval> outages;
    double longest_outage_s = 0.0;
    /// Times at which fewer network agents are active than at the start.
    double reduced_team_s = 0.0;
    double reduced_team_outage_s = 0.0;
    double reduced_team_longest_outage_s = 0.0;
    int plans = 0;
    int infeasible_plans = 0;
    double max_plan_ms = 0.0;
    double mean_plan_ms = 0.0;
};

struct RunResult {
    std::vector<StepRecord> records;
    std::vector<PlanRecord> plans;
    RunSummary summary;
};

RunResult run(const ScenarioConfig& config);

RunSummary summarize(const ScenarioConfig& config, std::span<const StepRecord> records,
                     std::span<const PlanRecord> plans);

/// Writes records.jsonl, plans.jsonl, summary.json, positions.csv and
/// scenario.json into `dir`, creating it if needed.
void write_outputs(const ScenarioConfig& config, const RunResult& result, const std::string& dir);

} // namespace midnet::sim
