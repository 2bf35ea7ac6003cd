#pragma once

#include "midnet/channel.hpp"
#include "midnet/connectivity.hpp"
#include "midnet/routing.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace midnet::planner {

using channel::Position;

struct PlannerConfig {
    double plan_period_s = 0.35;
    double trust_region_m = 2.0;
    /// When false only routing runs and network agents keep their positions.
    bool reposition = true;
    channel::ChannelParams channel;
    routing::RoutingOptions routing;
    connectivity::RepositionOptions connectivity;

    void validate() const;
};

struct PlanOutput {
    double timestamp = 0.0;
    routing::RoutingSolution routing;
    bool routing_feasible = true;
    std::string routing_error;  ///< empty when the solve succeeded
    connectivity::ConnectivityResult connectivity;
    double lambda2 = 0.0;  ///< exact Fiedler value at the snapshot
    routing::QosReport qos{0, 0};
};

/// Rate estimation, then routing, then connectivity, all on one snapshot.
/// Routing failures are recorded in the output (best-effort alpha) and do not
/// stop the connectivity step.
PlanOutput plan_step(std::span<const Position> positions, const routing::TeamConfig& team,
                     const std::vector<routing::FlowSpec>& flows, const PlannerConfig& config, double timestamp = 0.0);

struct Snapshot {
    std::vector<Position> positions;
    routing::TeamConfig team;
};

struct LoopRecord {
    int cycle = 0;
    double t = 0.0;
    bool stale = false;
    bool routing_feasible = true;
    double slack = 0.0;
    double gamma = 0.0;
    double lambda2 = 0.0;
};

enum class Clock { Simulated, Wall };

/// Source returns the snapshot at time t, or nullopt when none is fresh.
using SnapshotSource = std::function<std::optional<Snapshot>(double t)>;
using PlanSink = std::function<void(const PlanOutput&)>;
using StopCondition = std::function<bool(double t)>;

/// Runs plan_step every plan_period_s until stop(t) holds. A missing snapshot
/// reuses the previous one and marks the cycle stale; starving before the
/// first snapshot skips the cycle. Wall mode sleeps between cycles.
std::vector<LoopRecord> run_loop(const SnapshotSource& source, const PlanSink& sink,
                                 const std::vector<routing::FlowSpec>& flows, const PlannerConfig& config,
                                 const StopCondition& stop, Clock clock = Clock::Simulated);

} // namespace midnet::planner
