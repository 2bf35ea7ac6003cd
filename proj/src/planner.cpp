#include "midnet/planner.hpp"

#include "midnet/error.hpp"

#include <chrono>
#include <thread>

namespace midnet::planner {

void PlannerConfig::validate() const {
    if (!(plan_period_s > 0.0)) throw InvalidArgument("planner.plan_period_s must be > 0");
    if (!(trust_region_m > 0.0)) throw InvalidArgument("planner.trust_region_m must be > 0");
    channel.validate();
}

PlanOutput plan_step(std::span<const Position> positions, const routing::TeamConfig& team,
                     const std::vector<routing::FlowSpec>& flows, const PlannerConfig& config, double timestamp) {
    config.validate();
    if (flows.empty()) throw InvalidArgument("plan_step needs at least one flow");
    if (static_cast<int>(positions.size()) != team.size()) throw InvalidArgument("one position per agent required");

    PlanOutput out;
    out.timestamp = timestamp;

    // Rate estimation unit.
    const auto rates = channel::estimate_rates(config.channel, positions);

    // Network planner.
    const auto problem = routing::build_socp(team, flows, rates);
    try {
        out.routing = routing::solve_routing(problem, config.routing);
    } catch (const routing::RoutingInfeasible& e) {
        out.routing = e.best_effort;
        out.routing_feasible = false;
        out.routing_error = e.what();
    } catch (const routing::RoutingBudgetExhausted& e) {
        out.routing = e.best_effort;
        out.routing_feasible = false;
        out.routing_error = e.what();
    }

    // Connectivity planner.
    bool mobile = false;
    for (int i = 0; i < team.size(); ++i) mobile = mobile || (team.is_active(i) && team.kinds[static_cast<std::size_t>(i)] == routing::AgentKind::Network);
    if (config.reposition && mobile) {
        auto opts = config.connectivity;
        opts.trust_region = config.trust_region_m;
        auto moved = connectivity::reposition(config.channel, team, positions, opts);
        out.connectivity = std::move(moved.result);
        out.lambda2 = moved.lambda2_before;
    } else {
        out.lambda2 = connectivity::exact_fiedler(config.channel, team, positions);
        out.connectivity.gamma = out.lambda2;
    }

    out.qos = routing::flow_stats(out.routing.alpha, rates, flows);
    return out;
}

std::vector<LoopRecord> run_loop(const SnapshotSource& source, const PlanSink& sink,
                                 const std::vector<routing::FlowSpec>& flows, const PlannerConfig& config,
                                 const StopCondition& stop, Clock clock) {
    config.validate();
    std::vector<LoopRecord> log;
    std::optional<Snapshot> last;
    const auto start = std::chrono::steady_clock::now();
    for (int cycle = 0;; ++cycle) {
        const double t = cycle * config.plan_period_s;
        if (stop(t)) break;
        if (clock == Clock::Wall) {
            std::this_thread::sleep_until(start + std::chrono::duration<double>(t));
        }
        LoopRecord rec;
        rec.cycle = cycle;
        rec.t = t;
        if (auto fresh = source(t)) {
            last = std::move(fresh);
        } else {
            rec.stale = true;
        }
        if (!last) {
            log.push_back(rec);
            continue;
        }
        const PlanOutput out = plan_step(last->positions, last->team, flows, config, t);
        rec.routing_feasible = out.routing_feasible;
        rec.slack = out.routing.slack;
        rec.gamma = out.connectivity.gamma;
        rec.lambda2 = out.lambda2;
        sink(out);
        log.push_back(rec);
    }
    return log;
}

} // namespace midnet::planner
