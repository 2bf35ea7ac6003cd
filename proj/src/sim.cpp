#include "midnet/sim.hpp"

#include "midnet/random.hpp"
#include "midnet/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace midnet::sim {

namespace {

constexpr std::uint64_t kRateStream = 0x52415445;   // tags keep the rate and
constexpr std::uint64_t kTableStream = 0x5441424c;  // table streams disjoint

int active_network(const ScenarioConfig& config, double t) {
    int n = 0;
    for (const auto& a : config.agents) n += a.kind == routing::AgentKind::Network && a.active_at(t);
    return n;
}

routing::RoutingTensor masked(const routing::RoutingTensor& alpha, const std::vector<bool>& active) {
    routing::RoutingTensor out = alpha;
    for (auto& a : out) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (active[static_cast<std::size_t>(i)]) continue;
            a.row(i).setZero();
            a.col(i).setZero();
        }
    }
    return out;
}

} // namespace

std::vector<Trajectory> make_trajectories(const ScenarioConfig& config) {
    std::vector<Trajectory> out;
    out.reserve(config.agents.size());
    for (const auto& a : config.agents) out.emplace_back(a.trajectory, a.position);
    return out;
}

SimState initial_state(const ScenarioConfig& config, std::span<const Trajectory> trajectories) {
    SimState s;
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
        const auto& a = config.agents[i];
        s.positions.push_back(a.kind == routing::AgentKind::Task ? trajectories[i].at(0.0) : a.position);
        s.active.push_back(a.active_at(0.0));
    }
    return s;
}

Position move_toward(const Position& from, const Position& target, double max_step) {
    const Position delta = target - from;
    const double dist = delta.norm();
    if (dist <= max_step) return target;
    return from + delta * (max_step / dist);
}

SimState step(const ScenarioConfig& config, std::span<const Trajectory> trajectories, const SimState& state,
              std::span<const std::optional<Position>> targets) {
    SimState next;
    next.step = state.step + 1;
    // Multiplying keeps the clock free of accumulated rounding.
    next.t = next.step * config.dt_s;
    const double max_step = config.v_max * config.dt_s;
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
        const auto& a = config.agents[i];
        Position p = state.positions[i];
        if (a.kind == routing::AgentKind::Task) {
            p = trajectories[i].at(next.t);
        } else if (config.mode == Mode::Mobile && state.active[i] && targets[i]) {
            p = move_toward(p, *targets[i], max_step);
        }
        next.positions.push_back(std::move(p));
        next.active.push_back(a.active_at(next.t));
    }
    return next;
}

Eigen::MatrixXd realize_rates(const channel::ChannelParams& channel, std::span<const Position> positions,
                              std::uint64_t seed, std::uint64_t step) {
    const auto n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& xi = positions[static_cast<std::size_t>(i)];
            const auto& xj = positions[static_cast<std::size_t>(j)];
            const double mean = channel::mean_rate(channel, xi, xj);
            const double var = channel::rate_variance(channel, xi, xj);
            const double z = counter_normal(seed, kRateStream, step, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
            out(i, j) = std::clamp(mean + std::sqrt(var) * z, 0.0, 1.0);
        }
    }
    return out;
}

RunResult run(const ScenarioConfig& config) {
    config.validate();
    const auto trajectories = make_trajectories(config);
    const int agents = static_cast<int>(config.agents.size());
    const int flows = static_cast<int>(config.flows.size());

    planner::PlannerConfig pcfg = config.planner;
    pcfg.reposition = config.mode == Mode::Mobile;

    RunResult result;
    SimState state = initial_state(config, trajectories);
    std::vector<std::optional<Position>> targets(static_cast<std::size_t>(agents));
    routing::RoutingTensor alpha(static_cast<std::size_t>(flows), Eigen::MatrixXd::Zero(agents, agents));
    std::vector<routing::RoutingTableEntry> tables;
    int plan_id = -1;
    std::uint64_t table_draw = 0;

    const auto steps = static_cast<int>(std::llround(config.duration_s / config.dt_s));
    for (int n = 0; n < steps; ++n) {
        const double t = state.t;
        const routing::TeamConfig team = config.team_at(t);

        if (t + 1e-9 >= (plan_id + 1) * pcfg.plan_period_s) {
            PlanRecord rec;
            rec.plan_id = ++plan_id;
            const auto start = std::chrono::steady_clock::now();
            try {
                rec.output = planner::plan_step(state.positions, team, config.flows, pcfg, t);
                alpha = rec.output.routing.alpha;
                for (const auto& w : rec.output.connectivity.waypoints) targets[static_cast<std::size_t>(w.agent)] = w.pos;
            } catch (const Error& e) {
                rec.error = e.what();
                rec.output.timestamp = t;
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            result.plans.push_back(std::move(rec));
        }

        const routing::RoutingTensor in_force = masked(alpha, state.active);
        if (t + 1e-9 >= static_cast<double>(table_draw) * config.table_period_s) {
            tables = routing::sample_routing_tables(in_force, config.seed ^ kTableStream, table_draw);
            ++table_draw;
        }

        StepRecord rec;
        rec.step = state.step;
        rec.t = t;
        rec.plan_id = plan_id;
        rec.positions = state.positions;
        rec.active = state.active;
        rec.realized = realize_rates(config.planner.channel, state.positions, config.seed, static_cast<std::uint64_t>(n));
        rec.qos = routing::flow_stats(in_force, channel::estimate_rates(config.planner.channel, state.positions), config.flows);
        rec.tables = tables;
        rec.flow_outage.assign(static_cast<std::size_t>(flows), false);
        for (int k = 0; k < flows; ++k) {
            const auto& f = config.flows[static_cast<std::size_t>(k)];
            for (const auto& d : f.demands) {
                auto& q = rec.qos(k, d.node);
                if (!state.active[static_cast<std::size_t>(d.node)] || !state.active[static_cast<std::size_t>(f.destination)]) {
                    q.outage = false;
                    continue;
                }
                if (q.outage) rec.flow_outage[static_cast<std::size_t>(k)] = true;
            }
        }
        rec.outage = std::find(rec.flow_outage.begin(), rec.flow_outage.end(), true) != rec.flow_outage.end();
        for (int i = 0; i < agents; ++i) {
            for (int j = i + 1; j < agents; ++j) {
                if (config.agents[static_cast<std::size_t>(i)].kind != routing::AgentKind::Task ||
                    config.agents[static_cast<std::size_t>(j)].kind != routing::AgentKind::Task ||
                    !state.active[static_cast<std::size_t>(i)] || !state.active[static_cast<std::size_t>(j)]) {
                    continue;
                }
                rec.task_distance = std::max(rec.task_distance, (state.positions[static_cast<std::size_t>(i)] -
                                                                 state.positions[static_cast<std::size_t>(j)]).norm());
            }
        }
        result.records.push_back(std::move(rec));

        state = step(config, trajectories, state, targets);
    }
    result.summary = summarize(config, result.records, result.plans);
    return result;
}

RunSummary summarize(const ScenarioConfig& config, std::span<const StepRecord> records,
                     std::span<const PlanRecord> plans) {
    RunSummary s;
    const std::size_t flows = config.flows.size();
    s.per_flow.assign(flows, {});
    if (records.empty()) return s;

    const double dt = config.dt_s;
    const int initial_network = active_network(config, 0.0);
    std::vector<double> flow_min(flows, std::numeric_limits<double>::infinity()), flow_sum(flows, 0.0);
    std::vector<std::size_t> flow_count(flows, 0), flow_out(flows, 0);
    double q_min = std::numeric_limits<double>::infinity(), q_sum = 0.0;
    std::size_t q_count = 0, outage_steps = 0;
    double fail_distance = std::numeric_limits<double>::infinity();
    double reduced_run = 0.0;

    bool in_outage = false;
    double outage_start = 0.0;
    auto close = [&](double end) {
        if (!in_outage) return;
        s.outages.push_back({outage_start, end});
        s.longest_outage_s = std::max(s.longest_outage_s, end - outage_start);
        in_outage = false;
    };

    for (const auto& r : records) {
        for (std::size_t k = 0; k < flows; ++k) {
            const auto& f = config.flows[k];
            if (!r.active[static_cast<std::size_t>(f.destination)]) continue;
            for (const auto& d : f.demands) {
                if (!r.active[static_cast<std::size_t>(d.node)]) continue;
                const double q = r.qos(static_cast<int>(k), d.node).lowest_qos;
                flow_min[k] = std::min(flow_min[k], q);
                flow_sum[k] += q;
                ++flow_count[k];
                q_min = std::min(q_min, q);
                q_sum += q;
                ++q_count;
            }
            flow_out[k] += r.flow_outage[k];
        }
        if (r.outage) {
            ++outage_steps;
            fail_distance = std::min(fail_distance, r.task_distance);
            if (!in_outage) {
                in_outage = true;
                outage_start = r.t;
            }
        } else {
            close(r.t);
        }

        int net = 0;
        for (std::size_t i = 0; i < config.agents.size(); ++i) {
            net += config.agents[i].kind == routing::AgentKind::Network && r.active[i];
        }
        if (net < initial_network) {
            s.reduced_team_s += dt;
            if (r.outage) {
                s.reduced_team_outage_s += dt;
                reduced_run += dt;
                s.reduced_team_longest_outage_s = std::max(s.reduced_team_longest_outage_s, reduced_run);
            } else {
                reduced_run = 0.0;
            }
        } else {
            reduced_run = 0.0;
        }
    }
    close(records.back().t + dt);

    for (const auto& r : records) {
        if (r.outage) continue;
        s.max_range_any_m = std::max(s.max_range_any_m, r.task_distance);
        if (r.task_distance < fail_distance) s.max_range_m = std::max(s.max_range_m, r.task_distance);
    }

    const double n = static_cast<double>(records.size());
    s.outage_fraction = static_cast<double>(outage_steps) / n;
    s.min_q = q_count ? q_min : 0.0;
    s.mean_q = q_count ? q_sum / static_cast<double>(q_count) : 0.0;
    for (std::size_t k = 0; k < flows; ++k) {
        s.per_flow[k].outage_fraction = static_cast<double>(flow_out[k]) / n;
        s.per_flow[k].min_q = flow_count[k] ? flow_min[k] : 0.0;
        s.per_flow[k].mean_q = flow_count[k] ? flow_sum[k] / static_cast<double>(flow_count[k]) : 0.0;
    }

    s.plans = static_cast<int>(plans.size());
    double total_ms = 0.0;
    for (const auto& p : plans) {
        s.infeasible_plans += !p.error.empty() || !p.output.routing_feasible;
        s.max_plan_ms = std::max(s.max_plan_ms, p.wall_ms);
        total_ms += p.wall_ms;
    }
    s.mean_plan_ms = plans.empty() ? 0.0 : total_ms / static_cast<double>(plans.size());
    return s;
}

void write_outputs(const ScenarioConfig& config, const RunResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);
    auto open = [&](const char* name) {
        std::ofstream out(root / name);
        if (!out) throw Error("cannot write " + (root / name).string());
        return out;
    };
    {
        auto out = open("records.jsonl");
        for (const auto& r : result.records) out << to_json(r).dump() << '\n';
    }
    {
        auto out = open("plans.jsonl");
        for (const auto& p : result.plans) out << to_json(p).dump() << '\n';
    }
    {
        auto out = open("summary.json");
        out << to_json(result.summary, config).dump(2) << '\n';
    }
    {
        auto out = open("scenario.json");
        out << scenario_metadata(config).dump(2) << '\n';
    }
    {
        auto out = open("positions.csv");
        out << (config.dimension == 3 ? "t,agent,x,y,z\n" : "t,agent,x,y\n");
        for (const auto& r : result.records) {
            for (std::size_t i = 0; i < r.positions.size(); ++i) {
                out << Json(r.t).dump() << ',' << config.agents[i].id;
                for (Eigen::Index c = 0; c < r.positions[i].size(); ++c) out << ',' << Json(r.positions[i](c)).dump();
                out << '\n';
            }
        }
    }
}

} // namespace midnet::sim
