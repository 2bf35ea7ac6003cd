#include "midnet/serialize.hpp"

#include <cmath>

namespace midnet {

namespace {

// JSON has no infinities; open-ended intervals are written as null.
Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

} // namespace

Json to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json(const routing::RoutingSolution& s) {
    Json alpha = Json::array();
    for (const auto& a : s.alpha) alpha.push_back(to_json(a));
    return Json{{"s", s.slack}, {"alpha", std::move(alpha)}};
}

routing::RoutingSolution routing_solution_from_json(const Json& j) {
    routing::RoutingSolution s;
    s.slack = j.at("s").get<double>();
    for (const auto& layer : j.at("alpha")) {
        const auto rows = static_cast<Eigen::Index>(layer.size());
        Eigen::MatrixXd m(rows, rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& row = layer.at(static_cast<std::size_t>(i));
            if (static_cast<Eigen::Index>(row.size()) != rows) throw InvalidArgument("alpha layers must be square");
            for (Eigen::Index c = 0; c < rows; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        s.alpha.push_back(std::move(m));
    }
    return s;
}

Json to_json(const routing::RoutingTableEntry& e) {
    return Json{{"agent", e.agent}, {"flow", e.flow}, {"next_hops", e.next_hops}};
}

Json to_json(const std::vector<routing::RoutingTableEntry>& tables) {
    Json out = Json::array();
    for (const auto& e : tables) out.push_back(to_json(e));
    return out;
}

Json to_json(const routing::QosReport& q) {
    Json out = Json::array();
    for (int k = 0; k < q.flows(); ++k) {
        Json mean = Json::array(), var = Json::array(), low = Json::array(), outage = Json::array();
        for (int i = 0; i < q.agents(); ++i) {
            mean.push_back(q(k, i).flow_mean);
            var.push_back(q(k, i).flow_variance);
            low.push_back(q(k, i).lowest_qos);
            outage.push_back(q(k, i).outage);
        }
        out.push_back(Json{{"flow", k}, {"b_mean", mean}, {"b_var", var}, {"q", low}, {"outage", outage}});
    }
    return out;
}

Json to_json(const connectivity::ConnectivityResult& r) {
    Json wps = Json::array();
    for (const auto& w : r.waypoints) wps.push_back(Json{{"agent", w.agent}, {"pos", to_json(w.pos)}});
    return Json{{"gamma", r.gamma}, {"waypoints", std::move(wps)}};
}

connectivity::ConnectivityResult connectivity_result_from_json(const Json& j) {
    connectivity::ConnectivityResult r;
    r.gamma = j.at("gamma").get<double>();
    for (const auto& w : j.at("waypoints")) {
        const auto coords = w.at("pos").get<std::vector<double>>();
        r.waypoints.push_back({w.at("agent").get<int>(), Eigen::Map<const Eigen::VectorXd>(coords.data(), static_cast<Eigen::Index>(coords.size()))});
    }
    return r;
}

Json to_json(const planner::PlanOutput& p) {
    Json out{{"timestamp", p.timestamp},
             {"routing", to_json(p.routing)},
             {"routing_feasible", p.routing_feasible},
             {"connectivity", to_json(p.connectivity)},
             {"lambda2", p.lambda2},
             {"qos", to_json(p.qos)}};
    if (!p.routing_error.empty()) out["routing_error"] = p.routing_error;
    return out;
}

Json to_json(const sim::StepRecord& r) {
    Json pos = Json::array();
    for (const auto& p : r.positions) pos.push_back(to_json(p));
    return Json{{"step", r.step},
                {"t", r.t},
                {"plan_id", r.plan_id},
                {"positions", std::move(pos)},
                {"active", r.active},
                {"rates", to_json(r.realized)},
                {"flows", to_json(r.qos)},
                {"outage", r.outage},
                {"flow_outage", r.flow_outage},
                {"task_distance", r.task_distance},
                {"tables", to_json(r.tables)}};
}

Json to_json(const sim::PlanRecord& r) {
    Json out = to_json(r.output);
    out["plan_id"] = r.plan_id;
    if (!r.error.empty()) out["error"] = r.error;
    return out;
}

Json to_json(const sim::RunSummary& s, const sim::ScenarioConfig& config) {
    Json per_flow = Json::array();
    for (std::size_t k = 0; k < s.per_flow.size(); ++k) {
        const auto& f = s.per_flow[k];
        per_flow.push_back(Json{{"flow", k},
                                {"destination", config.agents[static_cast<std::size_t>(config.flows[k].destination)].id},
                                {"outage_fraction", f.outage_fraction},
                                {"min_q", f.min_q},
                                {"mean_q", f.mean_q}});
    }
    Json intervals = Json::array();
    for (const auto& o : s.outages) intervals.push_back(Json::array({o.start, o.end}));
    return Json{{"scenario", config.name},
                {"mode", sim::to_string(config.mode)},
                {"seed", config.seed},
                {"outage_fraction", s.outage_fraction},
                {"min_q", s.min_q},
                {"mean_q", s.mean_q},
                {"max_range_m", s.max_range_m},
                {"max_range_any_m", s.max_range_any_m},
                {"per_flow", std::move(per_flow)},
                {"outage_intervals", std::move(intervals)},
                {"longest_outage_s", s.longest_outage_s},
                {"reduced_team", {{"duration_s", s.reduced_team_s},
                                  {"outage_s", s.reduced_team_outage_s},
                                  {"longest_outage_s", s.reduced_team_longest_outage_s}}},
                {"plans", {{"count", s.plans},
                           {"infeasible", s.infeasible_plans},
                           {"max_ms", s.max_plan_ms},
                           {"mean_ms", s.mean_plan_ms}}}};
}

Json scenario_metadata(const sim::ScenarioConfig& config) {
    Json agents = Json::array();
    for (const auto& a : config.agents) {
        agents.push_back(Json{{"id", a.id},
                              {"kind", a.kind == routing::AgentKind::Task ? "task" : "network"},
                              {"position", to_json(a.position)},
                              {"active", Json::array({a.t_on, number_or_null(a.t_off)})}});
    }
    Json flows = Json::array();
    for (const auto& f : config.flows) {
        Json demands = Json::array();
        for (const auto& d : f.demands) {
            demands.push_back(Json{{"node", config.agents[static_cast<std::size_t>(d.node)].id},
                                   {"margin", d.margin},
                                   {"confidence", d.confidence}});
        }
        flows.push_back(Json{{"destination", config.agents[static_cast<std::size_t>(f.destination)].id},
                             {"demands", std::move(demands)}});
    }
    const auto& ch = config.planner.channel;
    return Json{{"name", config.name},
                {"dimension", config.dimension},
                {"duration_s", config.duration_s},
                {"dt_s", config.dt_s},
                {"seed", config.seed},
                {"mode", sim::to_string(config.mode)},
                {"channel", {{"tx_power_dbm", ch.tx_power_dbm},
                             {"noise_floor_dbm", ch.noise_floor_dbm},
                             {"path_loss_exp", ch.path_loss_exp},
                             {"var_scale", ch.var_scale},
                             {"var_saturation", ch.var_saturation},
                             {"min_distance", ch.min_distance}}},
                {"planner", {{"plan_period_s", config.planner.plan_period_s},
                             {"trust_region_m", config.planner.trust_region_m},
                             {"v_max", config.v_max},
                             {"table_period_s", config.table_period_s}}},
                {"agents", std::move(agents)},
                {"flows", std::move(flows)}};
}

} // namespace midnet
