#pragma once

#include "midnet/connectivity.hpp"
#include "midnet/planner.hpp"
#include "midnet/routing.hpp"
#include "midnet/sim.hpp"

#include <json.hpp>

namespace midnet {

using Json = nlohmann::json;

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);

Json to_json(const routing::RoutingSolution& s);
routing::RoutingSolution routing_solution_from_json(const Json& j);
Json to_json(const routing::RoutingTableEntry& e);
Json to_json(const std::vector<routing::RoutingTableEntry>& tables);
Json to_json(const routing::QosReport& q);
Json to_json(const connectivity::ConnectivityResult& r);
connectivity::ConnectivityResult connectivity_result_from_json(const Json& j);
Json to_json(const planner::PlanOutput& p);

Json to_json(const sim::StepRecord& r);
Json to_json(const sim::PlanRecord& r);
Json to_json(const sim::RunSummary& s, const sim::ScenarioConfig& config);
Json scenario_metadata(const sim::ScenarioConfig& config);

} // namespace midnet
