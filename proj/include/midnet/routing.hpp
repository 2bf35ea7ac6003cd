#pragma once

#include "midnet/channel.hpp"
#include "midnet/error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace midnet::routing {

enum class AgentKind { Task, Network };

/// L = N + M agents with stable indices, each either a task or a network agent.
struct TeamConfig {
    std::vector<AgentKind> kinds;
    std::vector<bool> active;

    static TeamConfig all_active(std::vector<AgentKind> kinds);

    int size() const { return static_cast<int>(kinds.size()); }
    int num_task() const;
    int num_network() const;
    bool is_active(int i) const { return active[static_cast<std::size_t>(i)]; }
    void validate() const;
};

struct Demand {
    int node = 0;
    double margin = 0.0;      ///< required rate m, normalized
    double confidence = 0.5;  ///< probability eps that the margin is met, in [0.5, 1)
};

struct FlowSpec {
    int destination = 0;
    std::vector<Demand> demands;

    const Demand* find(int node) const;
};

/// alpha[k](i, j): fraction of time agent i forwards flow k to agent j.
using RoutingTensor = std::vector<Eigen::MatrixXd>;

struct RoutingSolution {
    RoutingTensor alpha;
    double slack = 0.0;
};

struct NodeQos {
    double flow_mean = 0.0;      ///< expected net injected rate
    double flow_variance = 0.0;
    double lowest_qos = 0.0;     ///< flow_mean - zeta * sqrt(flow_variance)
    double margin = 0.0;
    bool demand = false;
    bool outage = false;         ///< demand node with lowest_qos < margin
};

class QosReport {
public:
    QosReport(int flows, int agents);

    int flows() const { return flows_; }
    int agents() const { return agents_; }
    NodeQos& operator()(int k, int i) { return entries_[static_cast<std::size_t>(k * agents_ + i)]; }
    const NodeQos& operator()(int k, int i) const { return entries_[static_cast<std::size_t>(k * agents_ + i)]; }
    bool any_outage() const;

private:
    int flows_;
    int agents_;
    std::vector<NodeQos> entries_;
};

/// Margin constraint of node i for flow k in second-order cone form:
///   || diag(c) alpha || <= d . alpha - s - margin
struct ConeBlock {
    int node = 0;
    int flow = 0;
    double zeta = 0.0;
    double margin = 0.0;
    Eigen::VectorXd d;  ///< +mean(i,j) at outgoing slots, -mean(j,i) at incoming slots
    Eigen::VectorXd c;  ///< zeta * sqrt(variance) on the same slots
};

/// Routing program over z = (alpha, s) with alpha flattened as k*L*L + i*L + j.
struct SocpProblem {
    int agents = 0;
    int flows = 0;
    Eigen::VectorXd objective;  ///< (0, ..., 0, -1): minimize -s
    std::vector<ConeBlock> cones;
    Eigen::MatrixXd scheduling;  ///< rows 0..L-1 per transmitter, L..2L-1 per receiver
    Eigen::VectorXd scheduling_bound;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;  ///< 0 for slots fixed to zero

    int num_alpha() const { return flows * agents * agents; }
    int index(int k, int i, int j) const { return (k * agents + i) * agents + j; }
};

struct RoutingOptions {
    double tol = 1e-7;
    int max_newton = 1500;
};

/// The routing program is infeasible: even the best slack is negative.
/// Carries the max-slack relaxation result for best-effort use.
class RoutingInfeasible : public Error {
public:
    RoutingInfeasible(const std::string& what, RoutingSolution best_effort)
        : Error(what), best_effort(std::move(best_effort)) {}
    RoutingSolution best_effort;
};

class RoutingBudgetExhausted : public BudgetExhausted {
public:
    RoutingBudgetExhausted(const std::string& what, RoutingSolution best_effort)
        : BudgetExhausted(what), best_effort(std::move(best_effort)) {}
    RoutingSolution best_effort;
};

/// Standard normal quantile. Throws InvalidArgument outside (0, 1).
double inverse_normal_cdf(double eps);
double normal_cdf(double x);

/// Mean, variance and lowest QoS rate of the net injected flow at every node.
QosReport flow_stats(const RoutingTensor& alpha, const channel::RateTable& rates, const std::vector<FlowSpec>& flows);

/// Validates flows against the team (shape, references, ranges).
void validate_flows(const TeamConfig& team, const std::vector<FlowSpec>& flows);

SocpProblem build_socp(const TeamConfig& team, const std::vector<FlowSpec>& flows, const channel::RateTable& rates);

/// Maximizes the common slack. Throws RoutingInfeasible when the optimum is
/// negative and RoutingBudgetExhausted when the solver runs out of iterations.
RoutingSolution solve_routing(const SocpProblem& problem, const RoutingOptions& options = {});

struct RoutingTableEntry {
    int agent = 0;
    int flow = 0;
    std::vector<int> next_hops;
};

/// One Bernoulli(alpha[k](i, j)) draw per (i, j, k). Draws come from a
/// counter-based stream keyed by (seed, draw, k, i, j).
std::vector<RoutingTableEntry> sample_routing_tables(const RoutingTensor& alpha, std::uint64_t seed,
                                                     std::uint64_t draw = 0);

} // namespace midnet::routing
