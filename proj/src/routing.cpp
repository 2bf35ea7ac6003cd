#include "midnet/routing.hpp"

#include "midnet/random.hpp"
#include "midnet/solver.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace midnet::routing {

TeamConfig TeamConfig::all_active(std::vector<AgentKind> kinds) {
    TeamConfig team;
    team.active.assign(kinds.size(), true);
    team.kinds = std::move(kinds);
    return team;
}

int TeamConfig::num_task() const {
    return static_cast<int>(std::count(kinds.begin(), kinds.end(), AgentKind::Task));
}

int TeamConfig::num_network() const {
    return static_cast<int>(std::count(kinds.begin(), kinds.end(), AgentKind::Network));
}

void TeamConfig::validate() const {
    if (kinds.size() < 2) throw InvalidArgument("team needs at least two agents");
    if (active.size() != kinds.size()) throw InvalidArgument("team active mask has wrong length");
}

const Demand* FlowSpec::find(int node) const {
    for (const auto& d : demands) {
        if (d.node == node) return &d;
    }
    return nullptr;
}

QosReport::QosReport(int flows, int agents)
    : flows_(flows), agents_(agents), entries_(static_cast<std::size_t>(flows * agents)) {}

bool QosReport::any_outage() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const NodeQos& q) { return q.outage; });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("inverse_normal_cdf requires 0 < eps < 1");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eps);
}

namespace {

void check_alpha_shape(const RoutingTensor& alpha, int flows, int agents) {
    if (static_cast<int>(alpha.size()) != flows) throw InvalidArgument("routing tensor has wrong number of flows");
    for (const auto& a : alpha) {
        if (a.rows() != agents || a.cols() != agents) throw InvalidArgument("routing tensor has wrong shape");
    }
}

} // namespace

QosReport flow_stats(const RoutingTensor& alpha, const channel::RateTable& rates, const std::vector<FlowSpec>& flows) {
    const int agents = rates.size();
    const int nflows = static_cast<int>(flows.size());
    if (rates.variance.rows() != agents || rates.variance.cols() != agents || rates.mean.cols() != agents) {
        throw InvalidArgument("rate table is not square");
    }
    check_alpha_shape(alpha, nflows, agents);

    QosReport report(nflows, agents);
    for (int k = 0; k < nflows; ++k) {
        const Eigen::MatrixXd& a = alpha[static_cast<std::size_t>(k)];
        const Eigen::VectorXd out_mean = (a.array() * rates.mean.array()).rowwise().sum();
        const Eigen::VectorXd in_mean = (a.array() * rates.mean.array()).colwise().sum().transpose();
        const Eigen::VectorXd out_var = (a.array().square() * rates.variance.array()).rowwise().sum();
        const Eigen::VectorXd in_var = (a.array().square() * rates.variance.array()).colwise().sum().transpose();
        for (int i = 0; i < agents; ++i) {
            NodeQos& q = report(k, i);
            q.flow_mean = out_mean[i] - in_mean[i];
            q.flow_variance = out_var[i] + in_var[i];
            const Demand* demand = flows[static_cast<std::size_t>(k)].find(i);
            const double zeta = demand ? inverse_normal_cdf(demand->confidence) : 0.0;
            q.lowest_qos = q.flow_mean - zeta * std::sqrt(q.flow_variance);
            if (demand) {
                q.demand = true;
                q.margin = demand->margin;
                q.outage = q.lowest_qos < q.margin;
            }
        }
    }
    return report;
}

void validate_flows(const TeamConfig& team, const std::vector<FlowSpec>& flows) {
    team.validate();
    const int agents = team.size();
    auto check_agent = [&](int idx, const std::string& what) {
        if (idx < 0 || idx >= agents) throw InvalidArgument(what + " references unknown agent " + std::to_string(idx));
        if (!team.is_active(idx)) {
            throw InvalidArgument(what + " references inactive agent " + std::to_string(idx));
        }
    };
    for (std::size_t k = 0; k < flows.size(); ++k) {
        const auto& flow = flows[k];
        const std::string name = "flow " + std::to_string(k);
        check_agent(flow.destination, name + " destination");
        for (const auto& d : flow.demands) {
            check_agent(d.node, name + " demand");
            if (d.node == flow.destination) throw InvalidArgument(name + ": destination cannot carry a demand");
            if (!(d.margin >= 0.0)) throw InvalidArgument(name + ": margin must be >= 0");
            if (!(d.confidence >= 0.5 && d.confidence < 1.0)) {
                throw InvalidArgument(name + ": confidence must lie in [0.5, 1)");
            }
        }
    }
}

SocpProblem build_socp(const TeamConfig& team, const std::vector<FlowSpec>& flows, const channel::RateTable& rates) {
    if (flows.empty()) throw InvalidArgument("routing needs at least one flow");
    validate_flows(team, flows);
    const int L = team.size();
    if (rates.size() != L) throw InvalidArgument("rate table size does not match team");
    const int K = static_cast<int>(flows.size());

    SocpProblem p;
    p.agents = L;
    p.flows = K;
    const int n = p.num_alpha();
    p.objective = Eigen::VectorXd::Zero(n + 1);
    p.objective[n] = -1.0;
    p.scheduling = Eigen::MatrixXd::Zero(2 * L, n);
    p.scheduling_bound = Eigen::VectorXd::Ones(2 * L);
    p.lower = Eigen::VectorXd::Zero(n);
    p.upper = Eigen::VectorXd::Zero(n);

    for (int k = 0; k < K; ++k) {
        const int dest = flows[static_cast<std::size_t>(k)].destination;
        for (int i = 0; i < L; ++i) {
            for (int j = 0; j < L; ++j) {
                // No self loops, no links touching inactive agents, and the
                // destination never retransmits its own flow.
                if (i == j || i == dest || !team.is_active(i) || !team.is_active(j)) continue;
                const int m = p.index(k, i, j);
                p.upper[m] = 1.0;
                p.scheduling(i, m) += 1.0;      // transmitter budget
                p.scheduling(L + j, m) += 1.0;  // receiver budget
            }
        }
    }

    for (int k = 0; k < K; ++k) {
        const auto& flow = flows[static_cast<std::size_t>(k)];
        for (int i = 0; i < L; ++i) {
            if (i == flow.destination || !team.is_active(i)) continue;
            ConeBlock block;
            block.node = i;
            block.flow = k;
            const Demand* demand = flow.find(i);
            block.margin = demand ? demand->margin : 0.0;
            block.zeta = demand ? inverse_normal_cdf(demand->confidence) : 0.0;
            block.d = Eigen::VectorXd::Zero(n);
            block.c = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < L; ++j) {
                if (j == i) continue;
                const int out = p.index(k, i, j);
                const int in = p.index(k, j, i);
                block.d[out] += rates.mean(i, j);
                block.d[in] -= rates.mean(j, i);
                // Entries are zeta*sqrt(variance) so that ||C alpha|| equals
                // zeta*sqrt(flow variance). The pseudo-code form that divides
                // raw variances by the quantile does not reproduce that norm.
                block.c[out] = block.zeta * std::sqrt(rates.variance(i, j));
                block.c[in] = block.zeta * std::sqrt(rates.variance(j, i));
            }
            block.d = block.d.cwiseProduct((p.upper.array() > 0.0).cast<double>().matrix());
            block.c = block.c.cwiseProduct((p.upper.array() > 0.0).cast<double>().matrix());
            p.cones.push_back(std::move(block));
        }
    }
    return p;
}

namespace {

RoutingSolution unpack(const SocpProblem& p, const std::vector<int>& free_slots, const Eigen::VectorXd& z) {
    RoutingSolution sol;
    sol.alpha.assign(static_cast<std::size_t>(p.flows), Eigen::MatrixXd::Zero(p.agents, p.agents));
    for (std::size_t v = 0; v < free_slots.size(); ++v) {
        const int m = free_slots[v];
        const int k = m / (p.agents * p.agents);
        const int rem = m % (p.agents * p.agents);
        sol.alpha[static_cast<std::size_t>(k)](rem / p.agents, rem % p.agents) =
            std::clamp(z[static_cast<Eigen::Index>(v)], 0.0, 1.0);
    }
    sol.slack = z[z.size() - 1];
    return sol;
}

} // namespace

RoutingSolution solve_routing(const SocpProblem& p, const RoutingOptions& options) {
    if (!(options.tol > 0.0)) throw InvalidArgument("routing tolerance must be positive");
    const int n = p.num_alpha();
    if (p.objective.size() != n + 1 || p.lower.size() != n || p.upper.size() != n) {
        throw InvalidArgument("malformed routing problem");
    }

    std::vector<int> free_slots;
    std::vector<int> var_of(static_cast<std::size_t>(n), -1);
    for (int m = 0; m < n; ++m) {
        if (p.upper[m] > p.lower[m]) {
            var_of[static_cast<std::size_t>(m)] = static_cast<int>(free_slots.size());
            free_slots.push_back(m);
        }
    }
    const int nv = static_cast<int>(free_slots.size()) + 1;
    const int s_idx = nv - 1;
    auto reduce = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
        for (std::size_t v = 0; v < free_slots.size(); ++v) r[static_cast<Eigen::Index>(v)] = full[free_slots[v]];
        return r;
    };

    solver::ConicProgram prog;
    prog.cost = Eigen::VectorXd::Zero(nv);
    prog.cost[s_idx] = -1.0;
    prog.lower = Eigen::VectorXd::Constant(nv, -std::numeric_limits<double>::infinity());
    prog.upper = Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity());
    for (std::size_t v = 0; v < free_slots.size(); ++v) {
        prog.lower[static_cast<Eigen::Index>(v)] = p.lower[free_slots[v]];
        prog.upper[static_cast<Eigen::Index>(v)] = p.upper[free_slots[v]];
    }

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> bounds;
    for (Eigen::Index r = 0; r < p.scheduling.rows(); ++r) {
        Eigen::VectorXd row = reduce(p.scheduling.row(r).transpose());
        if (row.cwiseAbs().maxCoeff() == 0.0) continue;
        rows.push_back(std::move(row));
        bounds.push_back(p.scheduling_bound[r]);
    }

    for (const auto& block : p.cones) {
        Eigen::VectorXd d = reduce(block.d);
        const Eigen::VectorXd c = reduce(block.c);
        d[s_idx] = -1.0;
        std::vector<Eigen::Triplet<double>> triplets;
        int rows_used = 0;
        for (Eigen::Index v = 0; v < c.size(); ++v) {
            if (c[v] != 0.0) triplets.emplace_back(rows_used++, static_cast<int>(v), c[v]);
        }
        if (rows_used == 0) {
            // Deterministic margin: s + m - d.alpha <= 0
            rows.push_back(-d);
            bounds.push_back(-block.margin);
            continue;
        }
        solver::SocConstraint cone;
        cone.G.resize(rows_used, nv);
        cone.G.setFromTriplets(triplets.begin(), triplets.end());
        cone.h = Eigen::VectorXd::Zero(rows_used);
        cone.a = std::move(d);
        cone.b = -block.margin;
        prog.cones.push_back(std::move(cone));
    }
    prog.A.resize(static_cast<Eigen::Index>(rows.size()), nv);
    prog.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        prog.A.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        prog.b[static_cast<Eigen::Index>(r)] = bounds[r];
    }

    // Strictly interior start: small uniform alpha, slack well below every margin.
    double max_row = 1.0;
    for (const auto& row : rows) {
        double positive = 0.0;
        for (Eigen::Index v = 0; v < s_idx; ++v) positive += std::max(row[v], 0.0);
        max_row = std::max(max_row, positive);
    }
    Eigen::VectorXd z0 = Eigen::VectorXd::Constant(nv, 0.5 / max_row);
    z0[s_idx] = 0.0;
    double s0 = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r][s_idx] > 0.0) s0 = std::min(s0, bounds[r] - rows[r].dot(z0));
    }
    for (const auto& cone : prog.cones) {
        s0 = std::min(s0, cone.a.dot(z0) + cone.b - (cone.G * z0).norm());
    }
    if (!std::isfinite(s0)) throw InvalidArgument("routing problem has no margin constraints");
    z0[s_idx] = s0 - 1.0;

    solver::BarrierOptions bopts;
    bopts.tol = options.tol;
    bopts.max_newton = options.max_newton;
    const auto result = solver::minimize_barrier(prog, z0, bopts);
    RoutingSolution sol = unpack(p, free_slots, result.z);
    if (!result.converged) {
        throw RoutingBudgetExhausted("routing solver exhausted its Newton budget", std::move(sol));
    }
    if (sol.slack < -1e-9) {
        throw RoutingInfeasible("routing demands cannot be met (best slack " + std::to_string(sol.slack) + ")",
                                std::move(sol));
    }
    return sol;
}

std::vector<RoutingTableEntry> sample_routing_tables(const RoutingTensor& alpha, std::uint64_t seed,
                                                     std::uint64_t draw) {
    std::vector<RoutingTableEntry> tables;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        const auto& a = alpha[k];
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            RoutingTableEntry entry;
            entry.agent = static_cast<int>(i);
            entry.flow = static_cast<int>(k);
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                const double u = counter_uniform(
                    seed, {draw, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(j)});
                if (u < a(i, j)) entry.next_hops.push_back(static_cast<int>(j));
            }
            tables.push_back(std::move(entry));
        }
    }
    return tables;
}

} // namespace midnet::routing
