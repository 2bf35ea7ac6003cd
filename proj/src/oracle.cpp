#include "midnet/oracle.hpp"

#include "midnet/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>

namespace midnet::oracle {

std::vector<Slot> routable_slots(const routing::TeamConfig& team, const std::vector<routing::FlowSpec>& flows) {
    std::vector<Slot> out;
    for (int k = 0; k < static_cast<int>(flows.size()); ++k) {
        for (int i = 0; i < team.size(); ++i) {
            for (int j = 0; j < team.size(); ++j) {
                if (i == j || i == flows[static_cast<std::size_t>(k)].destination || !team.is_active(i) || !team.is_active(j)) continue;
                out.push_back({k, i, j});
            }
        }
    }
    return out;
}

namespace {

struct Search {
    const routing::TeamConfig& team;
    const std::vector<routing::FlowSpec>& flows;
    const channel::RateTable& rates;
    std::vector<Slot> slots;
    std::vector<double> zeta;  // per (k, i), 0 without a demand
    std::vector<double> margin;
    std::vector<bool> constrained;
    int steps = 0;
    double h = 0.0;
    std::uint64_t limit = 0;

    std::vector<int> level;  // grid index per slot
    std::vector<int> tx;     // transmitter budget used, in grid units
    std::vector<int> rx;
    GridResult best;

    int agents() const { return team.size(); }

    double evaluate() const {
        const int n = agents();
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(flows.size()); ++k) {
            for (int i = 0; i < n; ++i) {
                const auto c = static_cast<std::size_t>(k * n + i);
                if (!constrained[c]) continue;
                double mean = 0.0, var = 0.0;
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    if (slots[s].flow != k) continue;
                    const double a = level[s] * h;
                    if (slots[s].from == i) {
                        mean += a * rates.mean(i, slots[s].to);
                        var += a * a * rates.variance(i, slots[s].to);
                    } else if (slots[s].to == i) {
                        mean -= a * rates.mean(slots[s].from, i);
                        var += a * a * rates.variance(slots[s].from, i);
                    }
                }
                worst = std::min(worst, mean - zeta[c] * std::sqrt(var) - margin[c]);
            }
        }
        return worst;
    }

    void recurse(std::size_t s) {
        if (s == slots.size()) {
            if (++best.evaluated > limit) throw BudgetExhausted("grid oracle exceeded its evaluation budget");
            const double v = evaluate();
            if (v > best.slack) {
                best.slack = v;
                for (auto& a : best.alpha) a.setZero();
                for (std::size_t t = 0; t < slots.size(); ++t) {
                    best.alpha[static_cast<std::size_t>(slots[t].flow)](slots[t].from, slots[t].to) = level[t] * h;
                }
            }
            return;
        }
        const auto from = static_cast<std::size_t>(slots[s].from);
        const auto to = static_cast<std::size_t>(slots[s].to);
        const int room = std::min(steps - tx[from], steps - rx[to]);
        for (int v = 0; v <= room; ++v) {
            level[s] = v;
            tx[from] += v;
            rx[to] += v;
            recurse(s + 1);
            tx[from] -= v;
            rx[to] -= v;
        }
        level[s] = 0;
    }
};

} // namespace

GridResult grid_routing(const routing::TeamConfig& team, const std::vector<routing::FlowSpec>& flows,
                        const channel::RateTable& rates, const GridOptions& options) {
    if (!(options.resolution > 0.0) || options.resolution > 1.0) throw InvalidArgument("grid resolution must lie in (0, 1]");
    const double steps_real = 1.0 / options.resolution;
    const int steps = static_cast<int>(std::lround(steps_real));
    if (std::abs(steps_real - steps) > 1e-9) throw InvalidArgument("grid resolution must divide 1");
    routing::validate_flows(team, flows);

    const int n = team.size();
    Search search{team, flows, rates, options.slots.empty() ? routable_slots(team, flows) : options.slots, {}, {}, {}, steps,
                  1.0 / steps, options.max_evaluations, {}, {}, {}, {}};
    const std::size_t cells = flows.size() * static_cast<std::size_t>(n);
    search.zeta.assign(cells, 0.0);
    search.margin.assign(cells, 0.0);
    search.constrained.assign(cells, false);
    for (std::size_t k = 0; k < flows.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            const auto c = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
            search.constrained[c] = i != flows[k].destination && team.is_active(i);
            if (const auto* d = flows[k].find(i)) {
                // Phi^-1(eps) = sqrt(2) erf^-1(2 eps - 1), computed apart from the library.
                search.zeta[c] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * d->confidence - 1.0);
                search.margin[c] = d->margin;
            }
        }
    }
    search.level.assign(search.slots.size(), 0);
    search.tx.assign(static_cast<std::size_t>(n), 0);
    search.rx.assign(static_cast<std::size_t>(n), 0);
    search.best.slack = -std::numeric_limits<double>::infinity();
    search.best.alpha.assign(flows.size(), Eigen::MatrixXd::Zero(n, n));
    search.recurse(0);
    return search.best;
}

Instance reference_instance(int nodes, double spacing, double margin, double confidence) {
    if (!(spacing > 0.0)) throw InvalidArgument("spacing must be > 0");
    Instance inst;
    auto pos = [](double x, double y) {
        channel::Position p(2);
        p << x, y;
        return p;
    };
    using routing::AgentKind;
    if (nodes == 3) {
        inst.team = routing::TeamConfig::all_active({AgentKind::Task, AgentKind::Network, AgentKind::Task});
        inst.positions = {pos(0, 0), pos(spacing, 0), pos(2 * spacing, 0)};
        inst.flows = {{2, {{0, margin, confidence}}}};
    } else if (nodes == 4) {
        inst.team = routing::TeamConfig::all_active({AgentKind::Task, AgentKind::Task, AgentKind::Network, AgentKind::Network});
        inst.positions = {pos(0, 0), pos(2 * spacing, 0), pos(spacing, 0.4 * spacing), pos(spacing, -0.4 * spacing)};
        inst.flows = {{1, {{0, margin, confidence}}}};
    } else {
        throw InvalidArgument("reference instances exist for 3 or 4 nodes");
    }
    return inst;
}

} // namespace midnet::oracle
