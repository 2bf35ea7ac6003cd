#pragma once

#include "midnet/channel.hpp"
#include "midnet/routing.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace midnet::oracle {

/// Exhaustive grid search for the max-slack routing, used to check the conic
/// solver. Flow statistics are evaluated here from the rate table directly.
struct Slot {
    int flow = 0;
    int from = 0;
    int to = 0;
};

struct GridOptions {
    double resolution = 0.01;
    /// Restricts the search to these slots; empty means every routable slot.
    std::vector<Slot> slots;
    std::uint64_t max_evaluations = 2'000'000'000ULL;
};

struct GridResult {
    double slack = 0.0;
    routing::RoutingTensor alpha;
    std::uint64_t evaluated = 0;  ///< grid points inside the scheduling polytope
};

/// Slots the routing program can use: no self links, nothing out of a flow's
/// destination, both endpoints active.
std::vector<Slot> routable_slots(const routing::TeamConfig& team, const std::vector<routing::FlowSpec>& flows);

GridResult grid_routing(const routing::TeamConfig& team, const std::vector<routing::FlowSpec>& flows,
                        const channel::RateTable& rates, const GridOptions& options = {});

struct Instance {
    routing::TeamConfig team;
    std::vector<channel::Position> positions;
    std::vector<routing::FlowSpec> flows;
};

/// 3 nodes: source, relay, destination on a line `spacing` apart.
/// 4 nodes: source and destination 2*spacing apart with relays at
/// (spacing, +-spacing*0.4).
Instance reference_instance(int nodes, double spacing, double margin, double confidence);

} // namespace midnet::oracle
