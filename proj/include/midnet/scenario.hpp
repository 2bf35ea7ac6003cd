#pragma once

#include "midnet/channel.hpp"
#include "midnet/error.hpp"
#include "midnet/frames.hpp"
#include "midnet/planner.hpp"
#include "midnet/routing.hpp"
#include "midnet/trajectory.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace midnet::sim {

enum class Mode { Mobile, Fixed };

const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct AgentFrame {
    frames::Geodetic ref_geodetic;   ///< common reference
    frames::Geodetic init_geodetic;  ///< where the agent's local frame was initialized
};

struct AgentSpec {
    std::string id;
    routing::AgentKind kind = routing::AgentKind::Task;
    Position position;  ///< common-frame initial position (already frame-mapped)
    TrajectorySpec trajectory = Hover{};
    double t_on = 0.0;
    double t_off = std::numeric_limits<double>::infinity();
    std::optional<AgentFrame> frame;

    bool active_at(double t) const { return t_on <= t && t < t_off; }
};

struct ScenarioConfig {
    std::string name;
    int dimension = 2;
    double duration_s = 60.0;
    double dt_s = 0.05;
    std::uint64_t seed = 1;
    Mode mode = Mode::Mobile;
    double v_max = 2.0;
    /// Period of the Bernoulli routing-table resampling.
    double table_period_s = 0.5;
    planner::PlannerConfig planner;
    std::vector<AgentSpec> agents;
    std::vector<routing::FlowSpec> flows;  ///< agent indices into `agents`

    int index_of(const std::string& id) const;  ///< -1 when absent
    routing::TeamConfig team_at(double t) const;
    /// Throws ScenarioError naming the offending key.
    void validate() const;
};

/// Validation or parse failure; `key` is the dotted path of the bad entry and
/// `line` is 1-based (0 when unknown).
class ScenarioError : public InvalidArgument {
public:
    ScenarioError(std::string key, int line, const std::string& message);
    const std::string& key() const { return key_; }
    int line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    std::string key_;
    int line_;
    std::string message_;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& source_name = "<string>");

} // namespace midnet::sim
