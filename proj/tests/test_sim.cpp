#include "midnet/serialize.hpp"
#include "midnet/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace midnet;
using namespace midnet::sim;

namespace {

std::string scenario_path(const std::string& name) { return std::string(MIDNET_SCENARIO_DIR) + "/" + name + ".yaml"; }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Position p2(double x, double y) { return Eigen::Vector2d(x, y); }

// Largest finite-difference speed over [0, horizon] at step h.
double sampled_speed(const Trajectory& traj, double horizon, double h) {
    double worst = 0.0;
    Position prev = traj.at(0.0);
    for (double t = h; t <= horizon; t += h) {
        const Position cur = traj.at(t);
        worst = std::max(worst, (cur - prev).norm() / h);
        prev = cur;
    }
    return worst;
}

const char* kBase = R"(name: test
dimension: 2
duration_s: 2
dt_s: 0.05
seed: 3
mode: mobile
agents:
  - id: a
    kind: task
    position: [0, 0]
  - id: b
    kind: task
    position: [12, 0]
  - id: r
    kind: network
    position: [6, 2]
flows:
  - destination: b
    demands:
      - {node: a, margin: 0.2, confidence: 0.7}
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

} // namespace

TEST_CASE("trajectories respect their speed bound and are continuous") {
    const std::vector<std::pair<TrajectorySpec, Position>> cases = {
        {Hover{}, p2(1, 2)},
        {WaypointPath{{p2(10, 0), p2(10, 10), p2(0, 10)}, 1.5, true}, p2(0, 0)},
        {SquareWave{50.0, 12.5, 50.0, 1.0}, p2(-25, -25)},
        {Rose{p2(0, 0), 9.0, 0.05, 1.0}, p2(0, 0)},
        {Scripted{{0.0, 10.0, 20.0}, {p2(0, 0), p2(5, 0), p2(5, 5)}}, p2(0, 0)},
    };
    for (const auto& [spec, start] : cases) {
        const Trajectory traj(spec, start);
        const double speed = sampled_speed(traj, 400.0, 0.01);
        CHECK(speed <= traj.max_speed() * (1.0 + 1e-6) + 1e-9);
        // No jumps larger than the bound allows over one step.
        CHECK(speed < 1e3);
    }
}

TEST_CASE("rose trajectory shape") {
    const Rose rose{p2(3, -1), 9.0, 0.05, 0.0};
    const Trajectory traj(rose, p2(0, 0));
    CHECK(traj.max_speed() == doctest::Approx(2.0 * 0.05 * 9.0));
    for (double t = 0.0; t < 130.0; t += 0.7) {
        const double theta = 0.05 * t;
        const Position p = traj.at(t) - rose.center;
        const double r = 9.0 * std::cos(2.0 * theta);
        CHECK(p(0) == doctest::Approx(r * std::cos(theta)).epsilon(1e-12));
        CHECK(p(1) == doctest::Approx(r * std::sin(theta)).epsilon(1e-12));
    }
}

TEST_CASE("square wave sweep covers rows and returns") {
    const Trajectory traj(SquareWave{50.0, 12.5, 50.0, 1.0}, p2(-25, -25));
    CHECK((traj.at(0.0) - p2(-25, -25)).norm() <= 1e-12);
    CHECK((traj.at(50.0) - p2(25, -25)).norm() <= 1e-9);
    CHECK((traj.at(62.5) - p2(25, -12.5)).norm() <= 1e-9);
    // Total length: 5 legs of 50 m and 4 shifts of 12.5 m, then back.
    CHECK((traj.at(300.0) - p2(25, 25)).norm() <= 1e-9);
    CHECK((traj.at(600.0) - p2(-25, -25)).norm() <= 1e-9);
}

TEST_CASE("scripted trajectory interpolates and holds") {
    const Trajectory traj(Scripted{{0.0, 10.0}, {p2(0, 0), p2(10, 0)}}, p2(0, 0));
    CHECK((traj.at(2.5) - p2(2.5, 0)).norm() <= 1e-12);
    CHECK((traj.at(50.0) - p2(10, 0)).norm() <= 1e-12);
}

TEST_CASE("bundled scenarios load and validate") {
    for (const char* name : {"minimal", "range_extension", "patrol", "replacement"}) {
        const auto cfg = load_scenario(scenario_path(name));
        CHECK_NOTHROW(cfg.validate());
        CHECK(cfg.name == name);
    }
    const auto cfg = load_scenario(scenario_path("minimal"));
    CHECK(cfg.agents.size() == 3);
    CHECK(cfg.index_of("relay") == 2);
    CHECK(cfg.index_of("nobody") == -1);
    REQUIRE(cfg.flows.size() == 1);
    CHECK(cfg.flows[0].destination == 1);
    CHECK(cfg.flows[0].demands[0].node == 0);
}

TEST_CASE("scenario errors name the key and line") {
    CHECK_NOTHROW(parse_scenario(kBase));
    try {
        parse_scenario(replace(kBase, "dt_s: 0.05", "dt_s: 0"));
        FAIL("expected a ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(e.key() == "dt_s");
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("dt_s") != std::string::npos);
    }
    try {
        parse_scenario(replace(kBase, "destination: b", "destination: zz"));
        FAIL("expected a ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(e.key() == "flows[0].destination");
        CHECK(e.line() == 18);
    }
    try {
        parse_scenario(replace(kBase, "seed: 3", "seeed: 3"));
        FAIL("expected a ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(e.key() == "seeed");
        CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(parse_scenario(replace(kBase, "mode: mobile", "mode: flying")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(replace(kBase, "{node: a,", "{node: r,")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(replace(kBase, "position: [6, 2]", "position: [6, 2]\n    trajectory: {type: rose}")),
                    ScenarioError);
    CHECK_THROWS_AS(parse_scenario(replace(kBase, "position: [0, 0]", "position: [0, 0]\n    trajectory: "
                                                                     "{type: waypoints, points: [[50, 0]], speed: 3}")),
                    ScenarioError);
    CHECK_THROWS_AS(parse_scenario("name: [unclosed"), ScenarioError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), InvalidArgument);
}

TEST_CASE("frame block maps local positions into the common frame") {
    const frames::Geodetic ref{45.0, 7.0, 200.0}, init{45.0001, 7.0002, 200.0};
    std::ostringstream frame;
    frame.precision(17);
    frame << "position: [0, 0]\n    frame: {ref_geodetic: [" << ref.lat << ", " << ref.lon << ", " << ref.alt
          << "], init_geodetic: [" << init.lat << ", " << init.lon << ", " << init.alt << "]}";
    const auto cfg = parse_scenario(replace(kBase, "position: [0, 0]", frame.str()));
    const Eigen::Vector3d expected = frames::geodetic_to_enu(init, ref);
    REQUIRE(cfg.agents[0].frame.has_value());
    CHECK(cfg.agents[0].position.size() == 2);
    CHECK(cfg.agents[0].position(0) == doctest::Approx(expected(0)).epsilon(1e-9));
    CHECK(cfg.agents[0].position(1) == doctest::Approx(expected(1)).epsilon(1e-9));
    CHECK(std::abs(expected(0)) > 10.0);
}

TEST_CASE("activity windows") {
    auto cfg = load_scenario(scenario_path("replacement"));
    const int nw = cfg.index_of("relay_nw"), sub = cfg.index_of("substitute");
    CHECK(cfg.agents[nw].active_at(14.9));
    CHECK_FALSE(cfg.agents[nw].active_at(15.0));
    CHECK_FALSE(cfg.agents[nw].active_at(15.1));
    CHECK_FALSE(cfg.agents[sub].active_at(26.9));
    CHECK(cfg.agents[sub].active_at(27.0));
    CHECK_FALSE(cfg.team_at(15.1).is_active(nw));
    const auto team = cfg.team_at(15.1);
    int active_network = 0;
    for (int i = 0; i < team.size(); ++i) active_network += team.is_active(i) && team.kinds[i] == routing::AgentKind::Network;
    CHECK(active_network == 3);
}

TEST_CASE("step kinematics") {
    CHECK((move_toward(p2(0, 0), p2(3, 4), 10.0) - p2(3, 4)).norm() == 0.0);
    CHECK((move_toward(p2(0, 0), p2(3, 4), 1.0) - p2(0.6, 0.8)).norm() <= 1e-15);

    auto cfg = parse_scenario(kBase);
    const auto trajectories = make_trajectories(cfg);
    auto state = initial_state(cfg, trajectories);
    const double half = cfg.v_max * cfg.dt_s / 2.0;
    std::vector<std::optional<Position>> targets(3);
    targets[2] = Position(state.positions[2] + p2(half, 0));
    const auto next = step(cfg, trajectories, state, targets);
    CHECK(next.step == 1);
    CHECK(next.t == doctest::Approx(cfg.dt_s));
    CHECK((next.positions[2] - *targets[2]).norm() == 0.0);

    targets[2] = Position(state.positions[2] + p2(100, 0));
    const auto far = step(cfg, trajectories, state, targets);
    CHECK((far.positions[2] - state.positions[2]).norm() == doctest::Approx(cfg.v_max * cfg.dt_s));

    cfg.mode = Mode::Fixed;
    const auto frozen = step(cfg, trajectories, state, targets);
    CHECK((frozen.positions[2] - state.positions[2]).norm() == 0.0);
}

TEST_CASE("realized rates") {
    channel::ChannelParams zero_var;
    zero_var.var_scale = 0.0;
    const std::vector<Position> pos = {p2(0, 0), p2(8, 0), p2(0, 20)};
    const auto r = realize_rates(zero_var, pos, 5, 0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i != j) CHECK(r(i, j) == doctest::Approx(channel::mean_rate(zero_var, pos[i], pos[j])).epsilon(1e-14));
        }
    }

    // Small variance so the clip at 0 and 1 is practically never active.
    channel::ChannelParams params;
    params.var_scale = 0.005;
    const std::vector<Position> pair = {p2(0, 0), p2(9, 0)};
    const double mean = channel::mean_rate(params, pair[0], pair[1]);
    const double var = channel::rate_variance(params, pair[0], pair[1]);
    const double sd = std::sqrt(var);
    REQUIRE(mean - 4.5 * sd > 0.0);
    REQUIRE(mean + 4.5 * sd < 1.0);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < n; ++s) {
        const double x = realize_rates(params, pair, 17, static_cast<std::uint64_t>(s))(0, 1);
        sum += x;
        sq += x * x;
    }
    const double m = sum / n;
    CHECK(std::abs(m - mean) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(sq / n - m * m == doctest::Approx(var).epsilon(0.02));

    const std::vector<Position> close = {p2(0, 0), p2(0.5, 0)};
    params.var_scale = 0.2;
    for (int s = 0; s < 2000; ++s) {
        const auto c = realize_rates(params, close, 3, static_cast<std::uint64_t>(s));
        CHECK(c(0, 1) >= 0.0);
        CHECK(c(0, 1) <= 1.0);
    }
    CHECK(realize_rates(params, pair, 1, 2) == realize_rates(params, pair, 1, 2));
    CHECK(realize_rates(params, pair, 1, 2) != realize_rates(params, pair, 1, 3));
}

TEST_CASE("simulation invariants on the patrol scenario") {
    auto cfg = load_scenario(scenario_path("patrol"));
    cfg.duration_s = 30.0;
    const auto result = run(cfg);
    REQUIRE(!result.records.empty());
    const double bound = cfg.v_max * cfg.dt_s * (1.0 + 1e-9) + 1e-12;
    for (std::size_t s = 1; s < result.records.size(); ++s) {
        const auto& prev = result.records[s - 1];
        const auto& cur = result.records[s];
        CHECK(cur.t == doctest::Approx(static_cast<double>(cur.step) * cfg.dt_s));
        for (std::size_t i = 0; i < cur.positions.size(); ++i) {
            CHECK((cur.positions[i] - prev.positions[i]).norm() <= bound);
        }
    }
    for (const auto& rec : result.records) {
        for (int k = 0; k < rec.qos.flows(); ++k) {
            double total = 0.0;
            for (int i = 0; i < rec.qos.agents(); ++i) total += rec.qos(k, i).flow_mean;
            CHECK(std::abs(total) <= 1e-9);
        }
    }
    CHECK(result.summary.plans == static_cast<int>(result.plans.size()));
}

TEST_CASE("simulation is deterministic for a seed") {
    auto cfg = load_scenario(scenario_path("replacement"));
    cfg.duration_s = 5.0;
    const auto a = run(cfg);
    const auto b = run(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t s = 0; s < a.records.size(); ++s) {
        CHECK(to_json(a.records[s]).dump() == to_json(b.records[s]).dump());
    }
    cfg.seed += 1;
    const auto c = run(cfg);
    bool differs = false;
    for (std::size_t s = 0; s < a.records.size(); ++s) differs |= a.records[s].realized != c.records[s].realized;
    CHECK(differs);
}

TEST_CASE("mobile relays do no worse than fixed ones on the bundled scenarios") {
    for (const char* name : {"range_extension", "patrol", "replacement"}) {
        auto cfg = load_scenario(scenario_path(name));
        cfg.mode = Mode::Fixed;
        const auto fixed = run(cfg).summary;
        cfg.mode = Mode::Mobile;
        const auto mobile = run(cfg).summary;
        INFO(name);
        CHECK(fixed.outage_fraction > 0.0);
        CHECK(mobile.outage_fraction <= fixed.outage_fraction);
        if (std::string(name) == "patrol") CHECK(mobile.outage_fraction <= 0.01);
    }
}

TEST_CASE("outputs are written and round trip") {
    auto cfg = load_scenario(scenario_path("minimal"));
    cfg.duration_s = 1.0;
    const auto result = run(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "midnet_test_outputs";
    std::filesystem::remove_all(dir);
    write_outputs(cfg, result, dir.string());
    for (const char* f : {"records.jsonl", "plans.jsonl", "summary.json", "scenario.json", "positions.csv"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    std::istringstream records(read_file(dir / "records.jsonl"));
    std::string line;
    int count = 0;
    while (std::getline(records, line)) {
        const auto j = Json::parse(line);
        CHECK(j.contains("t"));
        ++count;
    }
    CHECK(count == static_cast<int>(result.records.size()));
    const auto summary = Json::parse(read_file(dir / "summary.json"));
    CHECK(summary.is_object());

    REQUIRE(!result.plans.empty());
    const auto& plan = result.plans.front().output;
    const auto routing = routing_solution_from_json(to_json(plan.routing));
    CHECK(routing.slack == plan.routing.slack);
    REQUIRE(routing.alpha.size() == plan.routing.alpha.size());
    for (std::size_t k = 0; k < routing.alpha.size(); ++k) CHECK(routing.alpha[k] == plan.routing.alpha[k]);
    const auto conn = connectivity_result_from_json(to_json(plan.connectivity));
    CHECK(conn.gamma == plan.connectivity.gamma);
    REQUIRE(conn.waypoints.size() == plan.connectivity.waypoints.size());
    for (std::size_t w = 0; w < conn.waypoints.size(); ++w) {
        CHECK(conn.waypoints[w].agent == plan.connectivity.waypoints[w].agent);
        CHECK(conn.waypoints[w].pos == plan.connectivity.waypoints[w].pos);
    }
    std::filesystem::remove_all(dir);
}
