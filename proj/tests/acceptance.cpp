// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include "midnet/channel.hpp"
#include "midnet/connectivity.hpp"
#include "midnet/frames.hpp"
#include "midnet/oracle.hpp"
#include "midnet/planner.hpp"
#include "midnet/routing.hpp"
#include "midnet/sim.hpp"

#include "oracles.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace midnet;
using channel::Position;
using routing::AgentKind;
using routing::TeamConfig;

namespace {

// Tolerances and thresholds.
constexpr double kVarianceTol = 1e-12;
constexpr double kGradientRelTol = 1e-5;
constexpr double kGradientAbsFloor = 1e-9;
constexpr double kFdStep = 1e-4;
constexpr double kOracleSlackTol = 1e-2;
constexpr double kGridResolution = 0.01;
constexpr double kSplitAlpha = 0.05;
constexpr double kDirectAlpha = 0.05;
constexpr int kMaxPlanSteps = 50;
constexpr double kMidpointTol = 0.5;
constexpr double kRangeRatio = 1.5;
constexpr double kPatrolFixedMin = 0.10;
constexpr double kPatrolMobileMax = 0.01;
constexpr double kReplacementGap = 5.0;
constexpr double kReplacementShare = 0.2;
constexpr double kPlanBudgetMs = 350.0;
constexpr double kRoundTripTol = 1e-6;
constexpr double kComposeTol = 1e-10;

// Runtime caps in seconds.
constexpr double kCap1 = 5.0, kCap2 = 60.0, kCap3 = 10.0, kCap4 = 30.0, kCapSim = 300.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Position p2(double x, double y) { return Eigen::Vector2d(x, y); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string scenario_path(const std::string& name) { return std::string(MIDNET_SCENARIO_DIR) + "/" + name + ".yaml"; }

// Simulation runs are shared between criteria 5 to 9.
std::map<std::string, sim::RunResult> g_runs;
std::map<std::string, double> g_run_seconds;

const sim::RunResult& run_cached(const std::string& name, sim::Mode mode) {
    const std::string key = name + "/" + sim::to_string(mode);
    if (auto it = g_runs.find(key); it != g_runs.end()) return it->second;
    auto cfg = sim::load_scenario(scenario_path(name));
    cfg.mode = mode;
    const auto t0 = std::chrono::steady_clock::now();
    auto result = sim::run(cfg);
    g_run_seconds[key] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g_runs.emplace(key, std::move(result)).first->second;
}

double run_seconds(const std::string& name) {
    return g_run_seconds[name + "/fixed"] + g_run_seconds[name + "/mobile"];
}

Outcome channel_model() {
    const channel::ChannelParams p;
    bool monotone = true;
    double prev = channel::mean_rate(p, p2(0, 0), p2(1e-3, 0));
    const int n = 100000;
    for (int i = 1; i <= n; ++i) {
        const double d = 1e-3 * std::pow(500.0 / 1e-3, static_cast<double>(i) / n);
        const double r = channel::mean_rate(p, p2(0, 0), p2(d, 0));
        monotone &= r <= prev;
        prev = r;
    }
    monotone &= channel::mean_rate(p, p2(0, 0), p2(500, 0)) < channel::mean_rate(p, p2(0, 0), p2(1, 0));

    const double v1 = channel::rate_variance(p, p2(0, 0), p2(0.6, 0));
    const double v2 = channel::rate_variance(p, p2(0, 0), p2(11.4, 0));
    const bool variance = std::abs(v1 - 0.1) <= kVarianceTol && std::abs(v2 - 0.19) <= kVarianceTol;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-60.0, 60.0);
    double worst = 0.0;
    int pairs = 0;
    while (pairs < 10000) {
        const Position xi = p2(coord(rng), coord(rng)), xj = p2(coord(rng), coord(rng));
        if ((xi - xj).norm() < 0.05) continue;
        ++pairs;
        const auto [gi, gj] = channel::mean_rate_gradient(p, xi, xj);
        const auto fd = oracles::central_difference([&](const Eigen::VectorXd& x) { return channel::mean_rate(p, x, xj); },
                                                    xi, kFdStep);
        const double err = (gi - fd).norm() / std::max(fd.norm(), kGradientAbsFloor / kGradientRelTol);
        worst = std::max(worst, err);
    }
    return {monotone && variance && worst <= kGradientRelTol,
            fmt("monotone=%d var(0.6)=%.15g var(11.4)=%.15g worst_grad_rel=%.2e", monotone, v1, v2, worst)};
}

Outcome routing_oracle() {
    const auto inst = oracle::reference_instance(3, 8.0, 0.2, 0.7);
    const auto rates = channel::estimate_rates({}, inst.positions);
    const auto sol = routing::solve_routing(routing::build_socp(inst.team, inst.flows, rates));
    oracle::GridOptions opts;
    opts.resolution = kGridResolution;
    const auto grid = oracle::grid_routing(inst.team, inst.flows, rates, opts);
    const double gap = std::abs(sol.slack - grid.slack);
    return {gap <= kOracleSlackTol, fmt("solver=%.6f grid=%.6f gap=%.2e", sol.slack, grid.slack, gap)};
}

Outcome dichotomy() {
    const auto team = TeamConfig::all_active({AgentKind::Task, AgentKind::Task, AgentKind::Network, AgentKind::Network});
    const auto rates = channel::estimate_rates({}, std::vector{p2(0, 0), p2(10, 0), p2(5, 2), p2(5, -2)});
    const auto split = routing::solve_routing(routing::build_socp(team, {{1, {{0, 0.2, 0.95}}}}, rates));
    int used = 0;
    for (int j = 1; j < 4; ++j) used += split.alpha[0](0, j) >= kSplitAlpha;
    const auto relay = routing::solve_routing(routing::build_socp(team, {{1, {{0, 0.5, 0.7}}}}, rates));
    const double direct = relay.alpha[0](0, 1);
    return {used >= 2 && direct <= kDirectAlpha,
            fmt("(0.2,0.95) links>=%.2f: %d; (0.5,0.7) direct alpha=%.4f", kSplitAlpha, used, direct)};
}

Outcome fixed_point() {
    const auto team = TeamConfig::all_active({AgentKind::Task, AgentKind::Task, AgentKind::Network});
    std::vector<Position> pos = {p2(0, 0), p2(40, 0), p2(10, 5)};
    const std::vector<routing::FlowSpec> flows = {{1, {{0, 0.2, 0.7}}}};
    planner::PlannerConfig config;
    config.trust_region_m = 2.0;
    const double start = connectivity::exact_fiedler({}, team, pos);
    int steps = 0;
    while (steps < kMaxPlanSteps && (pos[2] - p2(20, 0)).norm() > kMidpointTol) {
        const auto out = planner::plan_step(pos, team, flows, config);
        for (const auto& w : out.connectivity.waypoints) pos[static_cast<std::size_t>(w.agent)] = w.pos;
        ++steps;
    }
    const double end = connectivity::exact_fiedler({}, team, pos);
    const double dist = (pos[2] - p2(20, 0)).norm();
    return {dist <= kMidpointTol && end >= start,
            fmt("steps=%d relay=(%.3f, %.3f) dist=%.3f lambda2 %.4g -> %.4g", steps, pos[2](0), pos[2](1), dist, start, end)};
}

Outcome range_extension() {
    const auto& fixed = run_cached("range_extension", sim::Mode::Fixed).summary;
    const auto& mobile = run_cached("range_extension", sim::Mode::Mobile).summary;
    const double ratio = fixed.max_range_m > 0.0 ? mobile.max_range_m / fixed.max_range_m : 0.0;
    return {ratio >= kRangeRatio && run_seconds("range_extension") < kCapSim,
            fmt("sustained range fixed=%.2f m mobile=%.2f m ratio=%.2f", fixed.max_range_m, mobile.max_range_m, ratio)};
}

Outcome patrol() {
    const auto& fixed = run_cached("patrol", sim::Mode::Fixed).summary;
    const auto& mobile = run_cached("patrol", sim::Mode::Mobile).summary;
    return {fixed.outage_fraction >= kPatrolFixedMin && mobile.outage_fraction <= kPatrolMobileMax &&
                run_seconds("patrol") < kCapSim,
            fmt("outage fixed=%.4f mobile=%.4f", fixed.outage_fraction, mobile.outage_fraction)};
}

Outcome replacement() {
    const auto& fixed = run_cached("replacement", sim::Mode::Fixed).summary;
    const auto& mobile = run_cached("replacement", sim::Mode::Mobile).summary;
    const bool gap = fixed.reduced_team_longest_outage_s > kReplacementGap;
    const bool share = mobile.reduced_team_outage_s <= kReplacementShare * fixed.reduced_team_outage_s;
    return {gap && share && run_seconds("replacement") < kCapSim,
            fmt("reduced window %.2f s: fixed longest=%.2f s total=%.2f s; mobile total=%.2f s", fixed.reduced_team_s,
                fixed.reduced_team_longest_outage_s, fixed.reduced_team_outage_s, mobile.reduced_team_outage_s)};
}

Outcome cadence() {
    double worst = 0.0;
    int plans = 0;
    for (auto mode : {sim::Mode::Fixed, sim::Mode::Mobile}) {
        const auto& r = run_cached("replacement", mode);
        for (const auto& p : r.plans) worst = std::max(worst, p.wall_ms);
        plans += static_cast<int>(r.plans.size());
    }
    return {plans > 0 && worst <= kPlanBudgetMs, fmt("plans=%d max plan_step=%.1f ms", plans, worst)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "midnet_acceptance";
    bool same = true;
    std::string detail;
    for (const char* name : {"minimal", "range_extension", "patrol", "replacement"}) {
        auto cfg = sim::load_scenario(scenario_path(name));
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto dir = root / (std::string(name) + std::to_string(rep));
            std::filesystem::remove_all(dir);
            sim::write_outputs(cfg, sim::run(cfg), dir.string());
            bytes[rep] = slurp(dir / "records.jsonl");
        }
        const bool eq = !bytes[0].empty() && bytes[0] == bytes[1];
        same &= eq;
        detail += fmt("%s=%s ", name, eq ? "identical" : "DIFFERENT");
    }
    std::filesystem::remove_all(root);
    return {same, detail};
}

frames::RigidTransform random_transform(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    frames::RigidTransform h;
    h.rotation = q.toRotationMatrix();
    h.translation = Eigen::Vector3d(n(rng), n(rng), n(rng)) * 100.0;
    return h;
}

Outcome frames_check() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180), off(-1000, 1000), alt(-100, 3000);
    double round_trip = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const frames::Geodetic ref{lat(rng), lon(rng), alt(rng)};
        Eigen::Vector3d enu(off(rng), off(rng), off(rng) * 0.2);
        if (enu.norm() > 1000.0) enu *= 1000.0 / enu.norm();
        round_trip = std::max(round_trip, (frames::geodetic_to_enu(frames::enu_to_geodetic(enu, ref), ref) - enu).norm());
    }
    std::uniform_real_distribution<double> pt(-50, 50);
    double chain = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto g_r = random_transform(rng), g_p = random_transform(rng), i_p = random_transform(rng);
        const auto composed = frames::compose_common_frame(g_r, g_p, i_p);
        const Eigen::Vector3d x(pt(rng), pt(rng), pt(rng));
        const Eigen::Vector3d in_init = i_p.rotation.transpose() * (x - i_p.translation);
        const Eigen::Vector3d in_global = g_p.rotation * in_init + g_p.translation;
        const Eigen::Vector3d in_ref = g_r.rotation.transpose() * (in_global - g_r.translation);
        chain = std::max(chain, (composed.apply(x) - in_ref).norm());
    }
    return {round_trip <= kRoundTripTol && chain <= kComposeTol,
            fmt("round trip max=%.2e m, composition max=%.2e m", round_trip, chain)};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
        double cap_s;
    };
    const std::vector<Criterion> criteria = {
        {1, "channel model", channel_model, kCap1},
        {2, "routing oracle equivalence", routing_oracle, kCap2},
        {3, "diamond dichotomy", dichotomy, kCap3},
        {4, "connectivity fixed point", fixed_point, kCap4},
        {5, "range extension", range_extension, 0.0},
        {6, "patrol", patrol, 0.0},
        {7, "replacement", replacement, 0.0},
        {8, "planner cadence", cadence, 0.0},
        {9, "determinism", determinism, 0.0},
        {10, "frames", frames_check, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.cap_s > 0.0 && secs >= c.cap_s) {
            o.pass = false;
            o.detail += fmt(" (over %.0f s cap)", c.cap_s);
        }
        failures += !o.pass;
        std::printf("%s criterion %d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
