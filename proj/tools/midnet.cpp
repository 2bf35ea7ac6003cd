#include "midnet/oracle.hpp"
#include "midnet/scenario.hpp"
#include "midnet/serialize.hpp"
#include "midnet/sim.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

int run_command(const std::string& scenario, const std::optional<std::string>& mode,
                const std::optional<std::uint64_t>& seed, const std::string& out) {
    auto config = midnet::sim::load_scenario(scenario);
    if (mode) config.mode = midnet::sim::parse_mode(*mode);
    if (seed) config.seed = *seed;
    const auto result = midnet::sim::run(config);
    midnet::sim::write_outputs(config, result, out);
    const auto& s = result.summary;
    std::cout << "scenario " << (config.name.empty() ? scenario : config.name) << " mode "
              << midnet::sim::to_string(config.mode) << " seed " << config.seed << '\n'
              << "  steps " << result.records.size() << ", plans " << s.plans << " (" << s.infeasible_plans
              << " infeasible), max plan " << s.max_plan_ms << " ms\n"
              << "  outage_fraction " << s.outage_fraction << ", min_q " << s.min_q << ", mean_q " << s.mean_q
              << ", max_range_m " << s.max_range_m << '\n'
              << "  outputs in " << out << '\n';
    return 0;
}

int validate_command(const std::string& scenario) {
    const auto config = midnet::sim::load_scenario(scenario);
    std::cout << scenario << ": ok (" << config.agents.size() << " agents, " << config.flows.size() << " flows)\n";
    return 0;
}

int oracle_command(int nodes, double resolution, double spacing, double margin, double confidence) {
    const auto inst = midnet::oracle::reference_instance(nodes, spacing, margin, confidence);
    const auto rates = midnet::channel::estimate_rates({}, inst.positions);
    midnet::oracle::GridOptions opts;
    opts.resolution = resolution;
    const auto grid = midnet::oracle::grid_routing(inst.team, inst.flows, rates, opts);
    midnet::Json out = midnet::to_json(midnet::routing::RoutingSolution{grid.alpha, grid.slack});
    out["evaluated"] = grid.evaluated;
    try {
        const auto sol = midnet::routing::solve_routing(midnet::routing::build_socp(inst.team, inst.flows, rates));
        out["solver_s"] = sol.slack;
    } catch (const midnet::routing::RoutingInfeasible& e) {
        out["solver_s"] = e.best_effort.slack;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mobile wireless infrastructure planner and simulator"};
    app.require_subcommand(1);

    std::string run_scenario, run_out;
    std::optional<std::string> run_mode;
    std::optional<std::uint64_t> run_seed;
    auto* run = app.add_subcommand("run", "Run a closed-loop simulation");
    run->add_option("--scenario", run_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", run_mode, "Override the scenario mode")->check(CLI::IsMember({"mobile", "fixed"}));
    run->add_option("--seed", run_seed, "Override the scenario seed");
    run->add_option("--out", run_out, "Output directory")->required();

    std::string val_scenario;
    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("--scenario", val_scenario, "Scenario file")->required()->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("oracle", "Brute-force reference solvers");
    oracle->require_subcommand(1);
    int nodes = 3;
    double resolution = 0.01, spacing = 8.0, margin = 0.2, confidence = 0.7;
    auto* oracle_routing = oracle->add_subcommand("routing", "Grid search over routing variables");
    oracle_routing->add_option("--nodes", nodes, "3 (line) or 4 (diamond)")->check(CLI::IsMember({3, 4}));
    oracle_routing->add_option("--resolution", resolution, "Grid step, must divide 1");
    oracle_routing->add_option("--spacing", spacing, "Hop length in meters");
    oracle_routing->add_option("--margin", margin, "Rate margin of the source");
    oracle_routing->add_option("--confidence", confidence, "Confidence of the source demand");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return run_command(run_scenario, run_mode, run_seed, run_out);
        if (*validate) return validate_command(val_scenario);
        if (*oracle_routing) return oracle_command(nodes, resolution, spacing, margin, confidence);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
