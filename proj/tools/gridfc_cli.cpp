// Command-line front end: loads a scenario file and runs one of the
// solver/simulation/certification pipelines. Exit codes: 0 success,
// 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <exception>
#include <iostream>
#include <string>

#include "gridfc/errors.hpp"
#include "gridfc/scenario.hpp"

namespace {

struct Options {
    std::string scenario_path;
    std::string out_dir = ".";
    double dt = 0.0;    // 0 = keep scenario value
    double t_end = 0.0; // 0 = keep scenario value
    long seed = 0;      // reserved for randomized test tooling
};

gridfc::Scenario load_with_overrides(const Options& opt) {
    gridfc::Scenario sc = gridfc::load_scenario(opt.scenario_path);
    if (opt.dt > 0.0) sc.dt = opt.dt;
    if (opt.t_end > 0.0) sc.t_end = opt.t_end;
    const long steps = std::lround(sc.t_end / sc.dt);
    if (steps >= 1 && steps % sc.sample_every != 0) sc.sample_every = 1;
    return sc;
}

// OFC problem under the terminal constants (all disturbances applied),
// the steady state `simulate` converges to.
gridfc::OfcSolution terminal_ofc(const gridfc::Scenario& sc) {
    std::vector<gridfc::OfcBus> buses;
    std::vector<double> constants(static_cast<size_t>(sc.model.n_buses()), 0.0);
    for (const gridfc::Disturbance& d : sc.disturbances)
        constants[static_cast<size_t>(d.bus)] += d.delta_p;
    for (int j = 0; j < sc.model.n_buses(); ++j)
        buses.push_back(gridfc::OfcBus{sc.laws[static_cast<size_t>(j)],
                                       sc.model.bus(j).damping,
                                       constants[static_cast<size_t>(j)]});
    return gridfc::OfcProblem(std::move(buses)).solve();
}

std::vector<double> terminal_constants(const gridfc::Scenario& sc) {
    std::vector<double> constants(static_cast<size_t>(sc.model.n_buses()), 0.0);
    for (const gridfc::Disturbance& d : sc.disturbances)
        constants[static_cast<size_t>(d.bus)] += d.delta_p;
    return constants;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized primary frequency control: simulator, dispatch "
                 "solver and stability certifier"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--out-dir", opt.out_dir, "Directory for CSV/JSON outputs");
    app.add_option("--dt", opt.dt, "Override the scenario integration step, s");
    app.add_option("--t-end", opt.t_end, "Override the scenario horizon, s");
    app.add_option("--seed", opt.seed, "Reserved for randomized test tooling");

    auto add_scenario_arg = [&](CLI::App* cmd) {
        cmd->add_option("scenario", opt.scenario_path, "Scenario JSON file")->required();
    };

    CLI::App* cmd_ofc =
        app.add_subcommand("ofc", "Solve the dispatch problem the equilibrium satisfies");
    CLI::App* cmd_eq =
        app.add_subcommand("equilibrium", "Compute the closed-loop equilibrium state");
    CLI::App* cmd_sim =
        app.add_subcommand("simulate", "Integrate the closed loop and write reports");
    CLI::App* cmd_cert =
        app.add_subcommand("certify", "Evaluate the stability certificate");
    CLI::App* cmd_cmp = app.add_subcommand(
        "compare", "Run the generator-only and generator+load cases side by side");
    for (CLI::App* c : {cmd_ofc, cmd_eq, cmd_sim, cmd_cert, cmd_cmp}) add_scenario_arg(c);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_ofc->parsed()) {
            const gridfc::Scenario sc = load_with_overrides(opt);
            std::cout << gridfc::ofc_solution_json(terminal_ofc(sc)) << std::endl;
        } else if (cmd_eq->parsed()) {
            const gridfc::Scenario sc = load_with_overrides(opt);
            const auto constants = terminal_constants(sc);
            const auto [state, sol] = gridfc::equilibrium(sc.model, sc.laws, constants);
            std::cout << gridfc::equilibrium_json(state, sol) << std::endl;
        } else if (cmd_cert->parsed()) {
            const gridfc::Scenario sc = load_with_overrides(opt);
            const auto constants = terminal_constants(sc);
            const auto [state, sol] = gridfc::equilibrium(sc.model, sc.laws, constants);
            const gridfc::StabilityCertificate cert =
                gridfc::certify(sc.model, sc.laws, state, sc.lipschitz_delta);
            std::cout << gridfc::certificate_json(cert) << std::endl;
        } else if (cmd_sim->parsed()) {
            const gridfc::Scenario sc = load_with_overrides(opt);
            const gridfc::RunReport report = gridfc::run_scenario(sc, opt.out_dir);
            std::cout << gridfc::run_report_json(report) << std::endl;
        } else if (cmd_cmp->parsed()) {
            const gridfc::Scenario sc = load_with_overrides(opt);
            const gridfc::ComparisonReport report = gridfc::compare_cases(sc, opt.out_dir);
            std::cout << gridfc::comparison_report_json(report) << std::endl;
        }
    } catch (const gridfc::InputError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const gridfc::NumericalError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 3;
    }
    return 0;
}
