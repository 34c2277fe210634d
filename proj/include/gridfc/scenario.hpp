#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridfc/dynamics.hpp"
#include "gridfc/lyapunov.hpp"
#include "gridfc/network.hpp"
#include "gridfc/ofc.hpp"

namespace gridfc {

/// Per-bus control configuration as written in the scenario file.
/// Controllable generators get the box [p_set(1-c), p_set(1+c)],
/// controllable loads (p_set <= 0) get [p_set(1+c/2), p_set(1-c/2)];
/// uncontrollable buses are pinned at p_set.
struct ControlSpec {
    std::string kind = "quadratic";
    double gain = 1.0;     ///< R
    double capacity = 0.0; ///< c >= 0
    bool controllable = false;
};

struct ScenarioBus {
    Bus bus;
    ControlSpec control;
    bool in_case1 = false; ///< participates in the generator-only case
    bool in_case2 = false; ///< participates in the generator+load case
};

struct Scenario {
    std::string name;
    NetworkModel model;
    std::vector<ControlLaw> laws;
    std::vector<ScenarioBus> bus_specs;
    std::vector<Disturbance> disturbances;
    double t_end = 10.0;
    double dt = 1e-3;
    int sample_every = 10;
    double lipschitz_delta = 0.01;
};

struct RunReport {
    std::string scenario;
    OfcSolution ofc;                    ///< under the terminal constants
    double terminal_omega = 0.0;        ///< mean terminal deviation, rad/s
    double terminal_hz = 0.0;           ///< 60 + omega/(2 pi)
    double terminal_sync_gap = 0.0;
    std::vector<double> nadir;          ///< per-bus extreme deviation, signed
    double worst_nadir = 0.0;           ///< entry of `nadir` largest in magnitude
    std::optional<double> settling_time; ///< empty when never settled
    Verdict verdict = Verdict::Inconclusive;
    StabilityCertificate certificate;
    std::string trajectory_csv;
    std::string report_json;
    Trajectory trajectory; ///< kept in memory for tests and comparison
};

struct ComparisonReport {
    RunReport case1;
    RunReport case2;
    double capacity_case1 = 0.0;
    double capacity_case2 = 0.0;
    std::string report_json;
};

/// Parses and validates a scenario JSON document. Throws InputError with
/// the offending field(s) on schema violations.
Scenario load_scenario(const std::filesystem::path& path);

/// Starts from the setpoint equilibrium, simulates through the scripted
/// disturbances, certifies the terminal equilibrium, and writes
/// <name>_trajectory.csv plus <name>_report.json under out_dir. The OFC
/// solution, certificate and Lyapunov column all refer to the terminal
/// constants (all disturbances applied).
RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Builds the generator-only case (1) and the generator+load case (2)
/// from the case markers, checks that both offer the same total control
/// capacity, runs both with identical disturbances, and writes a
/// side-by-side report.
ComparisonReport compare_cases(const Scenario& scenario,
                               const std::filesystem::path& out_dir);

/// Total control capacity sum_j (p_max - p_min) of a law set.
double total_capacity(std::span<const ControlLaw> laws);

/// JSON renderings used by the CLI.
std::string ofc_solution_json(const OfcSolution& sol);
std::string certificate_json(const StabilityCertificate& cert);
std::string run_report_json(const RunReport& report);
std::string comparison_report_json(const ComparisonReport& report);
std::string equilibrium_json(const SystemState& state, const OfcSolution& sol);

} // namespace gridfc
