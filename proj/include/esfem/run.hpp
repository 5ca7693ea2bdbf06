#pragma once

#include "esfem/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace esfem {

struct RunFlags {
    bool deterministic = false;        // no wall-clock values in the log or summary
    std::optional<std::string> out;    // overrides output.dir
    std::optional<int> snapshot_every; // overrides output.snapshot_every
    std::ostream* progress = nullptr;  // one line per accepted step
};

struct RunOutputs {
    std::string dir;
    std::string csv;
    std::string log;
    std::string summary;
    std::string scenario_copy;
    std::vector<std::string> snapshots;
    RunRecord record;
    double peak_force = 0.0;            // reported units
    double peak_displacement = 0.0;
    double failure_displacement = 0.0;  // fracture point, or the last accepted step
    double interface_share = 0.0;       // interface surface energy / surface energy at the last step
    double achieved_h_f = 0.0;
    int max_level = 0;
};

/// Runs a scenario and writes curve.csv, run.log, summary.txt, scenario.scn and VTK snapshots.
/// An abort still writes every file; summary.txt then carries `status = aborted` and the reason.
/// Exceptions are rethrown after summary.txt records `status = error`.
RunOutputs run(const Scenario& scenario, const RunFlags& flags = {});

/// Reads the step records back from curve.csv.
struct CurvePoint {
    int step = 0;
    double time = 0, displacement = 0, force = 0;
    int elements = 0;
    double strain_energy = 0, surface_energy = 0, dissipation = 0;
};
std::vector<CurvePoint> read_curve(const std::string& path);

/// A metric window from an expectation file: `metric <name> min <lo> max <hi> source <tag>`,
/// or `ordering <name> decreasing source <tag>` for sweeps.
struct Expectation {
    std::string metric;
    double lo = 0.0, hi = 0.0;
    bool ordering = false;
    std::string source;
};

struct ExpectationSet {
    std::string preset;
    std::string sweep_key;             // geometry key varied by a sweep, empty otherwise
    std::vector<double> sweep_values;
    std::vector<std::pair<std::string, std::string>> settings;  // `set <key> <value>` lines
    std::vector<Expectation> checks;
};

ExpectationSet read_expectations(const std::string& path);

struct BenchRequest {
    std::string name;           // preset, or an expectation file stem such as double_edge_notch_sweep
    std::string tier = "desk";  // desk | full
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string expectations_dir = ESFEM_BENCH_DIR;
    std::string out_dir = "bench_out";
    std::ostream* progress = nullptr;
};

struct BenchCheck {
    std::string metric;
    double value = 0.0;
    std::string window;
    bool pass = false;
    std::string source;
};

struct BenchReport {
    std::vector<RunOutputs> runs;
    std::vector<BenchCheck> checks;
    std::string report_path;
    bool all_pass() const;
};

/// Scenario of a preset at a named tier; `full` uses the finer target element size.
Scenario bench_scenario(const std::string& preset, const std::string& tier);

/// Runs the preset (or every sweep value) and compares metrics with the expectation file.
BenchReport bench(const BenchRequest& request);

}  // namespace esfem
