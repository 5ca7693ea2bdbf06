#pragma once

#include "esfem/solver.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace esfem {

inline constexpr std::string_view kScenarioSchema = "esfem-scenario/1";

struct ScenarioDirichlet {
    std::string label;
    DirichletGroup bc;
};

struct ScenarioTraction {
    std::string label;
    TractionLoad load;
};

/// Fully resolved run description. Text form: one `key = value` per line,
/// `#` starts a comment; see scenario_schema() for the keys.
struct Scenario {
    std::string preset;     // one of preset_names(), or empty when mesh_file is set
    std::string mesh_file;
    std::map<std::string, double> geometry;

    MaterialModel material;
    CrackModel crack;
    LoadSchedule loading;
    RefinementPolicy refine;
    double refine_h_f = 0.0;        // > 0: derive refine.max_level from the initial element size
    bool max_level_explicit = false;
    SolverConfig solver;

    std::string output_dir = "out";
    int snapshot_every = 0;
    double fracture_ratio = 0.01;

    std::string report_group;
    int report_component = 1;
    double force_scale = 1.0;
    double displacement_scale = 1.0;

    std::vector<ScenarioDirichlet> dirichlet;
    std::vector<ScenarioTraction> tractions;
};

const std::vector<std::string>& preset_names();

/// Defaults of a preset (material, crack model, loads, refinement policy, geometry).
/// Throws ConfigError for unknown names.
Scenario preset_scenario(const std::string& name);

/// Throws ConfigError with the line number of the first problem.
Scenario parse_scenario(std::string_view text);
/// A relative mesh_file is resolved against the directory of `path`.
Scenario load_scenario_file(const std::string& path);

/// Applies one `key = value` setting; line is used in error messages.
void apply_setting(Scenario& s, const std::string& key, const std::string& value, int line = 0);

/// Throws ConfigError naming the first invalid field.
void validate(const Scenario& s);

/// Canonical text with every key written out; parse_scenario(format_scenario(s)) reproduces s.
std::string format_scenario(const Scenario& s);

/// Table of keys, value types and descriptions.
std::string scenario_schema();

/// Initial element size used to derive the refinement depth.
double initial_element_size(const Scenario& s, const TriMesh& mesh);
/// Levels needed to reach h_f from h0 when every two bisections halve the size.
int levels_for(double h0, double h_f);
/// Size reached after `levels` bisection levels.
double achieved_size(double h0, int levels);

TriMesh build_mesh(const Scenario& s);
/// Mesh, boundary conditions and policies ready for run_simulation.
Simulation build_simulation(const Scenario& s);

}  // namespace esfem
