#pragma once

#include "esfem/assembly.hpp"
#include "esfem/linear_solver.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace esfem {

struct SolverConfig {
    double tol = 1e-4;          // staggered tolerance on residual ratios
    double newton_tol = 1e-5;   // displacement Newton tolerance on the same ratio
    int max_staggered = 300;
    int anderson_depth = 5;     // Anderson mixing of staggered iterates; 0 gives plain alternation
    int max_newton = 100;
    int divergence_window = 5;  // consecutive residual increases before giving up
    double dphi_max = 0.2;
    double growth = 1.5;
    double shrink = 0.5;
    double linear_tol = 1e-10;
    double residual_floor = 1e-14;
    bool resolve_after_refine = false;

    void validate() const;
};

/// Load factor stepping. The load factor is the prescribed displacement scale (mm);
/// the pseudo time advances by increment / rate.
struct LoadSchedule {
    double load = 0.0;
    double increment = 0.1;
    double min_increment = 1e-4;
    double max_increment = 1.0;
    double target = 1.0;
    double rate = 1.0;

    void validate() const;
};

struct RefinementPolicy {
    bool enabled = false;
    double threshold = 0.25;
    int max_level = 0;
    bool coarsen = false;
    double coarsen_threshold = 0.05;
    bool smooth = true;
    /// > 0: also mark elements touching a domain with psi0 >= energy_fraction * 3 Gc / (16 l0),
    /// one level per accepted step. 0 marks on phi only.
    double energy_fraction = 0.0;
};

struct FieldState {
    std::vector<double> u;    // interleaved (u_x, u_y)
    std::vector<double> phi;
    double load = 0.0;
    double time = 0.0;
};

struct Problem {
    BoundaryConditions bcs;
    MaterialModel material;
    CrackModel crack;
    std::string reaction_group;
    int reaction_component = 1;
};

/// Mesh-dependent data: smoothing domains, assembler, constraints and solver caches.
class Discretization {
public:
    Discretization(TriMesh mesh, const BoundaryConditions& bcs, double linear_tol = 1e-10);
    Discretization(const Discretization&) = delete;
    Discretization& operator=(const Discretization&) = delete;

    const TriMesh& mesh() const { return mesh_; }
    const std::vector<SmoothingDomain>& domains() const { return domains_; }
    const Assembler& assembler() const { return *assembler_; }
    const Constraints& constraints() const { return constraints_; }
    LinearSolver& u_solver() { return u_solver_; }
    LinearSolver& phi_solver() { return phi_solver_; }

private:
    TriMesh mesh_;
    std::vector<SmoothingDomain> domains_;
    std::unique_ptr<Assembler> assembler_;
    Constraints constraints_;
    LinearSolver u_solver_;
    LinearSolver phi_solver_;
};

struct NewtonResult {
    bool converged = false;
    int iterations = 0;   // linear solves performed
    double ratio = 0.0;   // final ||f_u|| / ||f_u0||
    std::string failure;
};

/// Newton iterations on u with phi frozen. Constrained dofs of u must already
/// hold their prescribed values. `sys` receives the last assembly.
NewtonResult newton_update_u(Discretization& disc, const Problem& prob, std::vector<double>& u,
                             std::span<const double> phi, const Vector& external, double f0,
                             const SolverConfig& cfg, GlobalSystem& sys);

struct PhaseUpdate {
    int passes = 0;  // linear solves in the active-set loop
    int lower_active = 0;
    int upper_active = 0;
};

/// Solves the phase problem with u frozen under phi_n <= phi <= 1. Nodes whose
/// increment turns negative are frozen and the reduced system re-solved until no
/// new violations appear. Frozen nodes whose residual then pulls them back inside
/// the bounds are released and the loop continues, at most n + 1 solves in total.
PhaseUpdate newton_update_phi(Discretization& disc, const Problem& prob, std::span<const double> u,
                              std::vector<double>& phi, std::span<const double> phi_n, double dt,
                              const SolverConfig& cfg);

/// Residual norm with the bound-constrained sign convention: nodes on the lower
/// bound only count a negative residual, nodes at phi = 1 only a positive one.
double projected_phase_norm(const Vector& residual, std::span<const double> phi, std::span<const double> phi_n);

struct StepResult {
    bool converged = false;
    bool dphi_exceeded = false;
    int staggered_iterations = 0;
    int newton_iterations = 0;
    int active_set_passes = 0;
    double max_dphi = 0.0;
    double tolerance = 0.0;
    double reaction = 0.0;
    double strain_energy = 0.0;
    double surface_energy = 0.0;
    double dissipation = 0.0;
    std::string failure;
    FieldState state;  // end-of-step fields; meaningful only when converged
};

/// One load step from `start`. `early_reject` stops as soon as max(phi - phi_n) exceeds dphi_max.
StepResult staggered_step(Discretization& disc, const Problem& prob, const FieldState& start, double increment,
                          double dt, const SolverConfig& cfg, bool early_reject = false);

enum class StepDecision { accept, retry, abort };

/// Shrinks the increment on rejection or excessive damage growth, grows it in quiescent steps.
/// `schedule.increment` must hold the increment that was attempted.
StepDecision adapt_step(const StepResult& result, LoadSchedule& schedule, const SolverConfig& cfg);

struct StepRecord {
    int step = 0;
    double time = 0.0;
    double load = 0.0;
    double reaction = 0.0;
    double strain_energy = 0.0;
    double surface_energy = 0.0;
    double interface_surface_energy = 0.0;
    double dissipation = 0.0;
    int elements = 0;
    int nodes = 0;
    int domains = 0;
    int max_level = 0;
    int staggered_iterations = 0;
    int active_set_passes = 0;
    double max_dphi = 0.0;
    double wall_ms = 0.0;
};

struct Simulation {
    TriMesh mesh;
    Problem problem;
    SolverConfig solver;
    LoadSchedule schedule;
    RefinementPolicy refinement;
    double fracture_ratio = 0.01;  // stop once reaction < ratio * peak after the peak; 0 disables
    std::vector<double> initial_phi;  // optional seeded phase field
};

struct RunObserver {
    /// Called after every accepted step with the state before adaptation and the previous phi.
    std::function<void(const StepRecord&, const TriMesh&, const FieldState&, std::span<const double>)> on_step;
    /// Called after every mesh adaptation with the transferred state.
    std::function<void(const TriMesh&, const FieldState&)> on_adapt;
};

struct RunRecord {
    std::vector<StepRecord> steps;
    double peak_reaction = 0.0;
    double peak_load = 0.0;
    bool fractured = false;
    double fracture_load = 0.0;
    bool aborted = false;
    std::string message;
    int rejected_steps = 0;
    int adaptations = 0;
    double wall_seconds = 0.0;
    TriMesh final_mesh;
    FieldState final_state;
};

/// Load stepping with refine-after-accept mesh adaptation.
RunRecord run_simulation(const Simulation& sim, const RunObserver& observer = {});

}  // namespace esfem
