#include "esfem/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>

namespace esfem {

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
    if (!(newton_tol > 0.0)) throw ConfigError("solver.newton_tol must be positive");
    if (max_staggered < 1) throw ConfigError("solver.max_staggered must be at least 1");
    if (max_newton < 1) throw ConfigError("solver.max_newton must be at least 1");
    if (!(dphi_max > 0.0)) throw ConfigError("solver.dphi_max must be positive");
    if (!(growth > 1.0)) throw ConfigError("solver.growth must exceed 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("solver.shrink must lie in (0, 1)");
    if (!(linear_tol > 0.0)) throw ConfigError("solver.linear_tol must be positive");
    if (anderson_depth < 0) throw ConfigError("solver.anderson_depth must be non-negative");
}

void LoadSchedule::validate() const {
    if (!(min_increment > 0.0)) throw ConfigError("loading.min_increment must be positive");
    if (!(max_increment >= min_increment)) throw ConfigError("loading.max_increment must be >= loading.min_increment");
    if (!(increment >= min_increment && increment <= max_increment))
        throw ConfigError("loading.initial_increment must lie within [min_increment, max_increment]");
    if (!(target > load)) throw ConfigError("loading.target must exceed the initial load");
    if (!(rate > 0.0)) throw ConfigError("loading.rate must be positive");
}

Discretization::Discretization(TriMesh mesh, const BoundaryConditions& bcs, double linear_tol)
    : mesh_(std::move(mesh)),
      domains_(build_smoothing_domains(mesh_)),
      assembler_(std::make_unique<Assembler>(mesh_, domains_)),
      constraints_(resolve_constraints(mesh_, bcs)),
      u_solver_(linear_tol),
      phi_solver_(linear_tol) {}

namespace {

bool below_floor(double norm, double f0, const SolverConfig& cfg) { return norm <= cfg.residual_floor || f0 <= cfg.residual_floor; }

double ratio_of(double norm, double f0, const SolverConfig& cfg) { return below_floor(norm, f0, cfg) ? 0.0 : norm / f0; }

// Anderson mixing of the fixed-point map phi -> phase(u(phi)). The accelerated
// iterate is projected back onto [phi_n, 1]. The history is dropped and a plain
// step taken whenever the fixed-point residual fails to decrease.
class AndersonMixer {
public:
    explicit AndersonMixer(int depth) : depth_(depth) {}

    void next(const std::vector<double>& x, std::vector<double>& g, std::span<const double> lower) {
        if (depth_ <= 0) return;
        const Eigen::Index n = static_cast<Eigen::Index>(x.size());
        const Eigen::Map<const Vector> xv(x.data(), n);
        Eigen::Map<Vector> gv(g.data(), n);
        const Vector f = gv - xv;
        const double fn = f.norm();
        if (has_prev_ && fn >= 0.99 * f_prev_norm_) {
            df_.clear();
            dg_.clear();
            has_prev_ = false;
        }
        f_prev_norm_ = fn;
        if (has_prev_) {
            df_.push_back(f - f_prev_);
            dg_.push_back(gv - g_prev_);
            if (static_cast<int>(df_.size()) > depth_) {
                df_.erase(df_.begin());
                dg_.erase(dg_.begin());
            }
        }
        f_prev_ = f;
        g_prev_ = gv;
        has_prev_ = true;
        if (df_.empty()) return;
        const Eigen::Index m = static_cast<Eigen::Index>(df_.size());
        Eigen::MatrixXd F(n, m);
        for (Eigen::Index j = 0; j < m; ++j) F.col(j) = df_[j];
        const Vector gamma = F.colPivHouseholderQr().solve(f);
        if (!gamma.allFinite()) {
            df_.clear();
            dg_.clear();
            return;
        }
        Vector mixed = gv;
        for (Eigen::Index j = 0; j < m; ++j) mixed -= gamma[j] * dg_[j];
        for (Eigen::Index i = 0; i < n; ++i) gv[i] = std::clamp(mixed[i], lower[i], 1.0);
    }

private:
    int depth_;
    bool has_prev_ = false;
    double f_prev_norm_ = 0.0;
    Vector f_prev_, g_prev_;
    std::vector<Vector> df_, dg_;
};

}  // namespace

NewtonResult newton_update_u(Discretization& disc, const Problem& prob, std::vector<double>& u,
                             std::span<const double> phi, const Vector& external, double f0,
                             const SolverConfig& cfg, GlobalSystem& sys) {
    NewtonResult res;
    const auto& fixed = disc.constraints().dofs;
    double previous = std::numeric_limits<double>::infinity();
    int growth = 0;
    for (int k = 0;; ++k) {
        disc.assembler().assemble_displacement(u, phi, prob.material, external, sys);
        const double norm = free_norm(sys.residual, fixed);
        res.ratio = ratio_of(norm, f0, cfg);
        // Round-off floor relative to the internal force scale.
        if (res.ratio < cfg.newton_tol || norm <= 1e-12 * sys.internal.norm()) {
            res.converged = true;
            return res;
        }
        if (k >= cfg.max_newton) {
            res.failure = "displacement Newton did not converge in " + std::to_string(cfg.max_newton) + " iterations";
            return res;
        }
        growth = norm > previous ? growth + 1 : 0;
        if (growth >= cfg.divergence_window) {
            res.failure = "displacement Newton diverged";
            return res;
        }
        previous = norm;

        Vector rhs = sys.residual;
        eliminate(sys.K, rhs, fixed);
        const Vector du = disc.u_solver().solve(sys.K, rhs);
        ++res.iterations;

        // Cut the update back until every smoothing domain keeps J > 0.
        std::vector<double> trial(u.size());
        double t = 1.0;
        for (int cut = 0;; ++cut) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + t * du[static_cast<Eigen::Index>(i)];
            if (min_jacobian(disc.domains(), trial) > 0.0) break;
            if (cut >= 30) {
                res.failure = "no admissible displacement update";
                return res;
            }
            t *= 0.5;
        }
        u.swap(trial);
    }
}

double projected_phase_norm(const Vector& residual, std::span<const double> phi, std::span<const double> phi_n) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        double r = residual[i];
        const bool lower = phi[i] <= phi_n[i] + 1e-14;
        const bool upper = phi[i] >= 1.0 - 1e-14;
        if (lower && upper) r = 0.0;
        else if (lower) r = std::min(r, 0.0);
        else if (upper) r = std::max(r, 0.0);
        sum += r * r;
    }
    return std::sqrt(sum);
}

PhaseUpdate newton_update_phi(Discretization& disc, const Problem& prob, std::span<const double> u,
                              std::vector<double>& phi, std::span<const double> phi_n, double dt,
                              const SolverConfig& cfg) {
    (void)cfg;
    PhaseUpdate out;
    const int n = static_cast<int>(phi.size());
    const auto psi0 = disc.assembler().domain_psi0(u, prob.material);
    GlobalSystem sys;
    disc.assembler().assemble_phase(psi0, phi, phi_n, dt, prob.crack, sys);
    const Eigen::Map<const Vector> phi_vec(phi.data(), n);
    const Vector b = sys.K * phi_vec - sys.residual;

    // 0 free, 1 held at phi_n, 2 held at 1.
    std::vector<char> state(n, 0);
    for (int i = 0; i < n; ++i) {
        if (phi_n[i] >= 1.0 - 1e-14) state[i] = 1;
        else if (phi[i] <= phi_n[i] + 1e-14 && sys.residual[i] > 0.0) state[i] = 1;
        else if (phi[i] >= 1.0 - 1e-14 && sys.residual[i] < 0.0) state[i] = 2;
    }

    Vector x;
    for (;;) {
        std::vector<int> fixed;
        Vector z = Vector::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (state[i] == 0) continue;
            fixed.push_back(i);
            z[i] = state[i] == 1 ? phi_n[i] : 1.0;
        }
        SparseMatrix K = sys.K;
        Vector rhs = b - sys.K * z;
        eliminate(K, rhs, fixed);
        for (int i : fixed) rhs[i] = z[i];
        if (static_cast<int>(fixed.size()) == n) {
            x = z;
        } else {
            x = disc.phi_solver().solve(K, -rhs);
        }
        ++out.passes;

        bool changed = false;
        for (int i = 0; i < n; ++i) {
            if (state[i] != 0) continue;
            if (x[i] < phi_n[i] - 1e-13) {
                state[i] = 1;
                changed = true;
            } else if (x[i] > 1.0 + 1e-13) {
                state[i] = 2;
                changed = true;
            }
        }
        if (!changed) {
            // Held nodes whose multiplier has the wrong sign are released.
            const Vector f = sys.K * x - b;
            const double eps = 1e-10 * std::max(b.cwiseAbs().maxCoeff(), 1e-300);
            for (int i = 0; i < n; ++i) {
                if (phi_n[i] >= 1.0 - 1e-14) continue;
                if ((state[i] == 1 && f[i] < -eps) || (state[i] == 2 && f[i] > eps)) {
                    state[i] = 0;
                    changed = true;
                }
            }
        }
        if (!changed) break;
        if (out.passes > n + 1) throw NumericalError("active-set loop exceeded the node count");
    }
    for (int i = 0; i < n; ++i) {
        phi[i] = std::clamp(x[i], phi_n[i], 1.0);
        if (state[i] == 1) ++out.lower_active;
        if (state[i] == 2) ++out.upper_active;
    }
    return out;
}

namespace {

// Linearized response to the prescribed increment from the previous state. Without it the first
// Newton updates on fine meshes are cut back repeatedly to keep the boundary row admissible.
// `u` holds the previous state with the new boundary values and is left unchanged when the
// prediction would invert a domain.
void linear_predictor(Discretization& disc, const Problem& prob, const std::vector<double>& u_prev,
                      std::span<const double> phi, const Vector& external, std::vector<double>& u) {
    const auto& fixed = disc.constraints().dofs;
    if (fixed.empty()) return;
    GlobalSystem sys;
    disc.assembler().assemble_displacement(u_prev, phi, prob.material, external, sys);
    Vector jump = Vector::Zero(static_cast<Eigen::Index>(u.size()));
    for (int i : fixed) jump[i] = u[i] - u_prev[i];
    if (jump.norm() == 0.0) return;
    Vector rhs = sys.residual + sys.K * jump;
    eliminate(sys.K, rhs, fixed);
    const Vector du = disc.u_solver().solve(sys.K, rhs);
    std::vector<double> trial(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u_prev[i] + du[static_cast<Eigen::Index>(i)] + jump[static_cast<Eigen::Index>(i)];
    if (min_jacobian(disc.domains(), trial) > 0.0) u.swap(trial);
}

}  // namespace

StepResult staggered_step(Discretization& disc, const Problem& prob, const FieldState& start, double increment,
                          double dt, const SolverConfig& cfg, bool early_reject) {
    StepResult r;
    r.state = start;
    auto& s = r.state;
    s.load = start.load + increment;
    s.time = start.time + dt;
    const auto& c = disc.constraints();
    for (std::size_t i = 0; i < c.dofs.size(); ++i) s.u[c.dofs[i]] = c.scale[i] * s.load;
    const std::vector<double>& phi_n = start.phi;
    const auto& asmb = disc.assembler();

    try {
        const Vector external = external_forces(disc.mesh(), prob.bcs, s.load);
        GlobalSystem us, ps;
        asmb.assemble_displacement(s.u, s.phi, prob.material, external, us);
        const double fu0 = free_norm(us.residual, c.dofs);
        asmb.assemble_phase(asmb.domain_psi0(s.u, prob.material), s.phi, phi_n, dt, prob.crack, ps);
        const double fp0 = projected_phase_norm(ps.residual, s.phi, phi_n);

        linear_predictor(disc, prob, start.u, s.phi, external, s.u);

        AndersonMixer mixer(cfg.anderson_depth);
        for (int it = 1; it <= cfg.max_staggered; ++it) {
            r.staggered_iterations = it;
            const auto nr = newton_update_u(disc, prob, s.u, s.phi, external, fu0, cfg, us);
            r.newton_iterations += nr.iterations;
            if (!nr.converged) {
                r.failure = nr.failure;
                return r;
            }
            const std::vector<double> phi_in = s.phi;
            const auto pu = newton_update_phi(disc, prob, s.u, s.phi, phi_n, dt, cfg);
            r.active_set_passes = std::max(r.active_set_passes, pu.passes);
            r.max_dphi = 0.0;
            for (std::size_t i = 0; i < s.phi.size(); ++i) r.max_dphi = std::max(r.max_dphi, s.phi[i] - phi_n[i]);
            if (early_reject && r.max_dphi > cfg.dphi_max) {
                r.dphi_exceeded = true;
                r.failure = "phase increment above dphi_max";
                return r;
            }

            asmb.assemble_displacement(s.u, s.phi, prob.material, external, us);
            const double ru = free_norm(us.residual, c.dofs);
            asmb.assemble_phase(asmb.domain_psi0(s.u, prob.material), s.phi, phi_n, dt, prob.crack, ps);
            const double rp = projected_phase_norm(ps.residual, s.phi, phi_n);
            r.tolerance = std::max(ratio_of(ru, fu0, cfg), ratio_of(rp, fp0, cfg));
            if (r.tolerance < cfg.tol) {
                r.converged = true;
                r.dphi_exceeded = r.max_dphi > cfg.dphi_max;
                r.reaction = prob.reaction_group.empty()
                                 ? 0.0
                                 : reaction_force(disc.mesh(), us.internal, prob.reaction_group, prob.reaction_component);
                r.strain_energy = us.energy;
                r.surface_energy = ps.energy;
                r.dissipation = dissipation_increment(disc.domains(), s.phi, phi_n, dt, prob.crack.eta);
                return r;
            }
            mixer.next(phi_in, s.phi, phi_n);
        }
        r.failure = "staggered iterations did not converge (tol " + std::to_string(r.tolerance) + ")";
    } catch (const NumericalError& e) {
        r.converged = false;
        r.failure = e.what();
    }
    return r;
}

StepDecision adapt_step(const StepResult& result, LoadSchedule& schedule, const SolverConfig& cfg) {
    const bool at_min = schedule.increment <= schedule.min_increment * (1.0 + 1e-12);
    if (!result.converged) {
        if (result.dphi_exceeded && !at_min) {
            schedule.increment = std::max(schedule.increment * cfg.shrink, schedule.min_increment);
            return StepDecision::retry;
        }
        if (at_min) return StepDecision::abort;
        schedule.increment = std::max(schedule.increment * cfg.shrink, schedule.min_increment);
        return StepDecision::retry;
    }
    if (result.max_dphi > cfg.dphi_max) {
        if (at_min) return StepDecision::accept;
        schedule.increment = std::max(schedule.increment * cfg.shrink, schedule.min_increment);
        return StepDecision::retry;
    }
    if (result.max_dphi < 0.1 * cfg.dphi_max) {
        schedule.increment = std::min(schedule.increment * cfg.growth, schedule.max_increment);
    }
    return StepDecision::accept;
}

namespace {

struct AdaptOutcome {
    bool changed = false;
    TriMesh mesh;
    FieldState state;
};

AdaptOutcome adapt_mesh(const TriMesh& mesh, const FieldState& state, const RefinementPolicy& policy,
                        std::span<const char> energy_marked) {
    AdaptOutcome out;
    out.mesh = mesh;
    out.state = state;
    if (!policy.enabled) return out;
    const double old_min_angle = min_angle(mesh);
    const int old_nodes = mesh.num_nodes();

    auto apply = [&](const Adaptation& ad) {
        std::vector<NodalField> fields{{out.state.u, 2, false}, {out.state.phi, 1, true}};
        auto moved = transfer_fields(ad.transfer, fields);
        out.state.u = std::move(moved[0].values);
        out.state.phi = std::move(moved[1].values);
        out.mesh = ad.mesh;
        out.changed = true;
    };

    if (!energy_marked.empty()) {
        std::vector<int> marked;
        for (int e = 0; e < out.mesh.num_elements(); ++e) {
            const auto& el = out.mesh.elements()[e];
            if (el.level >= policy.max_level) continue;
            if (energy_marked[el.nodes[0]] || energy_marked[el.nodes[1]] || energy_marked[el.nodes[2]]) marked.push_back(e);
        }
        if (!marked.empty()) apply(refine(out.mesh, marked, policy.max_level));
    }
    if (policy.coarsen) {
        auto ad = coarsen(out.mesh, out.state.phi, policy.coarsen_threshold);
        if (!ad.transfer.is_identity()) apply(ad);
    }
    for (int pass = 0; pass <= policy.max_level; ++pass) {
        const auto marked = mark_for_refinement(out.mesh, out.state.phi, policy.threshold, policy.max_level);
        if (marked.empty()) break;
        const int before = out.mesh.num_elements();
        auto ad = refine(out.mesh, marked, policy.max_level);
        if (ad.mesh.num_elements() == before) break;
        apply(ad);
    }

    if (out.changed && policy.smooth && min_angle(out.mesh) < old_min_angle - 1e-9) {
        std::vector<char> prot(out.mesh.num_nodes(), 0);
        for (int i = 0; i < out.mesh.num_nodes(); ++i) {
            // Only nodes created in this pass move; region-tagged nodes keep the band geometry.
            prot[i] = (out.mesh.node_origins()[i][0] < 0 || i < old_nodes || out.mesh.nodes()[i].region_tag != 0) ? 1 : 0;
        }
        out.mesh = odt_smooth(out.mesh, prot);
    }
    return out;
}

}  // namespace

RunRecord run_simulation(const Simulation& sim, const RunObserver& observer) {
    using clock = std::chrono::steady_clock;
    const auto run_start = clock::now();
    sim.solver.validate();
    sim.schedule.validate();
    sim.problem.material.validate();
    sim.problem.crack.validate();

    RunRecord rec;
    auto disc = std::make_unique<Discretization>(sim.mesh, sim.problem.bcs, sim.solver.linear_tol);
    FieldState state;
    state.u.assign(2 * sim.mesh.num_nodes(), 0.0);
    state.phi = sim.initial_phi.empty() ? std::vector<double>(sim.mesh.num_nodes(), 0.0) : sim.initial_phi;
    if (static_cast<int>(state.phi.size()) != sim.mesh.num_nodes())
        throw ConfigError("initial phase field does not match the mesh");
    state.load = sim.schedule.load;
    LoadSchedule schedule = sim.schedule;

    auto adapt = [&](const FieldState& accepted) {
        std::vector<char> hot;
        if (sim.refinement.enabled && sim.refinement.energy_fraction > 0.0) {
            const auto& crack = sim.problem.crack;
            const double limit = sim.refinement.energy_fraction * 3.0 * crack.gc / (16.0 * crack.l0);
            const auto psi0 = disc->assembler().domain_psi0(accepted.u, sim.problem.material);
            hot.assign(disc->mesh().num_nodes(), 0);
            for (std::size_t k = 0; k < psi0.size(); ++k) {
                if (psi0[k] < limit) continue;
                const auto& d = disc->domains()[k];
                for (int i = 0; i < d.num_support; ++i) hot[d.nodes[i]] = 1;
            }
        }
        auto ad = adapt_mesh(disc->mesh(), accepted, sim.refinement, hot);
        if (!ad.changed) return false;
        state = std::move(ad.state);
        disc = std::make_unique<Discretization>(std::move(ad.mesh), sim.problem.bcs, sim.solver.linear_tol);
        ++rec.adaptations;
        if (observer.on_adapt) observer.on_adapt(disc->mesh(), state);
        return true;
    };

    if (!sim.initial_phi.empty()) adapt(state);

    const double eps = 1e-12 * std::max(1.0, std::abs(schedule.target));
    bool past_peak = false;
    int step = 0;
    while (state.load < schedule.target - eps) {
        const auto step_start = clock::now();
        schedule.increment = std::min(schedule.increment, schedule.target - state.load);
        const double inc = schedule.increment;
        const double dt = inc / schedule.rate;
        const bool early = inc > schedule.min_increment * (1.0 + 1e-12);
        auto res = staggered_step(*disc, sim.problem, state, inc, dt, sim.solver, early);
        const auto decision = adapt_step(res, schedule, sim.solver);
        if (decision == StepDecision::retry) {
            ++rec.rejected_steps;
            continue;
        }
        if (decision == StepDecision::abort) {
            rec.aborted = true;
            rec.message = "step at load " + std::to_string(state.load + inc) + " failed at the minimum increment: " +
                          res.failure;
            break;
        }

        std::vector<double> previous_phi = state.phi;
        state = std::move(res.state);
        StepRecord sr;
        sr.step = ++step;
        sr.time = state.time;
        sr.load = state.load;
        sr.reaction = res.reaction;
        sr.strain_energy = res.strain_energy;
        sr.surface_energy = res.surface_energy;
        sr.interface_surface_energy = interface_surface_energy(disc->domains(), state.phi, sim.problem.crack);
        sr.dissipation = res.dissipation;
        sr.elements = disc->mesh().num_elements();
        sr.nodes = disc->mesh().num_nodes();
        sr.domains = static_cast<int>(disc->domains().size());
        sr.max_level = disc->mesh().max_level();
        sr.staggered_iterations = res.staggered_iterations;
        sr.active_set_passes = res.active_set_passes;
        sr.max_dphi = res.max_dphi;
        sr.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - step_start).count();
        rec.steps.push_back(sr);
        if (observer.on_step) observer.on_step(sr, disc->mesh(), state, previous_phi);

        if (sr.reaction > rec.peak_reaction) {
            rec.peak_reaction = sr.reaction;
            rec.peak_load = sr.load;
        } else if (rec.peak_reaction > 0.0) {
            past_peak = true;
        }
        if (sim.fracture_ratio > 0.0 && past_peak && sr.reaction < sim.fracture_ratio * rec.peak_reaction) {
            rec.fractured = true;
            rec.fracture_load = sr.load;
            break;
        }

        if (adapt(state) && sim.solver.resolve_after_refine) {
            FieldState base = state;
            auto again = staggered_step(*disc, sim.problem, base, 0.0, dt, sim.solver, false);
            if (again.converged) {
                again.state.time = base.time;
                state = std::move(again.state);
            }
        }
    }

    rec.final_mesh = disc->mesh();
    rec.final_state = state;
    rec.wall_seconds = std::chrono::duration<double>(clock::now() - run_start).count();
    return rec;
}

}  // namespace esfem
