#include "doctest.h"
#include "support.hpp"

#include "esfem/presets.hpp"
#include "esfem/scenario.hpp"
#include "esfem/solver.hpp"

using namespace esfem;
using namespace esfem::testing;

namespace {

Problem square_problem() {
    Problem prob;
    prob.material = MaterialModel::from_nu(1.0, 0.3, 1e-6);
    prob.crack.variant = CrackVariant::AT2;
    prob.crack.l0 = 0.2;
    prob.crack.gc = 1.0;
    prob.crack.gc_interface = 1.0;
    prob.bcs.dirichlet = {{"left", 0, 0.0}, {"bottom", 1, 0.0}, {"top", 1, 1.0}};
    prob.reaction_group = "top";
    return prob;
}

// Projected Gauss-Seidel on min 1/2 x'Kx - b'x subject to lo <= x <= 1.
Vector projected_gauss_seidel(const SparseMatrix& Kc, const Vector& b, const Vector& lo, Vector x) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> K = Kc;
    for (int sweep = 0; sweep < 500000; ++sweep) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double r = b[i], diag = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(K, i); it; ++it) {
                if (it.col() == i) diag = it.value();
                else r -= it.value() * x[it.col()];
            }
            const double v = std::clamp(r / diag, lo[i], 1.0);
            change = std::max(change, std::abs(v - x[i]));
            x[i] = v;
        }
        if (change < 1e-15) break;
    }
    return x;
}

}  // namespace

TEST_CASE("step control shrinks, grows and aborts as specified") {
    SolverConfig cfg;
    LoadSchedule s;
    s.min_increment = 1e-3;
    s.max_increment = 1.0;

    StepResult failed;
    s.increment = 0.1;
    CHECK(adapt_step(failed, s, cfg) == StepDecision::retry);
    CHECK(s.increment == doctest::Approx(0.05));
    s.increment = s.min_increment;
    CHECK(adapt_step(failed, s, cfg) == StepDecision::abort);

    StepResult big;
    big.converged = true;
    big.max_dphi = 0.5;
    s.increment = 0.1;
    CHECK(adapt_step(big, s, cfg) == StepDecision::retry);
    CHECK(s.increment == doctest::Approx(0.05));
    s.increment = s.min_increment;
    CHECK(adapt_step(big, s, cfg) == StepDecision::accept);
    CHECK(s.increment == s.min_increment);

    StepResult early;
    early.dphi_exceeded = true;
    s.increment = 0.004;
    CHECK(adapt_step(early, s, cfg) == StepDecision::retry);
    CHECK(s.increment == doctest::Approx(0.002));

    StepResult quiet;
    quiet.converged = true;
    quiet.max_dphi = 0.001;
    s.increment = 0.8;
    CHECK(adapt_step(quiet, s, cfg) == StepDecision::accept);
    CHECK(s.increment == doctest::Approx(1.0));

    StepResult moderate;
    moderate.converged = true;
    moderate.max_dphi = 0.1;
    s.increment = 0.3;
    CHECK(adapt_step(moderate, s, cfg) == StepDecision::accept);
    CHECK(s.increment == doctest::Approx(0.3));
}

TEST_CASE("bound-constrained phase solve matches projected Gauss-Seidel") {
    Rng rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        const auto mesh = jittered_square(6, 0.2, rng);
        const int n = mesh.num_nodes();
        Problem prob = square_problem();
        prob.crack.variant = trial % 2 ? CrackVariant::AT1 : CrackVariant::AT2;
        prob.crack.l0 = 0.1;
        prob.crack.gc = 0.05;
        prob.crack.eta = trial < 3 ? 0.0 : 1e-2;
        Discretization disc(mesh, prob.bcs);

        std::vector<double> u(2 * n), phi_n(n);
        const double stretch = uniform(rng, 0.05, 0.6);
        for (int i = 0; i < n; ++i) {
            const Vec2 X = mesh.nodes()[i].X;
            u[2 * i] = -0.2 * stretch * X.x();
            u[2 * i + 1] = stretch * X.y() * X.y();
            // Old damage concentrated in a random band so that parts of it want to heal.
            phi_n[i] = std::abs(X.y() - 0.5) < 0.2 ? uniform(rng, 0.3, 1.0) : uniform(rng, 0.0, 0.1);
        }
        std::vector<double> phi = phi_n;
        SolverConfig cfg;
        const auto pu = newton_update_phi(disc, prob, u, phi, phi_n, 0.1, cfg);
        CHECK(pu.passes <= n);
        CHECK(pu.lower_active > 0);

        const auto psi0 = disc.assembler().domain_psi0(u, prob.material);
        GlobalSystem sys;
        disc.assembler().assemble_phase(psi0, phi_n, phi_n, 0.1, prob.crack, sys);
        const Eigen::Map<const Vector> pn(phi_n.data(), n);
        const Vector b = sys.K * pn - sys.residual;
        const Vector ref = projected_gauss_seidel(sys.K, b, pn, pn);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(phi[i] >= phi_n[i]);
            CHECK(phi[i] <= 1.0);
            err = std::max(err, std::abs(phi[i] - ref[i]));
        }
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("elastic step converges and a zero increment leaves the state unchanged") {
    Rng rng(40);
    const auto mesh = jittered_square(5, 0.2, rng);
    Problem prob = square_problem();
    prob.crack.gc = 1e6;
    Discretization disc(mesh, prob.bcs);
    SolverConfig cfg;
    FieldState start;
    start.u.assign(2 * mesh.num_nodes(), 0.0);
    start.phi.assign(mesh.num_nodes(), 0.0);
    const auto r = staggered_step(disc, prob, start, 0.05, 0.05, cfg);
    REQUIRE(r.converged);
    CHECK(r.max_dphi < 1e-6);
    CHECK(r.reaction > 0.0);
    CHECK(r.strain_energy > 0.0);

    const auto again = staggered_step(disc, prob, r.state, 0.0, 0.05, cfg);
    REQUIRE(again.converged);
    CHECK(again.staggered_iterations == 1);
    // The first solve stops at the Newton tolerance; the re-solve may only polish it.
    double du = 0.0, umax = 0.0;
    for (std::size_t i = 0; i < r.state.u.size(); ++i) {
        du = std::max(du, std::abs(again.state.u[i] - r.state.u[i]));
        umax = std::max(umax, std::abs(r.state.u[i]));
    }
    CHECK(du <= 1e-5 * umax);
    CHECK(again.reaction == doctest::Approx(r.reaction).epsilon(1e-5));
}

TEST_CASE("elastic loading gives a monotone force-displacement record") {
    Simulation sim;
    sim.mesh = unit_square_mesh();
    sim.problem = square_problem();
    sim.problem.crack.gc = 1e6;
    sim.schedule = LoadSchedule{0.0, 0.02, 1e-4, 0.05, 0.3, 1.0};
    const auto rec = run_simulation(sim);
    REQUIRE_FALSE(rec.aborted);
    REQUIRE(rec.steps.size() >= 6);
    CHECK(rec.steps.back().load == doctest::Approx(0.3));
    for (std::size_t i = 1; i < rec.steps.size(); ++i) {
        CHECK(rec.steps[i].load > rec.steps[i - 1].load);
        CHECK(rec.steps[i].reaction > rec.steps[i - 1].reaction);
        CHECK(rec.steps[i].strain_energy > rec.steps[i - 1].strain_energy);
    }
    CHECK_FALSE(rec.fractured);
}

TEST_CASE("a small notched specimen breaks with irreversible damage and valid meshes") {
    auto s = preset_scenario("double_edge_notch");
    s.geometry = {{"width", 10.0}, {"height", 20.0}, {"notch", 4.0}, {"h0", 1.0}};
    s.refine_h_f = 0.5;
    s.loading.target = 40.0;
    s.loading.increment = 0.25;
    s.loading.min_increment = 1e-4;
    const auto sim = build_simulation(s);
    REQUIRE(sim.refinement.max_level == 2);

    int steps = 0, adaptations = 0;
    double worst_drop = 0.0, lo = 0.0, hi = 1.0;
    double min_dissipation = 0.0;
    int max_passes = 0, max_nodes = 0;
    std::string mesh_problem;
    RunObserver obs;
    obs.on_step = [&](const StepRecord& r, const TriMesh& mesh, const FieldState& st, std::span<const double> prev) {
        ++steps;
        for (std::size_t i = 0; i < st.phi.size(); ++i) {
            worst_drop = std::min(worst_drop, st.phi[i] - prev[i]);
            lo = std::min(lo, st.phi[i]);
            hi = std::max(hi, st.phi[i]);
        }
        min_dissipation = std::min(min_dissipation, r.dissipation);
        max_passes = std::max(max_passes, r.active_set_passes);
        max_nodes = std::max(max_nodes, mesh.num_nodes());
    };
    obs.on_adapt = [&](const TriMesh& mesh, const FieldState&) {
        ++adaptations;
        const auto msg = validate(mesh, sim.refinement.max_level);
        if (!msg.empty()) mesh_problem = msg;
        if (max_adjacent_level_jump(mesh) > 1) mesh_problem = "level jump";
    };
    const auto rec = run_simulation(sim, obs);
    CHECK_FALSE(rec.aborted);
    CHECK(rec.fractured);
    CHECK(rec.peak_reaction > 0.0);
    CHECK(steps > 0);
    CHECK(adaptations > 0);
    CHECK(worst_drop >= -1e-12);
    CHECK(lo >= -1e-12);
    CHECK(hi <= 1.0 + 1e-12);
    CHECK(min_dissipation >= 0.0);
    CHECK(max_passes <= max_nodes);
    CHECK(mesh_problem.empty());
    CHECK(rec.final_mesh.max_level() <= 2);
}

TEST_CASE("solver settings are validated") {
    SolverConfig c;
    c.anderson_depth = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SolverConfig{};
    c.tol = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    LoadSchedule s;
    s.min_increment = 2.0;
    s.increment = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}
