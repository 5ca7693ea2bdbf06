#include "doctest.h"
#include "support.hpp"

#include "esfem/assembly.hpp"
#include "esfem/presets.hpp"

#include <map>

using namespace esfem;
using namespace esfem::testing;

namespace {

struct Oracle {
    Mat2 H = Mat2::Zero();
    double phi = 0.0;
    Vec2 grad_phi = Vec2::Zero();
    double area = 0.0;
    int tag_sum = 0;
};

// Domain averages rebuilt element by element, without the library's smoothing code.
std::vector<Oracle> oracle_domains(const TriMesh& mesh, const std::vector<double>& u, const std::vector<double>& phi) {
    std::map<std::pair<int, int>, Oracle> by_edge;
    for (const auto& el : mesh.elements()) {
        const auto& n = el.nodes;
        const Vec2 a = mesh.nodes()[n[0]].X, b = mesh.nodes()[n[1]].X, c = mesh.nodes()[n[2]].X;
        const double two_a = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        const std::array<Vec2, 3> g{Vec2(b.y() - c.y(), c.x() - b.x()) / two_a, Vec2(c.y() - a.y(), a.x() - c.x()) / two_a,
                                    Vec2(a.y() - b.y(), b.x() - a.x()) / two_a};
        Mat2 H = Mat2::Zero();
        Vec2 gp = Vec2::Zero();
        double mean = 0.0;
        for (int i = 0; i < 3; ++i) {
            H.row(0) += u[2 * n[i]] * g[i].transpose();
            H.row(1) += u[2 * n[i] + 1] * g[i].transpose();
            gp += phi[n[i]] * g[i];
            mean += phi[n[i]] / 3.0;
        }
        const double w = two_a / 6.0;
        for (int i = 0; i < 3; ++i) {
            const int p = std::min(n[i], n[(i + 1) % 3]), q = std::max(n[i], n[(i + 1) % 3]);
            auto& o = by_edge[{p, q}];
            o.H += w * H;
            o.grad_phi += w * gp;
            o.phi += w * mean;
            o.area += w;
        }
    }
    std::vector<Oracle> out;
    for (auto& [key, o] : by_edge) {
        o.H /= o.area;
        o.grad_phi /= o.area;
        o.phi /= o.area;
        out.push_back(o);
    }
    return out;
}

double oracle_psi(const Mat2& F, const MaterialModel& m) {
    const double J = F.determinant();
    const double beta = m.beta();
    return 0.5 * m.mu * (F.squaredNorm() + 1.0 - 3.0) + m.mu / beta * (std::pow(J, -beta) - 1.0);
}

double oracle_strain_energy(const TriMesh& mesh, const std::vector<double>& u, const std::vector<double>& phi,
                            const MaterialModel& m) {
    double sum = 0.0;
    for (const auto& o : oracle_domains(mesh, u, phi)) {
        const double g = (1.0 - o.phi) * (1.0 - o.phi) + m.k;
        sum += o.area * g * oracle_psi(Mat2::Identity() + o.H, m);
    }
    return sum;
}

// Functional whose gradient in phi is the phase residual, psi0 frozen at `u`.
double oracle_phase_functional(const TriMesh& mesh, const std::vector<double>& u, const std::vector<double>& phi,
                               const std::vector<double>& phi_n, double dt, const MaterialModel& m,
                               const CrackModel& c) {
    const auto cur = oracle_domains(mesh, u, phi);
    const auto old = oracle_domains(mesh, u, phi_n);
    double sum = 0.0;
    for (std::size_t k = 0; k < cur.size(); ++k) {
        const auto& o = cur[k];
        const double psi = oracle_psi(Mat2::Identity() + o.H, m);
        const double g2 = o.grad_phi.squaredNorm();
        const double surf = c.variant == CrackVariant::AT1 ? 3.0 / 8.0 * (o.phi / c.l0 + c.l0 * g2)
                                                           : 0.5 * (o.phi * o.phi / c.l0 + c.l0 * g2);
        const double d = o.phi - old[k].phi;
        sum += o.area * ((1.0 - o.phi) * (1.0 - o.phi) * psi + c.gc * surf + 0.5 * c.eta / dt * d * d);
    }
    return sum;
}

struct RandomState {
    std::vector<double> u, phi, phi_n;
};

RandomState random_state(const TriMesh& mesh, Rng& rng, double strain) {
    RandomState s;
    const Mat2 A = Mat2::Random() * strain;
    for (const auto& n : mesh.nodes()) {
        const Vec2 d = A * n.X;
        s.u.push_back(d.x() + uniform(rng, -0.3, 0.3) * strain * 0.2);
        s.u.push_back(d.y() + uniform(rng, -0.3, 0.3) * strain * 0.2);
        const double pn = uniform(rng, 0.0, 0.4);
        s.phi_n.push_back(pn);
        s.phi.push_back(std::min(1.0, pn + uniform(rng, 0.0, 0.3)));
    }
    return s;
}

}  // namespace

TEST_CASE("two-element energy and forces match an element-by-element oracle") {
    const auto mesh = unit_square_mesh();
    REQUIRE(mesh.num_elements() == 2);
    const auto domains = build_smoothing_domains(mesh);
    REQUIRE(domains.size() == 5);
    Assembler asmb(mesh, domains);
    const auto m = MaterialModel::from_nu(0.612, 0.45, 1e-3);
    Rng rng(5);
    auto s = random_state(mesh, rng, 0.2);

    GlobalSystem sys;
    asmb.assemble_displacement(s.u, s.phi, m, Vector::Zero(8), sys);
    const double oracle = oracle_strain_energy(mesh, s.u, s.phi, m);
    CHECK(rel_err(sys.energy, oracle) < 1e-12);
    CHECK(rel_err(asmb.strain_energy(s.u, s.phi, m), oracle) < 1e-12);

    const double h = 1e-6;
    for (int i = 0; i < 8; ++i) {
        auto up = s.u, um = s.u;
        up[i] += h;
        um[i] -= h;
        const double fd = (oracle_strain_energy(mesh, up, s.phi, m) - oracle_strain_energy(mesh, um, s.phi, m)) / (2 * h);
        CHECK(std::abs(sys.internal[i] - fd) <= 1e-6 * sys.internal.cwiseAbs().maxCoeff());
    }
    CHECK((sys.residual - sys.internal).norm() == 0.0);
}

TEST_CASE("displacement tangent matches finite differences of the assembled residual") {
    Rng rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const auto mesh = jittered_square(trial < 3 ? 4 : 6, 0.25, rng);
        CAPTURE(trial);
        REQUIRE(2 * mesh.num_nodes() <= 200);
        const auto domains = build_smoothing_domains(mesh);
        Assembler asmb(mesh, domains);
        const auto m = trial % 2 ? MaterialModel::from_lambda(5.0, 7.5, 1e-6) : MaterialModel::from_nu(0.612, 0.45, 1e-3);
        auto s = random_state(mesh, rng, 0.3);
        const int n = 2 * mesh.num_nodes();
        const Vector ext = Vector::Zero(n);
        GlobalSystem sys;
        asmb.assemble_displacement(s.u, s.phi, m, ext, sys);
        const Eigen::MatrixXd K = Eigen::MatrixXd(sys.K);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());

        Eigen::MatrixXd fd(n, n);
        const double h = 1e-6;
        GlobalSystem p, q;
        for (int j = 0; j < n; ++j) {
            auto up = s.u, um = s.u;
            up[j] += h;
            um[j] -= h;
            asmb.assemble_displacement(up, s.phi, m, ext, p);
            asmb.assemble_displacement(um, s.phi, m, ext, q);
            fd.col(j) = (p.residual - q.residual) / (2 * h);
        }
        CHECK((K - fd).cwiseAbs().maxCoeff() / K.cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("phase residual is the gradient of the phase functional and its tangent is exact") {
    Rng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        CAPTURE(trial);
        const auto mesh = jittered_square(5, 0.25, rng);
        const auto domains = build_smoothing_domains(mesh);
        Assembler asmb(mesh, domains);
        const auto m = MaterialModel::from_nu(0.612, 0.45, 1e-3);
        CrackModel c;
        c.variant = trial % 2 ? CrackVariant::AT1 : CrackVariant::AT2;
        c.l0 = 0.3;
        c.gc = 2.0;
        c.gc_interface = 2.0;
        c.eta = trial < 2 ? 1e-3 : 0.0;
        const double dt = 0.01;
        auto s = random_state(mesh, rng, 0.3);
        const auto psi0 = asmb.domain_psi0(s.u, m);
        GlobalSystem sys;
        asmb.assemble_phase(psi0, s.phi, s.phi_n, dt, c, sys);

        const int n = mesh.num_nodes();
        const double h = 1e-6;
        const double scale = sys.residual.cwiseAbs().maxCoeff();
        Eigen::MatrixXd fd(n, n);
        GlobalSystem p, q;
        for (int j = 0; j < n; ++j) {
            auto pp = s.phi, pm = s.phi;
            pp[j] += h;
            pm[j] -= h;
            const double g = (oracle_phase_functional(mesh, s.u, pp, s.phi_n, dt, m, c) -
                              oracle_phase_functional(mesh, s.u, pm, s.phi_n, dt, m, c)) /
                             (2 * h);
            CHECK(std::abs(sys.residual[j] - g) <= 1e-6 * scale);
            asmb.assemble_phase(psi0, pp, s.phi_n, dt, c, p);
            asmb.assemble_phase(psi0, pm, s.phi_n, dt, c, q);
            fd.col(j) = (p.residual - q.residual) / (2 * h);
        }
        const Eigen::MatrixXd K = Eigen::MatrixXd(sys.K);
        CHECK((K - fd).cwiseAbs().maxCoeff() / K.cwiseAbs().maxCoeff() <= 1e-5);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * K.cwiseAbs().maxCoeff());
        CHECK(rel_err(sys.energy, surface_energy(domains, s.phi, c)) < 1e-12);
    }
}

TEST_CASE("reaction of a homogeneous stretch equals the nominal stress times the edge length") {
    Rng rng(3);
    const auto mesh = jittered_square(5, 0.25, rng);
    const auto domains = build_smoothing_domains(mesh);
    Assembler asmb(mesh, domains);
    const auto m = MaterialModel::from_nu(0.612, 0.45, 1e-3);
    Mat2 F;
    F << 0.95, 0.0, 0.0, 1.4;
    std::vector<double> u, phi(mesh.num_nodes(), 0.2);
    for (const auto& n : mesh.nodes()) {
        const Vec2 d = (F - Mat2::Identity()) * n.X;
        u.push_back(d.x());
        u.push_back(d.y());
    }
    GlobalSystem sys;
    asmb.assemble_displacement(u, phi, m, Vector::Zero(u.size()), sys);
    const double J = F.determinant();
    const Mat2 P = m.mu * F - m.mu * std::pow(J, -m.beta()) * F.inverse().transpose();
    const double g = 0.8 * 0.8 + m.k;
    CHECK(rel_err(reaction_force(mesh, sys.internal, "top", 1), g * P(1, 1)) < 1e-10);
    CHECK(rel_err(reaction_force(mesh, sys.internal, "right", 0), g * P(0, 0)) < 1e-10);
    CHECK_THROWS_AS(reaction_force(mesh, sys.internal, "nowhere", 1), ConfigError);
}

TEST_CASE("edge tractions are lumped to the edge end points") {
    Rng rng(4);
    const auto mesh = jittered_square(3, 0.0, rng);
    BoundaryConditions bcs;
    bcs.tractions.push_back({"top", Vec2(0.0, 2.0)});
    bcs.body_force = Vec2(0.5, 0.0);
    const Vector f = external_forces(mesh, bcs, 1.5);
    double fx = 0.0, fy = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        fx += f[2 * i];
        fy += f[2 * i + 1];
    }
    CHECK(fy == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fx == doctest::Approx(0.75).epsilon(1e-14));
    for (int n : mesh.group_nodes("top")) {
        const double x = mesh.nodes()[n].X.x();
        const double expect = (x < 1e-12 || x > 1 - 1e-12) ? 0.5 : 1.0;
        CHECK(f[2 * n + 1] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("constraints resolve groups and reject conflicts") {
    Rng rng(9);
    const auto mesh = jittered_square(2, 0.0, rng);
    BoundaryConditions bcs;
    bcs.dirichlet = {{"left", 0, 0.0}, {"top", 1, 2.0}};
    const auto c = resolve_constraints(mesh, bcs);
    CHECK(std::is_sorted(c.dofs.begin(), c.dofs.end()));
    CHECK(c.dofs.size() == mesh.group_nodes("left").size() + mesh.group_nodes("top").size());
    bcs.dirichlet.push_back({"right", 1, 1.0});
    CHECK_THROWS_AS(resolve_constraints(mesh, bcs), ConfigError);
    bcs.dirichlet = {{"missing", 0, 0.0}};
    CHECK_THROWS_AS(resolve_constraints(mesh, bcs), ConfigError);
}

TEST_CASE("elimination turns constrained rows and columns into identity") {
    Rng rng(2);
    const auto mesh = jittered_square(3, 0.2, rng);
    const auto domains = build_smoothing_domains(mesh);
    Assembler asmb(mesh, domains);
    auto s = random_state(mesh, rng, 0.1);
    GlobalSystem sys;
    asmb.assemble_displacement(s.u, s.phi, MaterialModel::from_nu(1.0, 0.3), Vector::Zero(s.u.size()), sys);
    std::vector<int> fixed{0, 3, 7};
    SparseMatrix K = sys.K;
    Vector r = sys.residual;
    eliminate(K, r, fixed);
    const Eigen::MatrixXd D(K);
    for (int i : fixed) {
        CHECK(r[i] == 0.0);
        for (int j = 0; j < D.rows(); ++j) {
            CHECK(D(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(D(j, i) == (i == j ? 1.0 : 0.0));
        }
    }
    Vector v = Vector::Ones(D.rows());
    CHECK(free_norm(v, fixed) == doctest::Approx(std::sqrt(D.rows() - 3.0)));
}
