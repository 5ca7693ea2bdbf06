#include "esfem/smoothing.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace esfem;
using namespace esfem::testing;

TEST_CASE("element gradients reproduce linear fields") {
    const Vec2 a(0.1, 0.2), b(1.3, 0.1), c(0.4, 0.9);
    const auto g = element_gradient(a, b, c);
    const double f[3] = {2 + 3 * a.x() - a.y(), 2 + 3 * b.x() - b.y(), 2 + 3 * c.x() - c.y()};
    const Vec2 grad = g.transpose() * Eigen::Vector3d(f[0], f[1], f[2]);
    CHECK(grad.x() == doctest::Approx(3.0));
    CHECK(grad.y() == doctest::Approx(-1.0));
    CHECK_THROWS_AS(element_gradient(a, c, b), MeshError);
}

TEST_CASE("smoothing domains partition the mesh area") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mesh = random_mesh(rng);
        const auto domains = build_smoothing_domains(mesh);
        REQUIRE(domains.size() == mesh.edges().size());
        double sum = 0.0;
        for (const auto& d : domains) {
            sum += d.area;
            double shape = 0.0;
            Vec2 grad = Vec2::Zero();
            for (int i = 0; i < d.num_support; ++i) {
                shape += d.shape[i];
                grad += d.grad[i];
            }
            CHECK(shape == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(grad.norm() < 1e-10 * d.grad[0].norm() + 1e-12);
            CHECK(d.num_support == (mesh.edges()[d.edge].is_boundary() ? 3 : 4));
        }
        CHECK(rel_err(sum, mesh.total_area()) <= 1e-12);
    }
}

TEST_CASE("affine displacement gives a constant smoothed deformation gradient") {
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const auto mesh = random_mesh(rng);
        const auto domains = build_smoothing_domains(mesh);
        Mat2 H;
        H << uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3);
        const Vec2 c(uniform(rng, -1, 1), uniform(rng, -1, 1));
        std::vector<double> u(2 * mesh.num_nodes());
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            const Vec2 ui = c + H * mesh.nodes()[i].X;
            u[2 * i] = ui.x();
            u[2 * i + 1] = ui.y();
        }
        for (const auto& d : domains) {
            const auto k = smoothed_kinematics(d, u);
            CHECK((k.H - H).norm() <= 1e-10);
            CHECK((k.F - Mat2::Identity() - H).norm() <= 1e-10);
            CHECK(k.J == doctest::Approx((Mat2::Identity() + H).determinant()).epsilon(1e-10));
        }
    }
}

TEST_CASE("area-weighted gradients agree with the boundary-integral construction") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mesh = random_mesh(rng);
        const auto domains = build_smoothing_domains(mesh);
        for (const auto& d : domains) {
            for (int i = 0; i < d.num_support; ++i) {
                double area = 0.0;
                const Vec2 ref = boundary_integral_gradient(mesh, d, d.nodes[i], area);
                CHECK(area == doctest::Approx(d.area).epsilon(1e-12));
                CHECK((d.grad[i] - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
            }
        }
    }
}

TEST_CASE("inverted domains are reported") {
    const auto mesh = unit_square_mesh();
    const auto domains = build_smoothing_domains(mesh);
    std::vector<double> u(8, 0.0);
    for (int i = 0; i < 4; ++i) u[2 * i] = -2.0 * mesh.nodes()[i].X.x();  // x -> -x
    CHECK(min_jacobian(domains, u) < 0.0);
    CHECK_THROWS_AS(smoothed_deformation(domains[0], u), InvertedConfiguration);
}
