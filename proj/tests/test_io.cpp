#include "doctest.h"
#include "support.hpp"

#include "esfem/mesh_io.hpp"
#include "esfem/run.hpp"
#include "esfem/vtk.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace esfem;
using namespace esfem::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("esfem_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

TriMesh two_triangles() {
    MeshData d;
    d.group_names = {"left"};
    d.nodes = {{Vec2(0, 0), 1u, 0}, {Vec2(1, 0), 0u, 0}, {Vec2(1, 1), 0u, 0}, {Vec2(0, 1), 1u, 0}};
    d.elements = {{{0, 1, 2}, 0, -1, 0}, {{0, 2, 3}, 0, -1, 0}};
    return TriMesh(std::move(d));
}

Scenario small_elastic(const fs::path& dir) {
    auto s = preset_scenario("unit_square");
    s.crack.gc = 1e6;
    s.crack.gc_interface = 1e6;
    s.loading.target = 0.05;
    s.loading.increment = 0.01;
    s.output_dir = dir.string();
    return s;
}

}  // namespace

TEST_CASE("mesh exchange format round trips") {
    Rng rng(5);
    const auto mesh = random_mesh(rng, 3);
    std::stringstream buf;
    write_mesh(buf, mesh);
    const auto back = read_mesh(buf);
    REQUIRE(back.num_nodes() == mesh.num_nodes());
    REQUIRE(back.num_elements() == mesh.num_elements());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        CHECK(back.nodes()[i].X == mesh.nodes()[i].X);
        CHECK(back.nodes()[i].boundary_tag == mesh.nodes()[i].boundary_tag);
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK(back.elements()[e].nodes == mesh.elements()[e].nodes);
        CHECK(back.elements()[e].level == mesh.elements()[e].level);
    }
    std::stringstream bad("nodes 2 elements 0\n0 0 0 0 0\n5 1 0 0 0\n");
    CHECK_THROWS_AS(read_mesh(bad), MeshError);
    CHECK_THROWS_AS(read_mesh_file("/nonexistent/mesh.txt"), IoError);
}

TEST_CASE("two-element VTK file has four points and two cells and reads back") {
    const auto dir = scratch("vtk");
    const auto mesh = two_triangles();
    const std::vector<double> u{0.0, 0.0, 0.1, 0.0, 0.1, 0.2, 0.0, 0.2};
    const std::vector<double> phi{0.0, 0.25, 0.5, 1.0};
    const auto path = (dir / "two.vtk").string();
    write_vtk(path, mesh, u, phi);
    const auto text = slurp(path);
    CHECK(text.find("POINTS 4") != std::string::npos);
    CHECK(text.find("CELLS 2") != std::string::npos);

    const auto d = read_vtk(path);
    REQUIRE(d.points.size() == 4);
    REQUIRE(d.cells.size() == 2);
    CHECK(d.cells[1] == std::array<int, 3>{0, 2, 3});
    CHECK(d.level == std::vector<int>{0, 0});
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(d.displacement[i] == doctest::Approx(u[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < phi.size(); ++i) CHECK(d.phi[i] == doctest::Approx(phi[i]).epsilon(1e-12));
    CHECK(d.points[2].x() == doctest::Approx(1.0));
    CHECK_THROWS_AS(read_vtk((dir / "missing.vtk").string()), IoError);
}

TEST_CASE("deformed output moves points and drops fully cracked cells") {
    const auto dir = scratch("deformed");
    const auto mesh = two_triangles();
    const std::vector<double> u{0.0, 0.0, 0.5, 0.0, 0.5, 0.5, 0.0, 0.5};
    // Every node of the second element is above the crack level, one node of the first is not.
    const std::vector<double> phi{0.9, 0.1, 0.9, 0.9};
    const auto path = (dir / "def.vtk").string();
    write_vtk_deformed(path, mesh, u, phi);
    const auto d = read_vtk(path);
    REQUIRE(d.cells.size() == 1);
    CHECK(d.cells[0] == std::array<int, 3>{0, 1, 2});
    CHECK(d.points[2].x() == doctest::Approx(1.5));
    CHECK(d.points[2].y() == doctest::Approx(1.5));

    write_vtk_deformed(path, mesh, u, phi, 0.95);
    CHECK(read_vtk(path).cells.size() == 2);
}

TEST_CASE("elastic run writes every output and is reproducible in deterministic mode") {
    const auto a = scratch("run_a"), b = scratch("run_b");
    RunFlags flags;
    flags.deterministic = true;
    const auto ra = run(small_elastic(a), flags);
    const auto rb = run(small_elastic(b), flags);
    for (const auto& f : {ra.csv, ra.log, ra.summary, ra.scenario_copy}) CHECK(fs::exists(f));
    CHECK_FALSE(ra.snapshots.empty());
    CHECK(slurp(ra.csv) == slurp(rb.csv));
    CHECK(slurp(ra.summary) == slurp(rb.summary));
    CHECK(slurp(ra.log) == slurp(rb.log));

    const auto summary = slurp(ra.summary);
    CHECK(summary.find("status = ok") != std::string::npos);
    CHECK(summary.find("fractured = false") != std::string::npos);
    CHECK(summary.find("wall_seconds") == std::string::npos);

    const auto curve = read_curve(ra.csv);
    REQUIRE(curve.size() == ra.record.steps.size());
    CHECK(curve.back().displacement == doctest::Approx(0.05));
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].force > curve[i - 1].force);
    CHECK(ra.peak_force == doctest::Approx(curve.back().force));

    // The copied scenario reproduces the run configuration.
    CHECK(format_scenario(load_scenario_file(ra.scenario_copy)) == format_scenario(small_elastic(a)));

    const auto timed = run(small_elastic(scratch("run_c")));
    CHECK(slurp(timed.summary).find("wall_seconds") != std::string::npos);
}
