#include "doctest.h"

#include "esfem/scenario.hpp"

#include <cmath>

using namespace esfem;

namespace {

std::string header(const std::string& preset) { return "schema = esfem-scenario/1\npreset = " + preset + "\n"; }

int error_line(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST_CASE("double edge notch preset carries the published parameters") {
    const auto s = preset_scenario("double_edge_notch");
    CHECK(s.geometry.at("width") == 40.0);
    CHECK(s.geometry.at("height") == 100.0);
    CHECK(s.geometry.at("notch") == 16.0);
    CHECK(s.material.mu == 0.612);
    CHECK(s.material.nu == 0.45);
    CHECK(s.crack.variant == CrackVariant::AT2);
    CHECK(s.crack.l0 == 1.0);
    CHECK(s.crack.gc == 7.5);
    CHECK(s.crack.eta == 1e-3);
    CHECK(s.refine_h_f == 0.25);
    CHECK_NOTHROW(validate(s));
}

TEST_CASE("every preset validates and builds a conforming mesh") {
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const auto s = preset_scenario(name);
        CHECK_NOTHROW(validate(s));
        const auto sim = build_simulation(s);
        CHECK(sim.mesh.num_elements() > 0);
        CHECK(validate(sim.mesh, 0).empty());
    }
    CHECK_THROWS_AS(preset_scenario("nope"), ConfigError);
}

TEST_CASE("unknown and duplicate keys are reported with their line") {
    CHECK(error_line(header("unit_square") + "\nmaterial.muu = 1\n") == 4);
    CHECK(error_line(header("unit_square") + "crack.l0 = 0.1\n# note\ncrack.l0 = 0.2\n") == 5);
    CHECK(error_line(header("unit_square") + "crack.l0 = abc\n") == 3);
    CHECK(error_line(header("unit_square") + "just words\n") == 3);
    CHECK(error_line(header("unit_square") + "geometry.width = 3\n") == 3);
    CHECK(error_line("schema = esfem-scenario/2\npreset = unit_square\n") == 1);
    CHECK_THROWS_AS(parse_scenario("preset = unit_square\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("schema = esfem-scenario/1\n"), ConfigError);
}

TEST_CASE("invalid material values name the field") {
    CHECK_THROWS_WITH_AS(parse_scenario(header("double_edge_notch") + "material.mu = -1\n"),
                         doctest::Contains("material.mu"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_scenario(header("double_edge_notch") + "material.nu = 0.5\n"),
                         doctest::Contains("material.nu"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_scenario(header("double_edge_notch") + "refine.energy_fraction = -0.1\n"),
                         doctest::Contains("refine.energy_fraction"), ConfigError);
}

TEST_CASE("settings override preset values and boundary lists") {
    const auto s = parse_scenario(header("double_edge_notch") +
                                  "geometry.notch = 12\n"
                                  "crack.eta = 0\n"
                                  "refine.energy_fraction = 0.25\n"
                                  "dirichlet.base = bottom y 0\n"
                                  "loading.target = 3  # short\n");
    CHECK(s.geometry.at("notch") == 12.0);
    CHECK(s.crack.eta == 0.0);
    CHECK(s.refine.energy_fraction == 0.25);
    CHECK(s.loading.target == 3.0);
    REQUIRE(s.dirichlet.size() == 1);
    CHECK(s.dirichlet[0].label == "base");
    CHECK(s.dirichlet[0].bc.group == "bottom");
    CHECK(s.dirichlet[0].bc.component == 1);
}

TEST_CASE("formatted scenarios parse back to the same text") {
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        auto s = preset_scenario(name);
        s.crack.eta = 0.1 / 3.0;
        s.loading.target *= 1.0 + 1e-13;
        const auto text = format_scenario(s);
        const auto back = parse_scenario(text);
        CHECK(format_scenario(back) == text);
        CHECK(back.crack.eta == s.crack.eta);
        CHECK(back.loading.target == s.loading.target);
        CHECK(back.dirichlet.size() == s.dirichlet.size());
    }
}

TEST_CASE("refinement depth follows from halving the size every two levels") {
    CHECK(levels_for(2.0, 0.25) == 6);
    CHECK(levels_for(1.0, 0.5) == 2);
    CHECK(levels_for(1.0, 0.6) == 2);
    CHECK(levels_for(1.0, 0.75) == 1);
    CHECK(levels_for(1.0, 2.0) == 0);
    CHECK(levels_for(1.0, 0.0) == 0);
    for (double h0 : {0.3, 1.0, 2.5}) {
        for (double hf : {0.01, 0.05, 0.2}) {
            const int L = levels_for(h0, hf);
            CHECK(achieved_size(h0, L) <= hf * (1.0 + 1e-12));
            if (L > 0) CHECK(achieved_size(h0, L - 1) > hf);
        }
    }
    CHECK(achieved_size(2.0, 6) == doctest::Approx(0.25));

    const auto sim = build_simulation(preset_scenario("double_edge_notch"));
    CHECK(sim.refinement.max_level == 6);
    CHECK(sim.refinement.enabled);
}

TEST_CASE("schema listing names every key family") {
    const auto schema = scenario_schema();
    for (const char* key : {"material.mu", "crack.l0", "loading.target", "refine.h_f", "refine.energy_fraction",
                            "dirichlet.", "traction.", "stop.fracture_ratio"}) {
        CAPTURE(key);
        CHECK(schema.find(key) != std::string::npos);
    }
}
