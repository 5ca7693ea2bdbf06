#include "esfem/scenario.hpp"

#include "esfem/mesh_io.hpp"
#include "esfem/presets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace esfem {

namespace {

struct KeyInfo {
    const char* key;
    const char* type;
    const char* help;
};

const KeyInfo kKeys[] = {
    {"schema", "string", "must be esfem-scenario/1"},
    {"preset", "string", "double_edge_notch | central_crack_slab | holed_panel | interface_strip | unit_square"},
    {"mesh_file", "path", "mesh in the exchange format (instead of preset)"},
    {"geometry.<name>", "number", "preset geometry parameter (mm); geometry.h0 is the initial element size"},
    {"material.variant", "enum", "nu_form | lambda_form"},
    {"material.mu", "number", "shear modulus (N/mm^2)"},
    {"material.nu", "number", "Poisson ratio (nu_form)"},
    {"material.lambda", "number", "modulus Lambda (N/mm^2, lambda_form)"},
    {"material.k", "number", "degradation floor"},
    {"crack.model", "enum", "AT1 | AT2"},
    {"crack.l0", "number", "regularization length (mm)"},
    {"crack.gc", "number", "bulk fracture energy (N/mm)"},
    {"crack.gc_interface", "number", "fracture energy on region-tagged domains (N/mm)"},
    {"crack.eta", "number", "viscosity (N s/mm^2)"},
    {"loading.target", "number", "final load factor (prescribed displacement, mm)"},
    {"loading.initial_increment", "number", "first load increment"},
    {"loading.min_increment", "number", "smallest increment before the run aborts"},
    {"loading.max_increment", "number", "largest increment"},
    {"loading.rate", "number", "load factor per second; time step = increment / rate"},
    {"refine.enabled", "bool", "adaptive refinement after accepted steps"},
    {"refine.threshold", "number", "refine elements with a node at phi >= threshold"},
    {"refine.max_level", "int", "maximum element level R_L (overrides refine.h_f)"},
    {"refine.h_f", "number", "target element size near the crack (mm); sets R_L"},
    {"refine.coarsen", "bool", "merge siblings where phi < refine.coarsen_threshold"},
    {"refine.coarsen_threshold", "number", "coarsening threshold"},
    {"refine.smooth", "bool", "ODT smoothing of new nodes when quality drops"},
    {"refine.energy_fraction", "number", "also refine where psi0 >= fraction * 3 Gc / (16 l0), one level per step (0: off)"},
    {"solver.tol", "number", "staggered tolerance on residual ratios"},
    {"solver.newton_tol", "number", "displacement Newton tolerance"},
    {"solver.max_staggered", "int", "staggered iterations per step"},
    {"solver.max_newton", "int", "Newton iterations per displacement solve"},
    {"solver.anderson_depth", "int", "Anderson mixing depth for staggered iterates (0: plain alternation)"},
    {"solver.dphi_max", "number", "largest accepted nodal phase increment per step"},
    {"solver.growth", "number", "increment growth factor in quiescent steps"},
    {"solver.shrink", "number", "increment factor after a rejected step"},
    {"solver.linear_tol", "number", "relative residual required from linear solves"},
    {"solver.resolve_after_refine", "bool", "re-solve the accepted load level after refinement"},
    {"output.dir", "path", "run directory"},
    {"output.snapshot_every", "int", "VTK snapshot cadence in accepted steps (0: final only)"},
    {"stop.fracture_ratio", "number", "stop once the reaction drops below ratio * peak after the peak (0: never)"},
    {"report.group", "string", "boundary group whose reaction is reported"},
    {"report.component", "enum", "x | y"},
    {"report.force_scale", "number", "factor from model reaction to reported force (symmetry)"},
    {"report.displacement_scale", "number", "factor from load factor to reported displacement (symmetry)"},
    {"dirichlet.<label>", "group x|y scale", "prescribe u_x or u_y = scale * load on a boundary group"},
    {"traction.<label>", "group tx ty", "traction (N/mm) scaled by load on a boundary group"},
};

const std::map<std::string, std::vector<std::string>>& geometry_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"unit_square", {}},
        {"double_edge_notch", {"width", "height", "notch", "h0"}},
        {"central_crack_slab", {"half_width", "half_height", "half_crack", "h0"}},
        {"holed_panel", {"length", "height", "h0", "hole1_x", "hole1_y", "hole1_r", "hole2_x", "hole2_y", "hole2_r"}},
        {"interface_strip", {"width", "half_height", "notch", "band_width", "h0"}},
        {"", {"h0"}},
    };
    return keys;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& key, const std::string& v, int line) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + v + "'", line);
    return out;
}

int parse_int(const std::string& key, const std::string& v, int line) {
    int out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'", line);
}

int parse_component(const std::string& key, const std::string& v, int line) {
    if (v == "x") return 0;
    if (v == "y") return 1;
    throw ConfigError(key + ": expected x or y, got '" + v + "'", line);
}

std::vector<std::string> words(const std::string& v) {
    std::istringstream in(v);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

template <class T>
void upsert(std::vector<T>& list, const std::string& label, auto value) {
    for (auto& item : list) {
        if (item.label == label) {
            item = T{label, value};
            return;
        }
    }
    list.push_back(T{label, value});
}

double geometry_value(const Scenario& s, const std::string& name) { return s.geometry.at(name); }

Scenario base_defaults() {
    Scenario s;
    s.material = MaterialModel::from_nu(1.0, 0.3);
    s.crack.variant = CrackVariant::AT2;
    s.crack.l0 = 1.0;
    s.crack.gc = 1.0;
    s.crack.gc_interface = 1.0;
    s.crack.eta = 0.0;
    s.loading = LoadSchedule{0.0, 0.01, 1e-6, 0.1, 0.1, 1.0};
    return s;
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"double_edge_notch", "central_crack_slab", "holed_panel",
                                                "interface_strip", "unit_square"};
    return names;
}

Scenario preset_scenario(const std::string& name) {
    Scenario s = base_defaults();
    s.preset = name;
    auto dir = [&](const std::string& label, const std::string& group, int comp, double scale) {
        s.dirichlet.push_back({label, DirichletGroup{group, comp, scale}});
    };
    if (name == "unit_square") {
        dir("fix_x", "left", 0, 0.0);
        dir("fix_y", "bottom", 1, 0.0);
        dir("pull", "top", 1, 1.0);
        s.report_group = "top";
    } else if (name == "double_edge_notch") {
        s.geometry = {{"width", 40.0}, {"height", 100.0}, {"notch", 16.0}, {"h0", 2.0}};
        s.material = MaterialModel::from_nu(0.612, 0.45);
        s.crack = CrackModel{CrackVariant::AT2, 1.0, 7.5, 7.5, 1e-3};
        s.loading = LoadSchedule{0.0, 0.5, 1e-5, 1.0, 40.0, 1.0};
        s.fracture_ratio = 0.05;
        s.refine.enabled = true;
        s.refine_h_f = 0.25;
        dir("symmetry_x", "left", 0, 0.0);
        dir("symmetry_y", "ligament", 1, 0.0);
        dir("pull", "top", 1, 1.0);
        dir("grip", "top", 0, 0.0);
        s.report_group = "top";
        s.force_scale = 2.0;
        s.displacement_scale = 2.0;
    } else if (name == "central_crack_slab") {
        s.geometry = {{"half_width", 0.5}, {"half_height", 0.5}, {"half_crack", 0.125}, {"h0", 0.025}};
        s.material = MaterialModel::from_lambda(5.0, 7.5);
        s.crack = CrackModel{CrackVariant::AT1, 0.01, 3.0, 3.0, 1e-3};
        s.loading = LoadSchedule{0.0, 0.01, 1e-7, 0.02, 0.8, 1.0};
        s.fracture_ratio = 0.05;
        s.refine.enabled = true;
        s.refine_h_f = 0.005;
        s.refine.energy_fraction = 0.5;
        dir("symmetry_x", "left", 0, 0.0);
        dir("symmetry_y", "ligament", 1, 0.0);
        dir("pull", "top", 1, 1.0);
        s.report_group = "top";
        s.force_scale = 2.0;
        s.displacement_scale = 2.0;
    } else if (name == "holed_panel") {
        s.geometry = {{"length", 120.0}, {"height", 65.0}, {"h0", 2.5},    {"hole1_x", 40.0}, {"hole1_y", 40.0},
                      {"hole1_r", 10.0}, {"hole2_x", 80.0}, {"hole2_y", 25.0}, {"hole2_r", 10.0}};
        s.material = MaterialModel::from_nu(0.28, 0.45);
        s.crack = CrackModel{CrackVariant::AT1, 0.5, 1.4, 1.4, 1e-3};
        s.loading = LoadSchedule{0.0, 0.5, 1e-5, 1.0, 150.0, 1.0};
        s.fracture_ratio = 0.05;
        s.refine.enabled = true;
        s.refine_h_f = 0.25;
        s.refine.energy_fraction = 0.5;
        dir("clamp_x", "left", 0, 0.0);
        dir("clamp_y", "left", 1, 0.0);
        dir("pull", "right", 0, 1.0);
        dir("grip", "right", 1, 0.0);
        s.report_group = "right";
        s.report_component = 0;
    } else if (name == "interface_strip") {
        s.geometry = {{"width", 24.0}, {"half_height", 20.0}, {"notch", 12.0}, {"band_width", 0.8}, {"h0", 1.0}};
        s.material = MaterialModel::from_nu(0.035, 0.45);
        s.crack = CrackModel{CrackVariant::AT1, 0.2, 0.034, 0.0017, 1e-3};
        s.loading = LoadSchedule{0.0, 0.2, 1e-6, 0.5, 5.0, 0.01};
        s.fracture_ratio = 0.05;
        s.refine.enabled = true;
        s.refine_h_f = 0.1;
        dir("symmetry_y", "ligament", 1, 0.0);
        dir("pull", "top", 1, 1.0);
        dir("grip", "top", 0, 0.0);
        s.report_group = "top";
        s.displacement_scale = 2.0;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return s;
}

void apply_setting(Scenario& s, const std::string& key, const std::string& value, int line) {
    auto number = [&] { return parse_number(key, value, line); };
    auto integer = [&] { return parse_int(key, value, line); };
    auto boolean = [&] { return parse_bool(key, value, line); };

    if (key == "schema") {
        if (value != kScenarioSchema) throw ConfigError("unsupported schema '" + value + "'", line);
    } else if (key == "preset" || key == "mesh_file") {
        throw ConfigError(key + " can only be set once, at load time", line);
    } else if (key.rfind("geometry.", 0) == 0) {
        const auto name = key.substr(9);
        const auto& allowed = geometry_keys().at(s.preset);
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
            throw ConfigError("unknown key '" + key + "' for " + (s.preset.empty() ? "mesh_file" : s.preset), line);
        s.geometry[name] = number();
    } else if (key == "material.variant") {
        if (value == "nu_form") s.material.variant = MaterialVariant::nu_form;
        else if (value == "lambda_form") s.material.variant = MaterialVariant::lambda_form;
        else throw ConfigError(key + ": expected nu_form or lambda_form", line);
    } else if (key == "material.mu") {
        s.material.mu = number();
    } else if (key == "material.nu") {
        s.material.nu = number();
    } else if (key == "material.lambda") {
        s.material.lambda = number();
    } else if (key == "material.k") {
        s.material.k = number();
    } else if (key == "crack.model") {
        if (value == "AT1") s.crack.variant = CrackVariant::AT1;
        else if (value == "AT2") s.crack.variant = CrackVariant::AT2;
        else throw ConfigError(key + ": expected AT1 or AT2", line);
    } else if (key == "crack.l0") {
        s.crack.l0 = number();
    } else if (key == "crack.gc") {
        s.crack.gc = number();
    } else if (key == "crack.gc_interface") {
        s.crack.gc_interface = number();
    } else if (key == "crack.eta") {
        s.crack.eta = number();
    } else if (key == "loading.target") {
        s.loading.target = number();
    } else if (key == "loading.initial_increment") {
        s.loading.increment = number();
    } else if (key == "loading.min_increment") {
        s.loading.min_increment = number();
    } else if (key == "loading.max_increment") {
        s.loading.max_increment = number();
    } else if (key == "loading.rate") {
        s.loading.rate = number();
    } else if (key == "refine.enabled") {
        s.refine.enabled = boolean();
    } else if (key == "refine.threshold") {
        s.refine.threshold = number();
    } else if (key == "refine.max_level") {
        s.refine.max_level = integer();
        s.max_level_explicit = true;
    } else if (key == "refine.h_f") {
        s.refine_h_f = number();
    } else if (key == "refine.coarsen") {
        s.refine.coarsen = boolean();
    } else if (key == "refine.coarsen_threshold") {
        s.refine.coarsen_threshold = number();
    } else if (key == "refine.smooth") {
        s.refine.smooth = boolean();
    } else if (key == "refine.energy_fraction") {
        s.refine.energy_fraction = number();
    } else if (key == "solver.tol") {
        s.solver.tol = number();
    } else if (key == "solver.newton_tol") {
        s.solver.newton_tol = number();
    } else if (key == "solver.max_staggered") {
        s.solver.max_staggered = integer();
    } else if (key == "solver.max_newton") {
        s.solver.max_newton = integer();
    } else if (key == "solver.anderson_depth") {
        s.solver.anderson_depth = integer();
    } else if (key == "solver.dphi_max") {
        s.solver.dphi_max = number();
    } else if (key == "solver.growth") {
        s.solver.growth = number();
    } else if (key == "solver.shrink") {
        s.solver.shrink = number();
    } else if (key == "solver.linear_tol") {
        s.solver.linear_tol = number();
    } else if (key == "solver.resolve_after_refine") {
        s.solver.resolve_after_refine = boolean();
    } else if (key == "output.dir") {
        if (value.empty()) throw ConfigError("output.dir must not be empty", line);
        s.output_dir = value;
    } else if (key == "output.snapshot_every") {
        s.snapshot_every = integer();
    } else if (key == "stop.fracture_ratio") {
        s.fracture_ratio = number();
    } else if (key == "report.group") {
        s.report_group = value;
    } else if (key == "report.component") {
        s.report_component = parse_component(key, value, line);
    } else if (key == "report.force_scale") {
        s.force_scale = number();
    } else if (key == "report.displacement_scale") {
        s.displacement_scale = number();
    } else if (key.rfind("dirichlet.", 0) == 0 && key.size() > 10) {
        const auto label = key.substr(10);
        if (value == "none") {
            std::erase_if(s.dirichlet, [&](const auto& d) { return d.label == label; });
            return;
        }
        const auto w = words(value);
        if (w.size() != 3) throw ConfigError(key + ": expected 'group x|y scale'", line);
        upsert(s.dirichlet, label, DirichletGroup{w[0], parse_component(key, w[1], line), parse_number(key, w[2], line)});
    } else if (key.rfind("traction.", 0) == 0 && key.size() > 9) {
        const auto label = key.substr(9);
        if (value == "none") {
            std::erase_if(s.tractions, [&](const auto& t) { return t.label == label; });
            return;
        }
        const auto w = words(value);
        if (w.size() != 3) throw ConfigError(key + ": expected 'group tx ty'", line);
        upsert(s.tractions, label,
               TractionLoad{w[0], Vec2(parse_number(key, w[1], line), parse_number(key, w[2], line))});
    } else {
        throw ConfigError("unknown key '" + key + "'", line);
    }
}

Scenario parse_scenario(std::string_view text) {
    struct Entry {
        std::string key, value;
        int line;
    };
    std::vector<Entry> entries;
    std::set<std::string> seen;
    int lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        const auto hash = raw.find('#');
        const auto content = trim(std::string_view(raw).substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
        Entry e{trim(content.substr(0, eq)), trim(content.substr(eq + 1)), lineno};
        if (e.key.empty()) throw ConfigError("missing key before '='", lineno);
        if (!seen.insert(e.key).second) throw ConfigError("duplicate key '" + e.key + "'", lineno);
        entries.push_back(std::move(e));
    }

    const Entry* schema = nullptr;
    const Entry* preset = nullptr;
    const Entry* mesh_file = nullptr;
    for (const auto& e : entries) {
        if (e.key == "schema") schema = &e;
        if (e.key == "preset") preset = &e;
        if (e.key == "mesh_file") mesh_file = &e;
    }
    if (!schema) throw ConfigError("missing 'schema = " + std::string(kScenarioSchema) + "'");
    if (preset && mesh_file) throw ConfigError("preset and mesh_file are mutually exclusive", mesh_file->line);
    if (!preset && !mesh_file) throw ConfigError("one of preset or mesh_file is required");

    Scenario s;
    if (preset) {
        try {
            s = preset_scenario(preset->value);
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), preset->line);
        }
    } else {
        s = base_defaults();
        s.mesh_file = mesh_file->value;
    }

    bool dirichlet_seen = false, traction_seen = false;
    for (const auto& e : entries) {
        if (&e == preset || &e == mesh_file) continue;
        if (e.key.rfind("dirichlet.", 0) == 0 && !dirichlet_seen) {
            s.dirichlet.clear();
            dirichlet_seen = true;
        }
        if (e.key.rfind("traction.", 0) == 0 && !traction_seen) {
            s.tractions.clear();
            traction_seen = true;
        }
        apply_setting(s, e.key, e.value, e.line);
    }
    validate(s);
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Scenario s = parse_scenario(buf.str());
    // A relative mesh path is taken relative to the scenario file.
    if (!s.mesh_file.empty() && std::filesystem::path(s.mesh_file).is_relative())
        s.mesh_file = (std::filesystem::path(path).parent_path() / s.mesh_file).lexically_normal().string();
    return s;
}

void validate(const Scenario& s) {
    s.material.validate();
    s.crack.validate();
    s.loading.validate();
    s.solver.validate();
    if (!(s.refine.threshold > 0.0 && s.refine.threshold <= 1.0)) throw ConfigError("refine.threshold must lie in (0, 1]");
    if (!(s.refine.coarsen_threshold >= 0.0 && s.refine.coarsen_threshold < s.refine.threshold))
        throw ConfigError("refine.coarsen_threshold must lie in [0, refine.threshold)");
    if (!(s.refine.energy_fraction >= 0.0)) throw ConfigError("refine.energy_fraction must be non-negative");
    if (s.max_level_explicit && s.refine.max_level < 0) throw ConfigError("refine.max_level must be non-negative");
    if (s.refine_h_f < 0.0) throw ConfigError("refine.h_f must be non-negative");
    if (s.snapshot_every < 0) throw ConfigError("output.snapshot_every must be non-negative");
    if (!(s.fracture_ratio >= 0.0 && s.fracture_ratio < 1.0)) throw ConfigError("stop.fracture_ratio must lie in [0, 1)");
    if (!(s.force_scale > 0.0)) throw ConfigError("report.force_scale must be positive");
    if (!(s.displacement_scale > 0.0)) throw ConfigError("report.displacement_scale must be positive");
    for (const auto& [name, v] : s.geometry) {
        if (!(v > 0.0)) throw ConfigError("geometry." + name + " must be positive");
    }
}

std::string format_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "schema = " << kScenarioSchema << '\n';
    if (!s.preset.empty()) out << "preset = " << s.preset << '\n';
    else out << "mesh_file = " << s.mesh_file << '\n';
    for (const auto& [name, v] : s.geometry) out << "geometry." << name << " = " << num(v) << '\n';
    out << "material.variant = " << (s.material.variant == MaterialVariant::nu_form ? "nu_form" : "lambda_form") << '\n';
    out << "material.mu = " << num(s.material.mu) << '\n';
    out << "material.nu = " << num(s.material.nu) << '\n';
    out << "material.lambda = " << num(s.material.lambda) << '\n';
    out << "material.k = " << num(s.material.k) << '\n';
    out << "crack.model = " << (s.crack.variant == CrackVariant::AT1 ? "AT1" : "AT2") << '\n';
    out << "crack.l0 = " << num(s.crack.l0) << '\n';
    out << "crack.gc = " << num(s.crack.gc) << '\n';
    out << "crack.gc_interface = " << num(s.crack.gc_interface) << '\n';
    out << "crack.eta = " << num(s.crack.eta) << '\n';
    out << "loading.target = " << num(s.loading.target) << '\n';
    out << "loading.initial_increment = " << num(s.loading.increment) << '\n';
    out << "loading.min_increment = " << num(s.loading.min_increment) << '\n';
    out << "loading.max_increment = " << num(s.loading.max_increment) << '\n';
    out << "loading.rate = " << num(s.loading.rate) << '\n';
    out << "refine.enabled = " << (s.refine.enabled ? "true" : "false") << '\n';
    out << "refine.threshold = " << num(s.refine.threshold) << '\n';
    if (s.max_level_explicit) out << "refine.max_level = " << s.refine.max_level << '\n';
    out << "refine.h_f = " << num(s.refine_h_f) << '\n';
    out << "refine.coarsen = " << (s.refine.coarsen ? "true" : "false") << '\n';
    out << "refine.coarsen_threshold = " << num(s.refine.coarsen_threshold) << '\n';
    out << "refine.smooth = " << (s.refine.smooth ? "true" : "false") << '\n';
    out << "refine.energy_fraction = " << num(s.refine.energy_fraction) << '\n';
    out << "solver.tol = " << num(s.solver.tol) << '\n';
    out << "solver.newton_tol = " << num(s.solver.newton_tol) << '\n';
    out << "solver.max_staggered = " << s.solver.max_staggered << '\n';
    out << "solver.max_newton = " << s.solver.max_newton << '\n';
    out << "solver.anderson_depth = " << s.solver.anderson_depth << '\n';
    out << "solver.dphi_max = " << num(s.solver.dphi_max) << '\n';
    out << "solver.growth = " << num(s.solver.growth) << '\n';
    out << "solver.shrink = " << num(s.solver.shrink) << '\n';
    out << "solver.linear_tol = " << num(s.solver.linear_tol) << '\n';
    out << "solver.resolve_after_refine = " << (s.solver.resolve_after_refine ? "true" : "false") << '\n';
    out << "output.dir = " << s.output_dir << '\n';
    out << "output.snapshot_every = " << s.snapshot_every << '\n';
    out << "stop.fracture_ratio = " << num(s.fracture_ratio) << '\n';
    if (!s.report_group.empty()) out << "report.group = " << s.report_group << '\n';
    out << "report.component = " << (s.report_component == 0 ? "x" : "y") << '\n';
    out << "report.force_scale = " << num(s.force_scale) << '\n';
    out << "report.displacement_scale = " << num(s.displacement_scale) << '\n';
    for (const auto& d : s.dirichlet) {
        out << "dirichlet." << d.label << " = " << d.bc.group << ' ' << (d.bc.component == 0 ? 'x' : 'y') << ' '
            << num(d.bc.scale) << '\n';
    }
    for (const auto& t : s.tractions) {
        out << "traction." << t.label << " = " << t.load.group << ' ' << num(t.load.traction.x()) << ' '
            << num(t.load.traction.y()) << '\n';
    }
    return out.str();
}

std::string scenario_schema() {
    std::ostringstream out;
    out << "# " << kScenarioSchema << ": one 'key = value' per line, '#' starts a comment\n";
    for (const auto& k : kKeys) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-28s %-18s %s\n", k.key, k.type, k.help);
        out << buf;
    }
    out << "# geometry keys per preset:\n";
    for (const auto& [preset, keys] : geometry_keys()) {
        out << "#   " << (preset.empty() ? "mesh_file" : preset) << ":";
        for (const auto& k : keys) out << ' ' << k;
        out << '\n';
    }
    return out.str();
}

int levels_for(double h0, double h_f) {
    if (!(h_f > 0.0) || h_f >= h0) return 0;
    return static_cast<int>(std::ceil(2.0 * std::log2(h0 / h_f) - 1e-9));
}

double achieved_size(double h0, int levels) { return h0 * std::pow(2.0, -0.5 * levels); }

double initial_element_size(const Scenario& s, const TriMesh& mesh) {
    if (auto it = s.geometry.find("h0"); it != s.geometry.end()) return it->second;
    double sum = 0.0;
    for (const auto& el : mesh.elements()) {
        double longest = 0.0;
        for (int i = 0; i < 3; ++i) {
            longest = std::max(longest, (mesh.nodes()[el.nodes[i]].X - mesh.nodes()[el.nodes[(i + 1) % 3]].X).norm());
        }
        sum += longest;
    }
    return mesh.num_elements() ? sum / mesh.num_elements() : 0.0;
}

TriMesh build_mesh(const Scenario& s) {
    if (!s.mesh_file.empty()) return read_mesh_file(s.mesh_file);
    auto g = [&](const char* name) { return geometry_value(s, name); };
    if (s.preset == "unit_square") return unit_square_mesh();
    if (s.preset == "double_edge_notch") return double_edge_notch_mesh({g("width"), g("height"), g("notch"), g("h0")});
    if (s.preset == "central_crack_slab")
        return central_crack_slab_mesh({g("half_width"), g("half_height"), g("half_crack"), g("h0")});
    if (s.preset == "holed_panel") {
        HoledPanelGeometry hp;
        hp.length = g("length");
        hp.height = g("height");
        hp.h0 = g("h0");
        hp.holes = {{g("hole1_x"), g("hole1_y"), g("hole1_r")}, {g("hole2_x"), g("hole2_y"), g("hole2_r")}};
        return holed_panel_mesh(hp);
    }
    if (s.preset == "interface_strip")
        return interface_strip_mesh({g("width"), g("half_height"), g("notch"), g("band_width"), g("h0")});
    throw ConfigError("unknown preset '" + s.preset + "'");
}

Simulation build_simulation(const Scenario& s) {
    validate(s);
    Simulation sim;
    sim.mesh = build_mesh(s);
    sim.problem.material = s.material;
    sim.problem.crack = s.crack;
    for (const auto& d : s.dirichlet) sim.problem.bcs.dirichlet.push_back(d.bc);
    for (const auto& t : s.tractions) sim.problem.bcs.tractions.push_back(t.load);
    sim.problem.reaction_group = s.report_group;
    sim.problem.reaction_component = s.report_component;
    if (!s.report_group.empty() && !sim.mesh.has_group(s.report_group))
        throw ConfigError("report.group names unknown boundary group '" + s.report_group + "'");
    sim.solver = s.solver;
    sim.schedule = s.loading;
    sim.refinement = s.refine;
    if (!s.max_level_explicit) {
        sim.refinement.max_level = s.refine_h_f > 0.0 ? levels_for(initial_element_size(s, sim.mesh), s.refine_h_f) : 0;
    }
    if (sim.refinement.max_level == 0) sim.refinement.enabled = false;
    sim.fracture_ratio = s.fracture_ratio;
    return sim;
}

}  // namespace esfem
