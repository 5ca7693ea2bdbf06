#include "esfem/run.hpp"

#include "esfem/vtk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace esfem {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

struct Metrics {
    double peak_force = 0, peak_displacement = 0, failure_displacement = 0;
    double interface_share = 0, drop_ratio = 0;
    bool fractured = false;
};

Metrics metrics_of(const Scenario& s, const RunRecord& rec) {
    Metrics m;
    const auto& st = rec.steps;
    for (const auto& r : st) {
        const double f = r.reaction * s.force_scale;
        if (f > m.peak_force) {
            m.peak_force = f;
            m.peak_displacement = r.load * s.displacement_scale;
        }
    }
    for (std::size_t i = 1; i < st.size(); ++i) {
        if (st[i - 1].load * s.displacement_scale < m.peak_displacement || m.peak_force <= 0) continue;
        const double drop = (st[i - 1].reaction - st[i].reaction) * s.force_scale / m.peak_force;
        m.drop_ratio = std::max(m.drop_ratio, drop);
    }
    m.fractured = rec.fractured;
    if (!st.empty()) {
        m.failure_displacement = (rec.fractured ? rec.fracture_load : st.back().load) * s.displacement_scale;
        const auto& last = st.back();
        m.interface_share = last.surface_energy > 0 ? last.interface_surface_energy / last.surface_energy : 0.0;
    }
    return m;
}

}  // namespace

RunOutputs run(const Scenario& scenario, const RunFlags& flags) {
    Scenario s = scenario;
    if (flags.out) s.output_dir = *flags.out;
    if (flags.snapshot_every) s.snapshot_every = *flags.snapshot_every;
    validate(s);

    RunOutputs o;
    o.dir = s.output_dir;
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec) throw IoError("cannot create output directory '" + o.dir + "': " + ec.message());
    o.csv = (fs::path(o.dir) / "curve.csv").string();
    o.log = (fs::path(o.dir) / "run.log").string();
    o.summary = (fs::path(o.dir) / "summary.txt").string();
    o.scenario_copy = (fs::path(o.dir) / "scenario.scn").string();
    for (const auto& entry : fs::directory_iterator(o.dir)) {
        if (entry.path().extension() == ".vtk") fs::remove(entry.path());
    }

    {
        auto sc = open_out(o.scenario_copy);
        sc << format_scenario(s);
    }
    auto csv = open_out(o.csv);
    auto log = open_out(o.log);
    csv << "step,time_s,displacement_mm,force_N_per_mm,elements,strain_energy,surface_energy,dissipation\n";

    auto snapshot = [&](const std::string& stem, const TriMesh& mesh, const FieldState& st) {
        const auto base = (fs::path(o.dir) / stem).string();
        write_vtk(base + ".vtk", mesh, st.u, st.phi);
        write_vtk_deformed(base + "_deformed.vtk", mesh, st.u, st.phi);
        o.snapshots.push_back(base + ".vtk");
        o.snapshots.push_back(base + "_deformed.vtk");
    };

    auto write_summary = [&](const std::string& status, const std::string& message) {
        auto out = open_out(o.summary);
        const Metrics m = metrics_of(s, o.record);
        out << "status = " << status << '\n';
        if (!message.empty()) out << "message = " << message << '\n';
        out << "steps = " << o.record.steps.size() << '\n';
        out << "rejected_steps = " << o.record.rejected_steps << '\n';
        out << "adaptations = " << o.record.adaptations << '\n';
        out << "fractured = " << (m.fractured ? "true" : "false") << '\n';
        out << "peak_force_N_per_mm = " << fmt("%.10g", m.peak_force) << '\n';
        out << "peak_displacement_mm = " << fmt("%.10g", m.peak_displacement) << '\n';
        out << "failure_displacement_mm = " << fmt("%.10g", m.failure_displacement) << '\n';
        out << "interface_share = " << fmt("%.6g", m.interface_share) << '\n';
        if (!o.record.steps.empty()) {
            out << "final_elements = " << o.record.steps.back().elements << '\n';
            out << "final_nodes = " << o.record.steps.back().nodes << '\n';
        }
        out << "max_level = " << o.max_level << '\n';
        out << "achieved_h_f_mm = " << fmt("%.6g", o.achieved_h_f) << '\n';
        if (!flags.deterministic) out << "wall_seconds = " << fmt("%.3f", o.record.wall_seconds) << '\n';
    };

    try {
        Simulation sim = build_simulation(s);
        o.max_level = sim.refinement.enabled ? sim.refinement.max_level : 0;
        const double h0 = initial_element_size(s, sim.mesh);
        o.achieved_h_f = achieved_size(h0, o.max_level);
        log << "mesh nodes " << sim.mesh.num_nodes() << " elements " << sim.mesh.num_elements() << " h0 " << h0
            << " max_level " << o.max_level << " achieved_h_f " << o.achieved_h_f << '\n';

        RunObserver obs;
        obs.on_step = [&](const StepRecord& r, const TriMesh& mesh, const FieldState& st, std::span<const double>) {
            csv << r.step << ',' << fmt("%.10g", r.time) << ',' << fmt("%.10g", r.load * s.displacement_scale) << ','
                << fmt("%.10g", r.reaction * s.force_scale) << ',' << r.elements << ','
                << fmt("%.10g", r.strain_energy) << ',' << fmt("%.10g", r.surface_energy) << ','
                << fmt("%.10g", r.dissipation) << '\n';
            csv.flush();
            std::ostringstream line;
            line << "step " << r.step << " load " << fmt("%.6g", r.load) << " force "
                 << fmt("%.6g", r.reaction * s.force_scale) << " elements " << r.elements << " level " << r.max_level
                 << " stag " << r.staggered_iterations << " as " << r.active_set_passes << " dphi "
                 << fmt("%.3g", r.max_dphi);
            if (!flags.deterministic) line << " ms " << fmt("%.1f", r.wall_ms);
            log << line.str() << '\n';
            log.flush();
            if (flags.progress) *flags.progress << line.str() << '\n' << std::flush;
            if (s.snapshot_every > 0 && r.step % s.snapshot_every == 0) snapshot(fmt("snap_%04.0f", r.step), mesh, st);
        };
        o.record = run_simulation(sim, obs);
        snapshot("final", o.record.final_mesh, o.record.final_state);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        write_summary("error", e.what());
        throw;
    }

    const Metrics m = metrics_of(s, o.record);
    o.peak_force = m.peak_force;
    o.peak_displacement = m.peak_displacement;
    o.failure_displacement = m.failure_displacement;
    o.interface_share = m.interface_share;
    if (o.record.aborted) log << "aborted: " << o.record.message << '\n';
    write_summary(o.record.aborted ? "aborted" : "ok", o.record.message);
    return o;
}

std::vector<CurvePoint> read_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<CurvePoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        CurvePoint p;
        if (!(ls >> p.step >> p.time >> p.displacement >> p.force >> p.elements >> p.strain_energy >> p.surface_energy >>
              p.dissipation))
            throw IoError(path + ": malformed row " + std::to_string(out.size() + 1));
        out.push_back(p);
    }
    return out;
}

ExpectationSet read_expectations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open expectation file '" + path + "'");
    ExpectationSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        auto bad = [&] { return ConfigError(path + ": malformed expectation", lineno); };
        if (kind == "preset") {
            if (!(ls >> set.preset)) throw bad();
        } else if (kind == "sweep") {
            if (!(ls >> set.sweep_key)) throw bad();
            for (double v; ls >> v;) set.sweep_values.push_back(v);
            if (set.sweep_values.empty()) throw bad();
        } else if (kind == "set") {
            std::string key, value;
            if (!(ls >> key >> value)) throw bad();
            set.settings.emplace_back(key, value);
        } else if (kind == "metric") {
            Expectation e;
            std::string kmin, kmax, ksrc;
            if (!(ls >> e.metric >> kmin >> e.lo >> kmax >> e.hi >> ksrc >> e.source) || kmin != "min" || kmax != "max" ||
                ksrc != "source")
                throw bad();
            set.checks.push_back(e);
        } else if (kind == "ordering") {
            Expectation e;
            std::string dir, ksrc;
            e.ordering = true;
            if (!(ls >> e.metric >> dir >> ksrc >> e.source) || dir != "decreasing" || ksrc != "source") throw bad();
            set.checks.push_back(e);
        } else {
            throw bad();
        }
    }
    if (set.preset.empty()) throw ConfigError(path + ": missing preset line");
    return set;
}

bool BenchReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const BenchCheck& c) { return c.pass; });
}

Scenario bench_scenario(const std::string& preset, const std::string& tier) {
    Scenario s = preset_scenario(preset);
    if (tier != "desk" && tier != "full") throw ConfigError("unknown tier '" + tier + "' (desk or full)");
    if (tier == "full") {
        if (preset == "double_edge_notch") s.refine_h_f = s.crack.l0 / 8.0;
        if (preset == "central_crack_slab") s.refine_h_f = s.crack.l0 / 10.0;
        if (preset == "holed_panel") s.refine_h_f = s.crack.l0 / 5.0;
        if (preset == "interface_strip") s.refine_h_f = s.crack.l0 / 5.0;
    }
    return s;
}

BenchReport bench(const BenchRequest& req) {
    const auto file = fs::path(req.expectations_dir) / (req.name + ".txt");
    ExpectationSet exp;
    if (fs::exists(file)) {
        exp = read_expectations(file.string());
    } else {
        const auto& names = preset_names();
        if (std::find(names.begin(), names.end(), req.name) == names.end())
            throw ConfigError("unknown preset '" + req.name + "'");
        exp.preset = req.name;
    }

    std::vector<std::optional<double>> values;
    if (exp.sweep_values.empty()) values.push_back(std::nullopt);
    for (double v : exp.sweep_values) values.push_back(v);

    BenchReport report;
    std::vector<Metrics> metrics;
    const fs::path base = fs::path(req.out_dir) / (req.name + "-" + req.tier);
    for (const auto& v : values) {
        Scenario s = bench_scenario(exp.preset, req.tier);
        std::string tag = "run";
        if (v) {
            apply_setting(s, "geometry." + exp.sweep_key, fmt("%.17g", *v));
            tag = exp.sweep_key + "_" + fmt("%g", *v);
        }
        for (const auto& [k, val] : exp.settings) apply_setting(s, k, val);
        for (const auto& [k, val] : req.overrides) apply_setting(s, k, val);
        s.output_dir = (base / tag).string();
        if (req.progress) *req.progress << "bench " << req.name << " " << tag << '\n' << std::flush;
        RunFlags flags;
        flags.progress = req.progress;
        report.runs.push_back(run(s, flags));
        metrics.push_back(metrics_of(s, report.runs.back().record));
    }

    auto metric_value = [](const Metrics& m, const std::string& name) -> double {
        if (name == "peak_force_N_per_mm") return m.peak_force;
        if (name == "peak_displacement_mm") return m.peak_displacement;
        if (name == "failure_displacement_mm") return m.failure_displacement;
        if (name == "interface_share") return m.interface_share;
        if (name == "post_peak_drop") return m.drop_ratio;
        if (name == "fractured") return m.fractured ? 1.0 : 0.0;
        throw ConfigError("unknown bench metric '" + name + "'");
    };

    for (const auto& e : exp.checks) {
        if (e.ordering) {
            BenchCheck c{e.metric + " decreasing", 0.0, "strict", true, e.source};
            std::ostringstream vals;
            for (std::size_t i = 0; i < metrics.size(); ++i) {
                const double x = metric_value(metrics[i], e.metric);
                vals << (i ? " " : "") << fmt("%.5g", x);
                if (i > 0 && !(x < metric_value(metrics[i - 1], e.metric))) c.pass = false;
            }
            c.window = "strict over [" + vals.str() + "]";
            report.checks.push_back(c);
            continue;
        }
        for (std::size_t i = 0; i < metrics.size(); ++i) {
            BenchCheck c;
            c.metric = e.metric;
            if (values[i]) c.metric += "@" + exp.sweep_key + "=" + fmt("%g", *values[i]);
            c.value = metric_value(metrics[i], e.metric);
            c.window = "[" + fmt("%g", e.lo) + ", " + fmt("%g", e.hi) + "]";
            c.pass = c.value >= e.lo && c.value <= e.hi;
            c.source = e.source;
            report.checks.push_back(c);
        }
    }

    fs::create_directories(base);
    report.report_path = (base / "comparison.txt").string();
    auto out = open_out(report.report_path);
    for (const auto& c : report.checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.metric << " = " << fmt("%.6g", c.value) << " window " << c.window
            << " source " << c.source << '\n';
    }
    return report;
}

}  // namespace esfem
