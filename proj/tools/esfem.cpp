#include "esfem/mesh_io.hpp"
#include "esfem/run.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { ok = 0, other = 1, config = 2, io = 3, numerical = 4 };

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "esfem: " << kind << " error: " << e.what() << '\n';
    return code;
}

std::pair<std::string, std::string> split_setting(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw esfem::ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(' '));
        s.erase(s.find_last_not_of(' ') + 1);
        return s;
    };
    return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-strain phase-field fracture with edge-based smoothed FEM and adaptive refinement"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run a scenario file");
    std::string scenario_file;
    bool deterministic = false, quiet = false;
    std::string out_dir;
    int snapshot_every = -1;
    run_cmd->add_option("scenario", scenario_file, "scenario file")->required();
    run_cmd->add_flag("--deterministic", deterministic, "omit wall-clock values from outputs");
    run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    run_cmd->add_option("--snapshot-every", snapshot_every, "VTK snapshot cadence in accepted steps")
        ->check(CLI::NonNegativeNumber);
    run_cmd->add_flag("-q,--quiet", quiet, "no per-step progress");

    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark preset and compare with stored expectations");
    std::string bench_name, tier = "desk", bench_out = "bench_out";
    std::vector<std::string> settings;
    bench_cmd->add_option("preset", bench_name, "preset or expectation set (e.g. double_edge_notch_sweep)")->required();
    bench_cmd->add_option("--tier", tier, "resolution tier")->check(CLI::IsMember({"desk", "full"}));
    bench_cmd->add_option("--set", settings, "scenario override key=value (repeatable)");
    bench_cmd->add_option("--out", bench_out, "bench output root");
    bench_cmd->add_flag("-q,--quiet", quiet, "no per-step progress");

    auto* info_cmd = app.add_subcommand("mesh-info", "summarize a mesh file");
    std::string mesh_file;
    info_cmd->add_option("mesh", mesh_file, "mesh file")->required();

    auto* schema_cmd = app.add_subcommand("schema", "print the scenario keys");
    auto* preset_cmd = app.add_subcommand("preset", "print the resolved scenario of a preset");
    std::string preset_name;
    preset_cmd->add_option("name", preset_name, "preset name")->required();

    auto* export_cmd = app.add_subcommand("export-mesh", "write the initial mesh of a scenario");
    std::string export_scn, export_path;
    export_cmd->add_option("scenario", export_scn, "scenario file")->required();
    export_cmd->add_option("output", export_path, "mesh file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            esfem::RunFlags flags;
            flags.deterministic = deterministic;
            if (!out_dir.empty()) flags.out = out_dir;
            if (snapshot_every >= 0) flags.snapshot_every = snapshot_every;
            if (!quiet) flags.progress = &std::cout;
            const auto outputs = esfem::run(esfem::load_scenario_file(scenario_file), flags);
            std::cout << "csv " << outputs.csv << "\nsummary " << outputs.summary << '\n';
            if (outputs.record.aborted) {
                std::cerr << "esfem: numerical error: " << outputs.record.message << '\n';
                return numerical;
            }
        } else if (*bench_cmd) {
            esfem::BenchRequest req;
            req.name = bench_name;
            req.tier = tier;
            req.out_dir = bench_out;
            for (const auto& kv : settings) req.overrides.push_back(split_setting(kv));
            if (!quiet) req.progress = &std::cout;
            const auto report = esfem::bench(req);
            std::ifstream in(report.report_path);
            std::cout << in.rdbuf();
            bool aborted = false;
            for (const auto& r : report.runs) aborted = aborted || r.record.aborted;
            if (aborted) return numerical;
            return report.all_pass() ? ok : other;
        } else if (*info_cmd) {
            std::cout << esfem::describe_mesh(esfem::read_mesh_file(mesh_file));
        } else if (*schema_cmd) {
            std::cout << esfem::scenario_schema();
        } else if (*preset_cmd) {
            std::cout << esfem::format_scenario(esfem::preset_scenario(preset_name));
        } else if (*export_cmd) {
            esfem::write_mesh_file(export_path, esfem::build_mesh(esfem::load_scenario_file(export_scn)));
        }
    } catch (const esfem::ConfigError& e) {
        return report("config", e, config);
    } catch (const esfem::IoError& e) {
        return report("io", e, io);
    } catch (const esfem::MeshError& e) {
        return report("mesh", e, config);
    } catch (const esfem::NumericalError& e) {
        return report("numerical", e, numerical);
    } catch (const std::exception& e) {
        return report("internal", e, other);
    }
    return ok;
}
