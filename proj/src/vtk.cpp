#include "esfem/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace esfem {

namespace {

void write_grid(const std::string& path, const TriMesh& mesh, std::span<const double> u, std::span<const double> phi,
                bool deformed, double crack_phi) {
    const int n = mesh.num_nodes();
    if (static_cast<int>(u.size()) != 2 * n || static_cast<int>(phi.size()) != n)
        throw Error("vtk: field sizes do not match the mesh");

    std::vector<int> kept;
    kept.reserve(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        if (deformed && phi[el.nodes[0]] > crack_phi && phi[el.nodes[1]] > crack_phi && phi[el.nodes[2]] > crack_phi)
            continue;
        kept.push_back(e);
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    char buf[128];
    out << "# vtk DataFile Version 3.0\n"
        << (deformed ? "esfem deformed" : "esfem reference") << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (int i = 0; i < n; ++i) {
        Vec2 x = mesh.nodes()[i].X;
        if (deformed) x += Vec2(u[2 * i], u[2 * i + 1]);
        std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", x.x(), x.y());
        out << buf;
    }
    out << "CELLS " << kept.size() << ' ' << 4 * kept.size() << '\n';
    for (int e : kept) {
        const auto& el = mesh.elements()[e];
        out << "3 " << el.nodes[0] << ' ' << el.nodes[1] << ' ' << el.nodes[2] << '\n';
    }
    out << "CELL_TYPES " << kept.size() << '\n';
    for (std::size_t i = 0; i < kept.size(); ++i) out << "5\n";
    out << "POINT_DATA " << n << "\nVECTORS displacement double\n";
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", u[2 * i], u[2 * i + 1]);
        out << buf;
    }
    out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", phi[i]);
        out << buf;
    }
    out << "CELL_DATA " << kept.size() << "\nSCALARS level int 1\nLOOKUP_TABLE default\n";
    for (int e : kept) out << mesh.elements()[e].level << '\n';
    if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace

void write_vtk(const std::string& path, const TriMesh& mesh, std::span<const double> u, std::span<const double> phi) {
    write_grid(path, mesh, u, phi, false, 0.0);
}

void write_vtk_deformed(const std::string& path, const TriMesh& mesh, std::span<const double> u,
                        std::span<const double> phi, double crack_phi) {
    write_grid(path, mesh, u, phi, true, crack_phi);
}

VtkData read_vtk(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    auto bad = [&](const std::string& what) { return IoError(path + ": " + what); };
    VtkData d;
    std::string tok;
    std::string section;
    while (in >> tok) {
        if (tok == "POINTS") {
            std::size_t n;
            in >> n >> tok;
            d.points.resize(n);
            double z;
            for (auto& p : d.points) in >> p.x() >> p.y() >> z;
        } else if (tok == "CELLS") {
            std::size_t n, total;
            in >> n >> total;
            d.cells.resize(n);
            for (auto& c : d.cells) {
                int k;
                in >> k >> c[0] >> c[1] >> c[2];
                if (k != 3) throw bad("only triangles are supported");
            }
        } else if (tok == "CELL_TYPES") {
            std::size_t n;
            in >> n;
            for (std::size_t i = 0; i < n; ++i) in >> tok;
        } else if (tok == "POINT_DATA" || tok == "CELL_DATA") {
            section = tok;
            in >> tok;
        } else if (tok == "VECTORS") {
            std::string name;
            in >> name >> tok;
            if (name != "displacement") throw bad("unexpected vector field " + name);
            d.displacement.resize(2 * d.points.size());
            double z;
            for (std::size_t i = 0; i < d.points.size(); ++i) in >> d.displacement[2 * i] >> d.displacement[2 * i + 1] >> z;
        } else if (tok == "SCALARS") {
            std::string name, type;
            int comps;
            in >> name >> type >> comps >> tok >> tok;
            if (section == "POINT_DATA" && name == "phi") {
                d.phi.resize(d.points.size());
                for (auto& v : d.phi) in >> v;
            } else if (section == "CELL_DATA" && name == "level") {
                d.level.resize(d.cells.size());
                for (auto& v : d.level) in >> v;
            } else {
                throw bad("unexpected scalar field " + name);
            }
        }
        if (in.fail()) throw bad("malformed content near " + tok);
    }
    if (d.points.empty()) throw bad("no POINTS section");
    return d;
}

}  // namespace esfem
