#include "esfem/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace esfem {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw MeshError("mesh line " + std::to_string(line) + ": " + what);
}

}  // namespace

void write_mesh(std::ostream& out, const TriMesh& mesh) {
    const auto& names = mesh.group_names();
    for (std::size_t i = 0; i < names.size(); ++i) out << "# group " << i << ' ' << names[i] << '\n';
    for (const auto& r : mesh.regions()) {
        out << "# region " << fmt(r.xmin) << ' ' << fmt(r.xmax) << ' ' << fmt(r.ymin) << ' ' << fmt(r.ymax) << ' '
            << r.tag << '\n';
    }
    out << "nodes " << mesh.num_nodes() << " elements " << mesh.num_elements() << '\n';
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const auto& n = mesh.nodes()[i];
        out << i << ' ' << fmt(n.X.x()) << ' ' << fmt(n.X.y()) << ' ' << n.boundary_tag << ' ' << n.region_tag << '\n';
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        out << e << ' ' << el.nodes[0] << ' ' << el.nodes[1] << ' ' << el.nodes[2] << ' ' << el.level << ' '
            << el.region_tag << '\n';
    }
}

void write_mesh_file(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file '" + path + "'");
    write_mesh(out, mesh);
    if (!out) throw IoError("error while writing mesh file '" + path + "'");
}

TriMesh read_mesh(std::istream& in) {
    MeshData data;
    std::map<int, std::string> groups;
    std::string line;
    int lineno = 0;
    long n_nodes = -1, n_elements = -1;
    long read_nodes = 0, read_elements = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        std::istringstream ls(line.substr(first));
        if (line[first] == '#') {
            std::string hash, kind;
            ls >> hash >> kind;
            if (kind == "group") {
                int bit = -1;
                std::string name;
                if (!(ls >> bit >> name) || bit < 0 || bit >= 32) fail(lineno, "malformed group declaration");
                groups[bit] = name;
            } else if (kind == "region") {
                RegionBox r;
                if (!(ls >> r.xmin >> r.xmax >> r.ymin >> r.ymax >> r.tag)) fail(lineno, "malformed region declaration");
                data.regions.push_back(r);
            }
            continue;
        }
        if (n_nodes < 0) {
            std::string kn, ke;
            if (!(ls >> kn >> n_nodes >> ke >> n_elements) || kn != "nodes" || ke != "elements" || n_nodes < 0 ||
                n_elements < 0) {
                fail(lineno, "expected header 'nodes N elements M'");
            }
            data.nodes.reserve(n_nodes);
            data.elements.reserve(n_elements);
            continue;
        }
        if (read_nodes < n_nodes) {
            long id;
            Node n;
            double x, y;
            long long tag;
            if (!(ls >> id >> x >> y >> tag >> n.region_tag)) fail(lineno, "expected 'id x y boundary_tag region_tag'");
            if (id != read_nodes) fail(lineno, "node ids must be consecutive from 0");
            if (tag < 0 || tag > 0xffffffffLL) fail(lineno, "boundary_tag out of range");
            n.X = Vec2(x, y);
            n.boundary_tag = static_cast<std::uint32_t>(tag);
            data.nodes.push_back(n);
            ++read_nodes;
            continue;
        }
        if (read_elements < n_elements) {
            long id;
            Element el;
            if (!(ls >> id >> el.nodes[0] >> el.nodes[1] >> el.nodes[2] >> el.level >> el.region_tag))
                fail(lineno, "expected 'id n1 n2 n3 level region_tag'");
            if (id != read_elements) fail(lineno, "element ids must be consecutive from 0");
            data.elements.push_back(el);
            ++read_elements;
            continue;
        }
        fail(lineno, "unexpected content after the last element");
    }
    if (n_nodes < 0) throw MeshError("mesh file has no header");
    if (read_nodes != n_nodes || read_elements != n_elements) throw MeshError("mesh file is truncated");
    if (!groups.empty()) {
        data.group_names.resize(groups.rbegin()->first + 1);
        for (std::size_t i = 0; i < data.group_names.size(); ++i) data.group_names[i] = "group" + std::to_string(i);
        for (const auto& [bit, name] : groups) data.group_names[bit] = name;
    }
    return TriMesh(std::move(data));
}

TriMesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file '" + path + "'");
    return read_mesh(in);
}

std::string describe_mesh(const TriMesh& mesh) {
    std::ostringstream out;
    int boundary = 0;
    for (const auto& e : mesh.edges()) boundary += e.is_boundary() ? 1 : 0;
    std::map<int, int> levels;
    for (const auto& el : mesh.elements()) ++levels[el.level];
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const auto& n : mesh.nodes()) {
        lo = lo.cwiseMin(n.X);
        hi = hi.cwiseMax(n.X);
    }
    out << "nodes " << mesh.num_nodes() << '\n';
    out << "elements " << mesh.num_elements() << '\n';
    out << "edges " << mesh.num_edges() << " (interior " << mesh.num_edges() - boundary << ", boundary " << boundary
        << ")\n";
    out << "bounding_box " << lo.x() << ' ' << lo.y() << ' ' << hi.x() << ' ' << hi.y() << '\n';
    out << "area " << fmt(mesh.total_area()) << '\n';
    out << "min_angle_deg " << min_angle(mesh) << '\n';
    out << "levels";
    for (const auto& [lvl, count] : levels) out << ' ' << lvl << ':' << count;
    out << '\n';
    for (const auto& name : mesh.group_names()) out << "group " << name << ' ' << mesh.group_nodes(name).size() << " nodes\n";
    const auto problems = validate(mesh, std::max(0, mesh.max_level()));
    out << "valid " << (problems.empty() ? "yes" : "no: " + problems) << '\n';
    return out.str();
}

}  // namespace esfem
