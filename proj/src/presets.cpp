#include "esfem/presets.hpp"

#include <algorithm>
#include <cmath>

namespace esfem {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::vector<std::string> names_of(const std::vector<GroupRule>& groups) {
    std::vector<std::string> names;
    for (const auto& g : groups) names.push_back(g.name);
    return names;
}

std::uint32_t tag_for(const Vec2& x, const std::vector<GroupRule>& groups) {
    std::uint32_t tag = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].contains(x)) tag |= 1u << i;
    }
    return tag;
}

int region_for(const Vec2& x, const std::vector<RegionBox>& regions) {
    for (const auto& r : regions) {
        if (r.contains(x)) return r.tag;
    }
    return 0;
}

}  // namespace

std::vector<double> grid_lines(double lo, double hi, double h, std::vector<double> forced) {
    require(hi > lo && h > 0.0, "grid extent and spacing must be positive");
    const double tol = 1e-9 * (hi - lo);
    forced.push_back(lo);
    forced.push_back(hi);
    std::sort(forced.begin(), forced.end());
    std::vector<double> anchors;
    for (double f : forced) {
        require(f >= lo - tol && f <= hi + tol, "forced grid line outside the domain");
        if (anchors.empty() || f - anchors.back() > tol) anchors.push_back(std::clamp(f, lo, hi));
    }
    std::vector<double> lines{anchors.front()};
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        const double a = anchors[i - 1];
        const double b = anchors[i];
        const int n = std::max(1, static_cast<int>(std::lround((b - a) / h)));
        for (int k = 1; k < n; ++k) lines.push_back(a + (b - a) * k / n);
        lines.push_back(b);
    }
    return lines;
}

TriMesh structured_rectangle(const std::vector<double>& xs, const std::vector<double>& ys,
                             const std::vector<GroupRule>& groups, const std::vector<RegionBox>& regions) {
    require(xs.size() >= 2 && ys.size() >= 2, "a structured grid needs at least two lines per direction");
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());
    MeshData d;
    d.group_names = names_of(groups);
    d.regions = regions;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Node n;
            n.X = Vec2(xs[i], ys[j]);
            const bool boundary = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
            n.boundary_tag = boundary ? tag_for(n.X, groups) : 0u;
            n.region_tag = region_for(n.X, regions);
            d.nodes.push_back(n);
        }
    }
    auto id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), e = id(i, j + 1);
            Element t1, t2;
            t1.nodes = {a, b, c};
            t2.nodes = {a, c, e};
            for (Element* t : {&t1, &t2}) {
                const Vec2 centroid = (d.nodes[t->nodes[0]].X + d.nodes[t->nodes[1]].X + d.nodes[t->nodes[2]].X) / 3.0;
                t->region_tag = region_for(centroid, regions);
                d.elements.push_back(*t);
            }
        }
    }
    return TriMesh(std::move(d));
}

TriMesh unit_square_mesh() {
    const double tol = 1e-12;
    std::vector<GroupRule> groups{
        {"left", [=](const Vec2& x) { return near(x.x(), 0.0, tol); }},
        {"right", [=](const Vec2& x) { return near(x.x(), 1.0, tol); }},
        {"bottom", [=](const Vec2& x) { return near(x.y(), 0.0, tol); }},
        {"top", [=](const Vec2& x) { return near(x.y(), 1.0, tol); }},
    };
    return structured_rectangle({0.0, 1.0}, {0.0, 1.0}, groups);
}

TriMesh double_edge_notch_mesh(const DoubleEdgeNotchGeometry& g) {
    require(g.width > 0.0 && g.height > 0.0, "geometry.width and geometry.height must be positive");
    require(g.notch > 0.0 && g.notch < g.width, "geometry.notch must lie in (0, width)");
    require(g.h0 > 0.0 && g.h0 < std::min(g.width, g.height), "geometry.h0 must be positive and below the specimen size");
    const double tip = g.width - g.notch;
    const double tol = 1e-9 * g.width;
    std::vector<GroupRule> groups{
        {"left", [=](const Vec2& x) { return near(x.x(), 0.0, tol); }},
        {"right", [=](const Vec2& x) { return near(x.x(), g.width, tol); }},
        {"top", [=](const Vec2& x) { return near(x.y(), g.height, tol); }},
        {"ligament", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() <= tip + tol; }},
        {"notch", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() >= tip - tol; }},
    };
    return structured_rectangle(grid_lines(0.0, g.width, g.h0, {tip}), grid_lines(0.0, g.height, g.h0), groups);
}

TriMesh central_crack_slab_mesh(const CentralCrackSlabGeometry& g) {
    require(g.half_width > 0.0 && g.half_height > 0.0, "geometry.half_width and geometry.half_height must be positive");
    require(g.half_crack > 0.0 && g.half_crack < g.half_width, "geometry.half_crack must lie in (0, half_width)");
    require(g.h0 > 0.0 && g.h0 < std::min(g.half_width, g.half_height), "geometry.h0 must be positive and below the slab size");
    const double tol = 1e-9 * g.half_width;
    const double c = g.half_crack;
    std::vector<GroupRule> groups{
        {"left", [=](const Vec2& x) { return near(x.x(), 0.0, tol); }},
        {"right", [=](const Vec2& x) { return near(x.x(), g.half_width, tol); }},
        {"top", [=](const Vec2& x) { return near(x.y(), g.half_height, tol); }},
        {"crack", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() <= c + tol; }},
        {"ligament", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() >= c - tol; }},
    };
    return structured_rectangle(grid_lines(0.0, g.half_width, g.h0, {c}), grid_lines(0.0, g.half_height, g.h0), groups);
}

TriMesh interface_strip_mesh(const InterfaceStripGeometry& g) {
    require(g.width > 0.0 && g.half_height > 0.0, "geometry.width and geometry.half_height must be positive");
    require(g.notch > 0.0 && g.notch < g.width, "geometry.notch must lie in (0, width)");
    require(g.band_width > 0.0 && g.notch - 0.5 * g.band_width > 0.0 && g.notch + 0.5 * g.band_width < g.width,
            "geometry.band_width must fit inside the strip");
    require(g.h0 > 0.0 && g.h0 < std::min(g.width, g.half_height), "geometry.h0 must be positive and below the strip size");
    const double tol = 1e-9 * g.width;
    const double lo = g.notch - 0.5 * g.band_width;
    const double hi = g.notch + 0.5 * g.band_width;
    std::vector<GroupRule> groups{
        {"left", [=](const Vec2& x) { return near(x.x(), 0.0, tol); }},
        {"right", [=](const Vec2& x) { return near(x.x(), g.width, tol); }},
        {"top", [=](const Vec2& x) { return near(x.y(), g.half_height, tol); }},
        {"notch", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() <= g.notch + tol; }},
        {"ligament", [=](const Vec2& x) { return near(x.y(), 0.0, tol) && x.x() >= g.notch - tol; }},
    };
    std::vector<RegionBox> regions{{lo, hi, 0.0, g.half_height, 1}};
    return structured_rectangle(grid_lines(0.0, g.width, g.h0, {lo, g.notch, hi}), grid_lines(0.0, g.half_height, g.h0),
                                groups, regions);
}

TriMesh holed_panel_mesh(const HoledPanelGeometry& g) {
    require(g.length > 0.0 && g.height > 0.0, "geometry.length and geometry.height must be positive");
    require(g.h0 > 0.0 && g.h0 < std::min(g.length, g.height) / 4, "geometry.h0 is too large for the panel");
    for (const auto& h : g.holes) {
        require(h.r > 2.0 * g.h0, "hole radius must exceed two element sizes");
        require(h.x - h.r > g.h0 && h.x + h.r < g.length - g.h0 && h.y - h.r > g.h0 && h.y + h.r < g.height - g.h0,
                "holes must lie inside the panel with a margin of one element");
    }
    const double tol = 1e-9 * g.length;
    const auto xs = grid_lines(0.0, g.length, g.h0);
    const auto ys = grid_lines(0.0, g.height, g.h0);
    const int nx = static_cast<int>(xs.size());

    auto inside = [&](const Vec2& x) {
        for (const auto& h : g.holes) {
            if ((x - Vec2(h.x, h.y)).norm() < h.r - tol) return true;
        }
        return false;
    };

    std::vector<Vec2> pts;
    for (double y : ys) {
        for (double x : xs) pts.emplace_back(x, y);
    }
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j + 1 < static_cast<int>(ys.size()); ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i, b = a + 1, c = a + nx + 1, e = a + nx;
            for (std::array<int, 3> t : {std::array<int, 3>{a, b, c}, std::array<int, 3>{a, c, e}}) {
                if (!inside(pts[t[0]]) && !inside(pts[t[1]]) && !inside(pts[t[2]])) tris.push_back(t);
            }
        }
    }
    std::vector<int> remap(pts.size(), -1);
    MeshData d;
    for (auto& t : tris) {
        for (int& v : t) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(d.nodes.size());
                Node n;
                n.X = pts[v];
                d.nodes.push_back(n);
            }
            v = remap[v];
        }
        Element el;
        el.nodes = t;
        d.elements.push_back(el);
    }

    // Pull the staircase boundary around each hole onto the circle, one node at a
    // time, keeping only moves that leave the incident triangles well shaped.
    const auto edges = build_edge_topology(d.elements, static_cast<int>(d.nodes.size()));
    std::vector<std::vector<int>> star(d.nodes.size());
    for (int e = 0; e < static_cast<int>(d.elements.size()); ++e) {
        for (int v : d.elements[e].nodes) star[v].push_back(e);
    }
    std::vector<int> hole_of(d.nodes.size(), -1);
    for (const auto& e : edges) {
        if (!e.is_boundary()) continue;
        for (int v : e.nodes) {
            for (std::size_t h = 0; h < g.holes.size(); ++h) {
                const auto& hole = g.holes[h];
                if ((d.nodes[v].X - Vec2(hole.x, hole.y)).norm() < hole.r + 1.5 * g.h0) hole_of[v] = static_cast<int>(h);
            }
        }
    }
    auto star_ok = [&](int v) {
        for (int e : star[v]) {
            const auto& n = d.elements[e].nodes;
            const Vec2& a = d.nodes[n[0]].X;
            const Vec2& b = d.nodes[n[1]].X;
            const Vec2& c = d.nodes[n[2]].X;
            const double area = signed_area(a, b, c);
            const double longest = std::max({(a - b).squaredNorm(), (b - c).squaredNorm(), (c - a).squaredNorm()});
            // 2A / l_max^2 bounds the smallest angle from below.
            if (!(area > 0.0) || 2.0 * area / longest < 0.2) return false;
        }
        return true;
    };
    for (int v = 0; v < static_cast<int>(d.nodes.size()); ++v) {
        if (hole_of[v] < 0) continue;
        const auto& hole = g.holes[hole_of[v]];
        const Vec2 centre(hole.x, hole.y);
        const Vec2 old = d.nodes[v].X;
        d.nodes[v].X = centre + hole.r * (old - centre).normalized();
        if (!star_ok(v)) d.nodes[v].X = old;
    }

    std::vector<GroupRule> groups{
        {"left", [=](const Vec2& x) { return near(x.x(), 0.0, tol); }},
        {"right", [=](const Vec2& x) { return near(x.x(), g.length, tol); }},
        {"bottom", [=](const Vec2& x) { return near(x.y(), 0.0, tol); }},
        {"top", [=](const Vec2& x) { return near(x.y(), g.height, tol); }},
        {"holes", [](const Vec2&) { return false; }},
    };
    d.group_names = names_of(groups);
    std::vector<char> on_boundary(d.nodes.size(), 0);
    for (const auto& e : edges) {
        if (e.is_boundary()) on_boundary[e.nodes[0]] = on_boundary[e.nodes[1]] = 1;
    }
    for (int v = 0; v < static_cast<int>(d.nodes.size()); ++v) {
        if (!on_boundary[v]) continue;
        d.nodes[v].boundary_tag = tag_for(d.nodes[v].X, groups);
        if (hole_of[v] >= 0) d.nodes[v].boundary_tag |= 1u << 4;
    }
    TriMesh mesh(std::move(d));
    return odt_smooth(mesh, std::vector<char>(mesh.num_nodes(), 0), 5);
}

}  // namespace esfem
