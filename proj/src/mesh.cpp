#include "esfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace esfem {

namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

std::vector<TransferSource> merge_sources(std::vector<TransferSource> s) {
    std::sort(s.begin(), s.end(), [](const auto& l, const auto& r) { return l.old_node < r.old_node; });
    std::vector<TransferSource> out;
    for (const auto& src : s) {
        if (!out.empty() && out.back().old_node == src.old_node)
            out.back().weight += src.weight;
        else
            out.push_back(src);
    }
    return out;
}

std::array<double, 3> triangle_angles(const Vec2& a, const Vec2& b, const Vec2& c) {
    auto angle = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const Vec2 u = q - p;
        const Vec2 v = r - p;
        const double cosine = u.dot(v) / (u.norm() * v.norm());
        return std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    };
    return {angle(a, b, c), angle(b, c, a), angle(c, a, b)};
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 bp = b - a;
    const Vec2 cp = c - a;
    const double d = 2.0 * (bp.x() * cp.y() - bp.y() * cp.x());
    const double b2 = bp.squaredNorm();
    const double c2 = cp.squaredNorm();
    return a + Vec2((cp.y() * b2 - bp.y() * c2) / d, (bp.x() * c2 - cp.x() * b2) / d);
}

// Mutable view of a mesh used while refining or coarsening.
class WorkingMesh {
public:
    explicit WorkingMesh(const TriMesh& mesh)
        : nodes(mesh.nodes()),
          forest(mesh.forest()),
          origins(mesh.node_origins()),
          regions(mesh.regions()),
          is_leaf(forest.size(), 0),
          node_leaves(nodes.size()) {
        sources.resize(nodes.size());
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) sources[i] = {{i, 1.0}};
        for (const auto& e : mesh.elements()) add_leaf(e.tree_id);
    }

    std::vector<Node> nodes;
    std::vector<TreeNode> forest;
    std::vector<std::array<int, 2>> origins;
    std::vector<RegionBox> regions;
    std::vector<char> is_leaf;
    std::vector<std::vector<int>> node_leaves;
    std::vector<std::vector<TransferSource>> sources;
    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_leaves;

    void add_leaf(int t) {
        is_leaf[t] = 1;
        const auto& n = forest[t].nodes;
        for (int i = 0; i < 3; ++i) {
            auto& slot = edge_leaves.try_emplace(edge_key(n[i], n[(i + 1) % 3]), std::array<int, 2>{-1, -1})
                             .first->second;
            if (slot[0] < 0)
                slot[0] = t;
            else if (slot[1] < 0)
                slot[1] = t;
            else
                throw MeshError("bisection produced an edge with more than two supports");
            node_leaves[n[i]].push_back(t);
        }
    }

    void remove_leaf(int t) {
        is_leaf[t] = 0;
        const auto& n = forest[t].nodes;
        for (int i = 0; i < 3; ++i) {
            const auto key = edge_key(n[i], n[(i + 1) % 3]);
            auto it = edge_leaves.find(key);
            auto& slot = it->second;
            if (slot[0] == t) {
                slot[0] = slot[1];
                slot[1] = -1;
            } else if (slot[1] == t) {
                slot[1] = -1;
            }
            if (slot[0] < 0) edge_leaves.erase(it);
            auto& nl = node_leaves[n[i]];
            nl.erase(std::remove(nl.begin(), nl.end(), t), nl.end());
        }
    }

    int neighbor(int t, int a, int b) const {
        auto it = edge_leaves.find(edge_key(a, b));
        if (it == edge_leaves.end()) return -1;
        return it->second[0] == t ? it->second[1] : it->second[0];
    }

    // Local index of the longest edge; ties broken by the edge key so both
    // supports of an edge agree.
    int longest_local_edge(int t) const {
        const auto& n = forest[t].nodes;
        int best = 0;
        double best_len = -1.0;
        std::uint64_t best_key = 0;
        for (int i = 0; i < 3; ++i) {
            const int a = n[i];
            const int b = n[(i + 1) % 3];
            const double len = (nodes[a].X - nodes[b].X).squaredNorm();
            const auto key = edge_key(a, b);
            if (len > best_len || (len == best_len && key > best_key)) {
                best = i;
                best_len = len;
                best_key = key;
            }
        }
        return best;
    }

    int make_midpoint(int a, int b, bool boundary) {
        Node n;
        n.X = 0.5 * (nodes[a].X + nodes[b].X);
        n.boundary_tag = boundary ? (nodes[a].boundary_tag & nodes[b].boundary_tag) : 0u;
        if (!regions.empty()) {
            n.region_tag = 0;
            for (const auto& box : regions) {
                if (box.contains(n.X)) {
                    n.region_tag = box.tag;
                    break;
                }
            }
        } else {
            n.region_tag = nodes[a].region_tag == nodes[b].region_tag ? nodes[a].region_tag : 0;
        }
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(n);
        origins.push_back({std::min(a, b), std::max(a, b)});
        std::vector<TransferSource> s;
        for (auto src : sources[a]) s.push_back({src.old_node, 0.5 * src.weight});
        for (auto src : sources[b]) s.push_back({src.old_node, 0.5 * src.weight});
        sources.push_back(merge_sources(std::move(s)));
        node_leaves.emplace_back();
        return id;
    }

    void bisect(int t, int local, int m) {
        const auto n = forest[t].nodes;
        const int a = n[local];
        const int b = n[(local + 1) % 3];
        const int c = n[(local + 2) % 3];
        remove_leaf(t);
        const int c0 = static_cast<int>(forest.size());
        const int c1 = c0 + 1;
        TreeNode child;
        child.level = forest[t].level + 1;
        child.parent = t;
        child.region_tag = forest[t].region_tag;
        child.nodes = {a, m, c};
        forest.push_back(child);
        child.nodes = {m, b, c};
        forest.push_back(child);
        is_leaf.resize(forest.size(), 0);
        forest[t].children = {c0, c1};
        forest[t].midpoint = m;
        add_leaf(c0);
        add_leaf(c1);
    }

    // Longest-edge propagation path bisection of leaf t. Returns false when the
    // path would have to bisect an element already at max_level.
    bool refine_leaf(int t, int max_level) {
        std::vector<int> stack{t};
        while (!stack.empty()) {
            const int s = stack.back();
            if (!is_leaf[s]) {
                stack.pop_back();
                continue;
            }
            const int i = longest_local_edge(s);
            const int a = forest[s].nodes[i];
            const int b = forest[s].nodes[(i + 1) % 3];
            const int nb = neighbor(s, a, b);
            if (nb < 0) {
                const int m = make_midpoint(a, b, true);
                bisect(s, i, m);
                stack.pop_back();
                continue;
            }
            const int j = longest_local_edge(nb);
            const int na = forest[nb].nodes[j];
            const int nbb = forest[nb].nodes[(j + 1) % 3];
            if (edge_key(na, nbb) == edge_key(a, b)) {
                if (forest[nb].level >= max_level) return false;
                const int m = make_midpoint(a, b, false);
                bisect(s, i, m);
                bisect(nb, j, m);
                stack.pop_back();
                continue;
            }
            if (forest[nb].level >= max_level) return false;
            stack.push_back(nb);
        }
        return true;
    }

    std::vector<int> leaves_in_tree_order() const {
        std::vector<int> out;
        std::vector<int> stack;
        for (int r = static_cast<int>(forest.size()) - 1; r >= 0; --r) {
            if (forest[r].parent < 0) stack.push_back(r);
        }
        // stack holds roots in reverse index order so roots pop in ascending order
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            if (is_leaf[t]) {
                out.push_back(t);
            } else if (forest[t].children[0] >= 0) {
                stack.push_back(forest[t].children[1]);
                stack.push_back(forest[t].children[0]);
            }
        }
        return out;
    }
};

}  // namespace

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::vector<Edge> build_edge_topology(std::span<const Element> elements, int num_nodes) {
    struct Incidence {
        std::uint64_t key;
        int element;
    };
    std::vector<Incidence> inc;
    inc.reserve(elements.size() * 3);
    for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
        const auto& n = elements[e].nodes;
        for (int i = 0; i < 3; ++i) {
            const int a = n[i];
            const int b = n[(i + 1) % 3];
            if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes)
                throw MeshError("element " + std::to_string(e) + " references a missing node");
            if (a == b) throw MeshError("element " + std::to_string(e) + " repeats a node");
            inc.push_back({edge_key(a, b), e});
        }
    }
    std::sort(inc.begin(), inc.end(), [](const Incidence& l, const Incidence& r) {
        return l.key != r.key ? l.key < r.key : l.element < r.element;
    });
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < inc.size();) {
        std::size_t j = i;
        while (j < inc.size() && inc[j].key == inc[i].key) ++j;
        const auto count = j - i;
        Edge edge;
        edge.nodes = {static_cast<int>(inc[i].key >> 32), static_cast<int>(inc[i].key & 0xffffffffu)};
        if (count > 2) {
            throw MeshError("non-conforming mesh: edge (" + std::to_string(edge.nodes[0]) + ", " +
                            std::to_string(edge.nodes[1]) + ") has " + std::to_string(count) + " supports");
        }
        edge.support_count = static_cast<int>(count);
        for (std::size_t k = 0; k < count; ++k) edge.support[k] = inc[i + k].element;
        edges.push_back(edge);
        i = j;
    }
    return edges;
}

TriMesh::TriMesh(MeshData data) : data_(std::move(data)) {
    const int nn = num_nodes();
    for (int i = 0; i < nn; ++i) {
        if (!data_.nodes[i].X.allFinite()) throw MeshError("node " + std::to_string(i) + " has non-finite coordinates");
    }
    if (data_.group_names.size() > 32) throw MeshError("at most 32 boundary groups are supported");
    if (data_.node_origins.empty()) data_.node_origins.assign(nn, {-1, -1});
    if (static_cast<int>(data_.node_origins.size()) != nn) throw MeshError("node_origins size mismatch");

    for (int e = 0; e < num_elements(); ++e) {
        const auto& el = data_.elements[e];
        for (int v : el.nodes) {
            if (v < 0 || v >= nn) throw MeshError("element " + std::to_string(e) + " references a missing node");
        }
        const double a = signed_area(data_.nodes[el.nodes[0]].X, data_.nodes[el.nodes[1]].X,
                                     data_.nodes[el.nodes[2]].X);
        if (!(a > 0.0)) {
            throw MeshError("element " + std::to_string(e) + " has non-positive signed area " + std::to_string(a));
        }
        if (el.level < 0) throw MeshError("element " + std::to_string(e) + " has a negative level");
    }

    if (data_.forest.empty()) {
        data_.forest.reserve(data_.elements.size());
        for (auto& el : data_.elements) {
            TreeNode root;
            root.nodes = el.nodes;
            root.level = el.level;
            root.region_tag = el.region_tag;
            el.tree_id = static_cast<int>(data_.forest.size());
            data_.forest.push_back(root);
        }
    } else {
        for (int e = 0; e < num_elements(); ++e) {
            const auto& el = data_.elements[e];
            if (el.tree_id < 0 || el.tree_id >= static_cast<int>(data_.forest.size()) ||
                data_.forest[el.tree_id].nodes != el.nodes || data_.forest[el.tree_id].children[0] >= 0) {
                throw MeshError("element " + std::to_string(e) + " is not a leaf of the bisection forest");
            }
        }
    }

    edges_ = build_edge_topology(data_.elements, nn);
    element_edges_.assign(data_.elements.size(), {-1, -1, -1});
    for (int k = 0; k < num_edges(); ++k) {
        const auto& edge = edges_[k];
        const auto key = edge_key(edge.nodes[0], edge.nodes[1]);
        for (int s = 0; s < edge.support_count; ++s) {
            const auto& n = data_.elements[edge.support[s]].nodes;
            for (int i = 0; i < 3; ++i) {
                if (edge_key(n[i], n[(i + 1) % 3]) == key) element_edges_[edge.support[s]][i] = k;
            }
        }
    }
}

double TriMesh::element_area(int e) const {
    const auto& n = data_.elements[e].nodes;
    return signed_area(data_.nodes[n[0]].X, data_.nodes[n[1]].X, data_.nodes[n[2]].X);
}

double TriMesh::total_area() const {
    double sum = 0.0;
    for (int e = 0; e < num_elements(); ++e) sum += element_area(e);
    return sum;
}

int TriMesh::max_level() const {
    int lvl = 0;
    for (const auto& e : data_.elements) lvl = std::max(lvl, e.level);
    return lvl;
}

bool TriMesh::has_group(std::string_view name) const {
    return std::find(data_.group_names.begin(), data_.group_names.end(), name) != data_.group_names.end();
}

std::uint32_t TriMesh::group_mask(std::string_view name) const {
    auto it = std::find(data_.group_names.begin(), data_.group_names.end(), name);
    if (it == data_.group_names.end()) throw MeshError("unknown boundary group '" + std::string(name) + "'");
    return 1u << static_cast<unsigned>(it - data_.group_names.begin());
}

std::vector<int> TriMesh::group_nodes(std::string_view name) const {
    const auto mask = group_mask(name);
    std::vector<int> out;
    for (int i = 0; i < num_nodes(); ++i) {
        if (data_.nodes[i].boundary_tag & mask) out.push_back(i);
    }
    return out;
}

std::vector<char> TriMesh::boundary_nodes() const {
    std::vector<char> flag(data_.nodes.size(), 0);
    for (const auto& e : edges_) {
        if (e.is_boundary()) flag[e.nodes[0]] = flag[e.nodes[1]] = 1;
    }
    return flag;
}

std::vector<int> mark_for_refinement(const TriMesh& mesh, std::span<const double> phi, double threshold,
                                     int max_level) {
    if (static_cast<int>(phi.size()) != mesh.num_nodes()) throw MeshError("phase field size does not match mesh");
    std::vector<int> marked;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        if (el.level >= max_level) continue;
        for (int v : el.nodes) {
            if (phi[v] >= threshold) {
                marked.push_back(e);
                break;
            }
        }
    }
    return marked;
}

TransferRecord TransferRecord::identity(int num_nodes) {
    TransferRecord r;
    r.old_node_count = num_nodes;
    r.sources.resize(num_nodes);
    for (int i = 0; i < num_nodes; ++i) r.sources[i] = {{i, 1.0}};
    return r;
}

bool TransferRecord::is_identity() const {
    if (old_node_count != new_node_count()) return false;
    for (int i = 0; i < new_node_count(); ++i) {
        if (sources[i].size() != 1 || sources[i][0].old_node != i || sources[i][0].weight != 1.0) return false;
    }
    return true;
}

TransferRecord TransferRecord::then(const TransferRecord& next) const {
    if (next.old_node_count != new_node_count()) throw MeshError("cannot compose transfer records of different sizes");
    TransferRecord out;
    out.old_node_count = old_node_count;
    out.sources.resize(next.sources.size());
    for (std::size_t j = 0; j < next.sources.size(); ++j) {
        std::vector<TransferSource> s;
        for (const auto& mid : next.sources[j]) {
            for (const auto& src : sources[mid.old_node]) s.push_back({src.old_node, mid.weight * src.weight});
        }
        out.sources[j] = merge_sources(std::move(s));
    }
    return out;
}

namespace {

TriMesh assemble_output(const TriMesh& input, WorkingMesh& w) {
    MeshData d;
    d.group_names = input.group_names();
    d.regions = w.regions;
    d.nodes = w.nodes;
    d.node_origins = w.origins;
    d.forest = w.forest;
    for (int t : w.leaves_in_tree_order()) {
        Element el;
        el.nodes = w.forest[t].nodes;
        el.level = w.forest[t].level;
        el.tree_id = t;
        el.region_tag = w.forest[t].region_tag;
        d.elements.push_back(el);
    }
    return TriMesh(std::move(d));
}

}  // namespace

Adaptation refine(const TriMesh& mesh, std::span<const int> marked, int max_level) {
    if (marked.empty()) return {mesh, TransferRecord::identity(mesh.num_nodes())};

    WorkingMesh w(mesh);
    std::vector<int> order(marked.begin(), marked.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (int e : order) {
        if (e < 0 || e >= mesh.num_elements()) throw MeshError("marked element " + std::to_string(e) + " does not exist");
        const int t = mesh.elements()[e].tree_id;
        if (w.is_leaf[t] && w.forest[t].level < max_level) w.refine_leaf(t, max_level);
    }

    // Level closure: neighbours may differ by at most one level.
    for (;;) {
        std::vector<int> todo;
        for (const auto& [key, pair] : w.edge_leaves) {
            if (pair[1] < 0) continue;
            const int la = w.forest[pair[0]].level;
            const int lb = w.forest[pair[1]].level;
            if (std::abs(la - lb) > 1) todo.push_back(la < lb ? pair[0] : pair[1]);
        }
        if (todo.empty()) break;
        std::sort(todo.begin(), todo.end());
        todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
        bool progressed = false;
        for (int t : todo) {
            if (w.is_leaf[t] && w.refine_leaf(t, max_level)) progressed = true;
        }
        if (!progressed) break;
    }

    TransferRecord record;
    record.old_node_count = mesh.num_nodes();
    record.sources = w.sources;
    return {assemble_output(mesh, w), std::move(record)};
}

Adaptation coarsen(const TriMesh& mesh, std::span<const double> phi, double threshold_low) {
    if (static_cast<int>(phi.size()) != mesh.num_nodes()) throw MeshError("phase field size does not match mesh");

    WorkingMesh w(mesh);
    bool any = false;
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<int> candidates;
        for (int m = 0; m < static_cast<int>(w.nodes.size()); ++m) {
            if (w.origins[m][0] >= 0 && !w.node_leaves[m].empty()) candidates.push_back(m);
        }
        std::sort(candidates.rbegin(), candidates.rend());

        for (int m : candidates) {
            const std::vector<int> leaves = w.node_leaves[m];
            if (leaves.empty()) continue;

            bool ok = true;
            for (int t : leaves) {
                for (int v : w.forest[t].nodes) {
                    if (!(phi[v] < threshold_low)) ok = false;
                }
            }
            if (!ok) continue;

            std::vector<int> parents;
            for (int t : leaves) {
                const int p = w.forest[t].parent;
                if (p < 0 || w.forest[p].midpoint != m) {
                    ok = false;
                    break;
                }
                if (std::find(parents.begin(), parents.end(), p) == parents.end()) parents.push_back(p);
            }
            if (!ok || leaves.size() != 2 * parents.size()) continue;
            for (int p : parents) {
                for (int c : w.forest[p].children) {
                    if (!w.is_leaf[c] || std::find(leaves.begin(), leaves.end(), c) == leaves.end()) ok = false;
                }
            }
            if (!ok) continue;

            // The merged parents keep their two unsplit edges; the leaves across
            // those edges must stay within one level of the parent.
            const auto [ea, eb] = w.origins[m];
            for (int p : parents) {
                const auto& pn = w.forest[p].nodes;
                for (int i = 0; i < 3 && ok; ++i) {
                    const int a = pn[i];
                    const int b = pn[(i + 1) % 3];
                    if (edge_key(a, b) == edge_key(ea, eb)) continue;
                    int child = -1;
                    for (int c : w.forest[p].children) {
                        const auto& cn = w.forest[c].nodes;
                        if (std::count(cn.begin(), cn.end(), a) && std::count(cn.begin(), cn.end(), b)) child = c;
                    }
                    const int nb = w.neighbor(child, a, b);
                    if (nb >= 0 && w.forest[nb].level > w.forest[p].level + 1) ok = false;
                }
            }
            if (!ok) continue;

            for (int p : parents) {
                for (int c : w.forest[p].children) w.remove_leaf(c);
            }
            for (int p : parents) {
                w.forest[p].children = {-1, -1};
                w.forest[p].midpoint = -1;
                w.add_leaf(p);
            }
            changed = true;
            any = true;
        }
    }
    if (!any) return {mesh, TransferRecord::identity(mesh.num_nodes())};

    // Renumber surviving nodes and compact the forest.
    std::vector<int> node_map(w.nodes.size(), -1);
    MeshData d;
    d.group_names = mesh.group_names();
    d.regions = w.regions;
    TransferRecord record;
    record.old_node_count = mesh.num_nodes();
    for (int i = 0; i < static_cast<int>(w.nodes.size()); ++i) {
        if (w.node_leaves[i].empty()) continue;
        node_map[i] = static_cast<int>(d.nodes.size());
        d.nodes.push_back(w.nodes[i]);
        record.sources.push_back({{i, 1.0}});
    }
    for (int i = 0; i < static_cast<int>(w.nodes.size()); ++i) {
        if (node_map[i] < 0) continue;
        auto o = w.origins[i];
        if (o[0] >= 0 && (node_map[o[0]] < 0 || node_map[o[1]] < 0)) o = {-1, -1};
        d.node_origins.push_back(o[0] >= 0 ? std::array<int, 2>{node_map[o[0]], node_map[o[1]]} : o);
    }

    std::vector<int> tree_map(w.forest.size(), -1);
    std::vector<int> order;
    {
        std::vector<int> stack;
        for (int r = static_cast<int>(w.forest.size()) - 1; r >= 0; --r) {
            if (w.forest[r].parent < 0) stack.push_back(r);
        }
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            tree_map[t] = static_cast<int>(order.size());
            order.push_back(t);
            if (!w.is_leaf[t] && w.forest[t].children[0] >= 0) {
                stack.push_back(w.forest[t].children[1]);
                stack.push_back(w.forest[t].children[0]);
            }
        }
    }
    for (int t : order) {
        TreeNode tn = w.forest[t];
        for (auto& v : tn.nodes) v = node_map[v];
        if (tn.parent >= 0) tn.parent = tree_map[tn.parent];
        if (w.is_leaf[t]) {
            tn.children = {-1, -1};
            tn.midpoint = -1;
        } else {
            tn.children = {tree_map[tn.children[0]], tree_map[tn.children[1]]};
            tn.midpoint = node_map[tn.midpoint];
        }
        d.forest.push_back(tn);
        if (w.is_leaf[t]) {
            Element el;
            el.nodes = tn.nodes;
            el.level = tn.level;
            el.tree_id = tree_map[t];
            el.region_tag = tn.region_tag;
            d.elements.push_back(el);
        }
    }
    return {TriMesh(std::move(d)), std::move(record)};
}

TriMesh odt_smooth(const TriMesh& mesh, std::span<const char> is_protected, int sweeps) {
    if (static_cast<int>(is_protected.size()) != mesh.num_nodes())
        throw MeshError("protected-node mask size does not match mesh");
    MeshData d = mesh.data();
    const auto boundary = mesh.boundary_nodes();
    std::vector<std::vector<int>> star(mesh.num_nodes());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int v : mesh.elements()[e].nodes) star[v].push_back(e);
    }
    const double input_min_angle = min_angle(mesh);

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool moved_any = false;
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            if (is_protected[i] || boundary[i] || star[i].empty()) continue;

            double area = 0.0;
            Vec2 weighted = Vec2::Zero();
            double old_min = 180.0;
            for (int e : star[i]) {
                const auto& n = d.elements[e].nodes;
                const Vec2& a = d.nodes[n[0]].X;
                const Vec2& b = d.nodes[n[1]].X;
                const Vec2& c = d.nodes[n[2]].X;
                const double ae = signed_area(a, b, c);
                area += ae;
                weighted += ae * circumcenter(a, b, c);
                for (double ang : triangle_angles(a, b, c)) old_min = std::min(old_min, ang);
            }
            const Vec2 target = weighted / area;
            const Vec2 old = d.nodes[i].X;
            if ((target - old).norm() <= 1e-14 * std::sqrt(area)) continue;

            d.nodes[i].X = target;
            bool accept = true;
            double new_min = 180.0;
            for (int e : star[i]) {
                const auto& n = d.elements[e].nodes;
                const Vec2& a = d.nodes[n[0]].X;
                const Vec2& b = d.nodes[n[1]].X;
                const Vec2& c = d.nodes[n[2]].X;
                if (!(signed_area(a, b, c) > 0.0)) {
                    accept = false;
                    break;
                }
                for (double ang : triangle_angles(a, b, c)) new_min = std::min(new_min, ang);
            }
            if (accept && new_min < std::min(old_min, input_min_angle)) accept = false;
            if (!accept) {
                d.nodes[i].X = old;
            } else {
                moved_any = true;
            }
        }
        if (!moved_any) break;
    }
    return TriMesh(std::move(d));
}

std::vector<NodalField> transfer_fields(const TransferRecord& record, const std::vector<NodalField>& fields) {
    std::vector<NodalField> out;
    out.reserve(fields.size());
    for (const auto& f : fields) {
        if (f.components < 1 ||
            f.values.size() != static_cast<std::size_t>(record.old_node_count) * static_cast<std::size_t>(f.components)) {
            throw MeshError("nodal field size does not match the transfer record");
        }
        NodalField g;
        g.components = f.components;
        g.is_phase = f.is_phase;
        g.values.assign(static_cast<std::size_t>(record.new_node_count()) * f.components, 0.0);
        for (int j = 0; j < record.new_node_count(); ++j) {
            for (int c = 0; c < f.components; ++c) {
                double v = 0.0;
                for (const auto& s : record.sources[j]) v += s.weight * f.values[s.old_node * f.components + c];
                if (f.is_phase) v = std::clamp(v, 0.0, 1.0);
                g.values[j * f.components + c] = v;
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

double min_angle(const TriMesh& mesh) {
    double m = 180.0;
    for (const auto& el : mesh.elements()) {
        const auto ang = triangle_angles(mesh.nodes()[el.nodes[0]].X, mesh.nodes()[el.nodes[1]].X,
                                         mesh.nodes()[el.nodes[2]].X);
        for (double a : ang) m = std::min(m, a);
    }
    return m;
}

int max_adjacent_level_jump(const TriMesh& mesh) {
    int jump = 0;
    for (const auto& e : mesh.edges()) {
        if (e.support_count == 2) {
            jump = std::max(jump, std::abs(mesh.elements()[e.support[0]].level - mesh.elements()[e.support[1]].level));
        }
    }
    return jump;
}

std::string validate(const TriMesh& mesh, int max_level) {
    std::ostringstream msg;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (!(mesh.element_area(e) > 0.0)) msg << "element " << e << " has non-positive area; ";
        if (mesh.elements()[e].level > max_level) msg << "element " << e << " exceeds level " << max_level << "; ";
    }
    if (const int jump = max_adjacent_level_jump(mesh); jump > 1) msg << "adjacent level jump " << jump << "; ";

    std::unordered_set<std::uint64_t> keys;
    for (const auto& e : mesh.edges()) keys.insert(edge_key(e.nodes[0], e.nodes[1]));
    std::vector<char> used(mesh.num_nodes(), 0);
    for (const auto& el : mesh.elements()) {
        for (int v : el.nodes) used[v] = 1;
    }
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        if (!used[i]) msg << "node " << i << " is not used by any element; ";
        const auto o = mesh.node_origins()[i];
        if (o[0] >= 0 && keys.count(edge_key(o[0], o[1]))) msg << "hanging node " << i << "; ";
    }
    return msg.str();
}

}  // namespace esfem
