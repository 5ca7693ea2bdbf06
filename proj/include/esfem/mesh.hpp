#pragma once

#include "esfem/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esfem {

struct Node {
    Vec2 X = Vec2::Zero();
    // Bit i set means the node belongs to boundary group i.
    std::uint32_t boundary_tag = 0;
    int region_tag = 0;
};

struct Element {
    std::array<int, 3> nodes{};  // counter-clockwise
    int level = 0;
    int tree_id = -1;  // entry in TriMesh::forest()
    int region_tag = 0;
};

struct Edge {
    std::array<int, 2> nodes{};  // ascending node ids
    std::array<int, 2> support{-1, -1};
    int support_count = 0;

    bool is_boundary() const { return support_count == 1; }
};

/// One entry of the binary bisection tree. Leaves are the active elements.
struct TreeNode {
    std::array<int, 3> nodes{};
    int level = 0;
    int parent = -1;
    std::array<int, 2> children{-1, -1};
    int midpoint = -1;  // node inserted when this entry was bisected
    int region_tag = 0;
};

/// Axis-aligned box that assigns a region tag to nodes created by refinement.
struct RegionBox {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    int tag = 0;

    bool contains(const Vec2& p, double tol = 1e-9) const {
        return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol && p.y() <= ymax + tol;
    }
};

/// Raw arrays a TriMesh is built from.
struct MeshData {
    std::vector<Node> nodes;
    std::vector<Element> elements;
    std::vector<std::string> group_names;
    // Empty: one root per element is created at the element's level.
    std::vector<TreeNode> forest;
    // Parent edge of every node created by bisection, {-1, -1} for original nodes. Empty: all original.
    std::vector<std::array<int, 2>> node_origins;
    std::vector<RegionBox> regions;
};

/// Conforming T3 triangulation with edge topology and the bisection forest.
///
/// A TriMesh is an immutable value: adaptation returns a new mesh.
class TriMesh {
public:
    TriMesh() = default;
    /// Validates orientation and topology; throws MeshError.
    explicit TriMesh(MeshData data);

    const std::vector<Node>& nodes() const { return data_.nodes; }
    const std::vector<Element>& elements() const { return data_.elements; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<TreeNode>& forest() const { return data_.forest; }
    const std::vector<std::array<int, 2>>& node_origins() const { return data_.node_origins; }
    const std::vector<std::string>& group_names() const { return data_.group_names; }
    const std::vector<RegionBox>& regions() const { return data_.regions; }
    const MeshData& data() const { return data_; }

    int num_nodes() const { return static_cast<int>(data_.nodes.size()); }
    int num_elements() const { return static_cast<int>(data_.elements.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    /// Edge ids of element e; local edge i joins nodes[i] and nodes[(i+1)%3].
    const std::array<int, 3>& element_edges(int e) const { return element_edges_[e]; }

    double element_area(int e) const;
    double total_area() const;
    int max_level() const;

    /// Bit mask of a named boundary group; throws MeshError for unknown names.
    std::uint32_t group_mask(std::string_view name) const;
    bool has_group(std::string_view name) const;
    std::vector<int> group_nodes(std::string_view name) const;
    /// Nodes lying on at least one boundary edge.
    std::vector<char> boundary_nodes() const;

private:
    MeshData data_;
    std::vector<Edge> edges_;
    std::vector<std::array<int, 3>> element_edges_;
};

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

/// Unique edges sorted by node pair; throws MeshError if an edge has more than two supports.
std::vector<Edge> build_edge_topology(std::span<const Element> elements, int num_nodes);

/// Elements with a node at phi >= threshold and level < max_level, ascending ids.
std::vector<int> mark_for_refinement(const TriMesh& mesh, std::span<const double> phi, double threshold,
                                     int max_level);

struct TransferSource {
    int old_node = -1;
    double weight = 0.0;
};

/// How each node of a new mesh is obtained from nodes of the old one.
struct TransferRecord {
    int old_node_count = 0;
    std::vector<std::vector<TransferSource>> sources;  // one list per new node

    static TransferRecord identity(int num_nodes);
    int new_node_count() const { return static_cast<int>(sources.size()); }
    bool is_identity() const;
    /// Record mapping the old mesh of *this to the new mesh of `next`.
    TransferRecord then(const TransferRecord& next) const;
};

struct Adaptation {
    TriMesh mesh;
    TransferRecord transfer;
};

/// Longest-edge bisection of the marked elements with conformity and level closure.
Adaptation refine(const TriMesh& mesh, std::span<const int> marked, int max_level);

/// Merges sibling pairs whose nodes all have phi < threshold_low.
Adaptation coarsen(const TriMesh& mesh, std::span<const double> phi, double threshold_low);

/// ODT node relocation: unprotected interior nodes move to the area-weighted
/// mean of the circumcentres of their incident elements.
TriMesh odt_smooth(const TriMesh& mesh, std::span<const char> is_protected, int sweeps = 3);

struct NodalField {
    std::vector<double> values;
    int components = 1;
    bool is_phase = false;  // clamped to [0, 1] after transfer
};

std::vector<NodalField> transfer_fields(const TransferRecord& record, const std::vector<NodalField>& fields);

/// Smallest interior angle over all elements, in degrees.
double min_angle(const TriMesh& mesh);
/// Largest level difference between elements sharing an edge.
int max_adjacent_level_jump(const TriMesh& mesh);
/// Checks conformity, level bounds, level jumps and orientation. Returns an empty string when valid.
std::string validate(const TriMesh& mesh, int max_level);

}  // namespace esfem
