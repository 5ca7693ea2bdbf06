#pragma once

#include "esfem/mesh.hpp"

#include <functional>
#include <string>
#include <vector>

namespace esfem {

/// Boundary group assigned to every boundary node satisfying the predicate.
struct GroupRule {
    std::string name;
    std::function<bool(const Vec2&)> contains;
};

/// Rectangle meshed on the tensor grid xs x ys, every cell split along its
/// lower-left to upper-right diagonal. Only boundary nodes receive group bits.
TriMesh structured_rectangle(const std::vector<double>& xs, const std::vector<double>& ys,
                             const std::vector<GroupRule>& groups, const std::vector<RegionBox>& regions = {});

/// Grid lines from lo to hi with spacing close to h that include every forced coordinate.
std::vector<double> grid_lines(double lo, double hi, double h, std::vector<double> forced = {});

/// Two triangles on [0,1]^2 with groups left, right, bottom, top.
TriMesh unit_square_mesh();

/// Quarter of a double-edge notched tension specimen. x = 0 and y = 0 are the
/// symmetry lines; the notch runs along y = 0 from x = width - notch to x = width.
struct DoubleEdgeNotchGeometry {
    double width = 40.0;
    double height = 100.0;
    double notch = 16.0;
    double h0 = 2.0;
};
TriMesh double_edge_notch_mesh(const DoubleEdgeNotchGeometry& g);

/// Quarter of a slab with a central crack of half length `half_crack` along y = 0.
struct CentralCrackSlabGeometry {
    double half_width = 0.5;
    double half_height = 0.5;
    double half_crack = 0.125;
    double h0 = 0.025;
};
TriMesh central_crack_slab_mesh(const CentralCrackSlabGeometry& g);

struct Hole {
    double x = 0.0, y = 0.0, r = 1.0;
};

/// Full rectangular panel with circular holes; no initial crack.
struct HoledPanelGeometry {
    double length = 120.0;
    double height = 65.0;
    double h0 = 2.5;
    std::vector<Hole> holes{{40.0, 40.0, 10.0}, {80.0, 25.0, 10.0}};
};
TriMesh holed_panel_mesh(const HoledPanelGeometry& g);

/// Upper half of a strip with an edge notch along y = 0 from x = 0 to x = notch and
/// a vertical band of width band_width centred on the notch tip (region tag 1).
struct InterfaceStripGeometry {
    double width = 24.0;
    double half_height = 60.0;
    double notch = 12.0;
    double band_width = 0.8;
    double h0 = 0.4;
};
TriMesh interface_strip_mesh(const InterfaceStripGeometry& g);

}  // namespace esfem
