#pragma once

#include "esfem/mesh.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace esfem {

/// Contents of a legacy ASCII VTK unstructured grid written by write_vtk.
struct VtkData {
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> cells;
    std::vector<int> level;               // per cell
    std::vector<double> displacement;     // interleaved (u_x, u_y) per point
    std::vector<double> phi;              // per point
};

/// Reference configuration with nodal displacement and phase field and the element level.
void write_vtk(const std::string& path, const TriMesh& mesh, std::span<const double> u, std::span<const double> phi);

/// Deformed configuration; cells whose nodes all exceed `crack_phi` are omitted.
void write_vtk_deformed(const std::string& path, const TriMesh& mesh, std::span<const double> u,
                        std::span<const double> phi, double crack_phi = 0.8);

/// Reads files written by write_vtk; throws IoError.
VtkData read_vtk(const std::string& path);

}  // namespace esfem
