#pragma once

#include "esfem/mesh.hpp"

#include <iosfwd>
#include <string>

namespace esfem {

/// ASCII exchange format:
///
///     # group <bit> <name>                      (optional, one per boundary group)
///     # region <xmin> <xmax> <ymin> <ymax> <tag> (optional)
///     nodes N elements M
///     <id> <x> <y> <boundary_tag> <region_tag>   (N lines)
///     <id> <n1> <n2> <n3> <level> <region_tag>   (M lines)
///
/// Other lines starting with '#' are comments. Ids must be 0..N-1 and 0..M-1 in order.
void write_mesh(std::ostream& out, const TriMesh& mesh);
void write_mesh_file(const std::string& path, const TriMesh& mesh);

/// Throws MeshError with the offending line number.
TriMesh read_mesh(std::istream& in);
/// Throws IoError if the file cannot be opened.
TriMesh read_mesh_file(const std::string& path);

/// Human-readable summary used by the mesh-info command.
std::string describe_mesh(const TriMesh& mesh);

}  // namespace esfem
