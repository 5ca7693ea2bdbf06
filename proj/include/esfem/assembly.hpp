#pragma once

#include "esfem/common.hpp"
#include "esfem/constitutive.hpp"
#include "esfem/mesh.hpp"
#include "esfem/phasefield.hpp"
#include "esfem/smoothing.hpp"

#include <Eigen/SparseCore>

#include <span>
#include <string>
#include <vector>

namespace esfem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Displacement dofs are interleaved (2i, 2i+1); phase dofs are node ids.
struct DofMap {
    int num_nodes = 0;
    int ux(int node) const { return 2 * node; }
    int uy(int node) const { return 2 * node + 1; }
    int phi(int node) const { return node; }
    int num_u() const { return 2 * num_nodes; }
    int num_phi() const { return num_nodes; }
};

/// Prescribes component `component` (0 = x, 1 = y) of every node in `group` to scale * load.
struct DirichletGroup {
    std::string group;
    int component = 0;
    double scale = 0.0;
};

/// Uniform traction (N/mm per unit thickness) on the boundary edges of `group`, scaled by load.
struct TractionLoad {
    std::string group;
    Vec2 traction = Vec2::Zero();
};

struct BoundaryConditions {
    std::vector<DirichletGroup> dirichlet;
    std::vector<TractionLoad> tractions;
    Vec2 body_force = Vec2::Zero();  // per unit reference area, scaled by load
};

/// Constrained displacement dofs of a mesh: sorted ids with their value per unit load.
struct Constraints {
    std::vector<int> dofs;
    std::vector<double> scale;
};

/// Throws ConfigError for unknown groups or conflicting prescriptions.
Constraints resolve_constraints(const TriMesh& mesh, const BoundaryConditions& bcs);

/// Edge-lumped tractions plus body force at the given load factor.
Vector external_forces(const TriMesh& mesh, const BoundaryConditions& bcs, double load);

struct GlobalSystem {
    SparseMatrix K;     // full dof space
    Vector residual;    // internal - external
    Vector internal;
    double energy = 0.0;  // degraded strain energy (displacement) or surface energy (phase)
};

/// Assembles over smoothing domains with a sparsity pattern and scatter map fixed per mesh.
/// Insertion follows domain order, so results are bit-reproducible.
class Assembler {
public:
    Assembler(const TriMesh& mesh, std::span<const SmoothingDomain> domains);

    const DofMap& dofs() const { return dofs_; }

    /// Throws InvertedConfiguration when a domain has J <= 0.
    void assemble_displacement(std::span<const double> u, std::span<const double> phi, const MaterialModel& material,
                               const Vector& external, GlobalSystem& sys) const;

    /// Undegraded energy density of every domain; throws InvertedConfiguration.
    std::vector<double> domain_psi0(std::span<const double> u, const MaterialModel& material) const;

    /// psi0 from domain_psi0. The system is linear in phi, so the residual equals K phi - rhs.
    void assemble_phase(std::span<const double> psi0, std::span<const double> phi, std::span<const double> phi_n,
                        double dt, const CrackModel& crack, GlobalSystem& sys) const;

    /// Degraded strain energy sum_k g(phibar) psi0 A_k.
    double strain_energy(std::span<const double> u, std::span<const double> phi, const MaterialModel& material) const;

private:
    std::span<const SmoothingDomain> domains_;
    DofMap dofs_;
    SparseMatrix pattern_u_;
    SparseMatrix pattern_phi_;
    std::vector<int> scatter_u_;    // 64 value offsets per domain
    std::vector<int> scatter_phi_;  // 16 value offsets per domain
};

/// Row/column elimination: constrained rows and columns become identity, residual entries zero.
void eliminate(SparseMatrix& K, Vector& rhs, std::span<const int> fixed);

/// Sum of internal forces at the constrained dofs of a group in one component.
double reaction_force(const TriMesh& mesh, const Vector& internal, const std::string& group, int component);

/// Euclidean norm over the entries not listed in `fixed` (sorted).
double free_norm(const Vector& v, std::span<const int> fixed);

}  // namespace esfem
