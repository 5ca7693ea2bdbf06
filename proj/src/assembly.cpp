#include "esfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace esfem {

namespace {

SparseMatrix build_pattern(std::span<const SmoothingDomain> domains, int n, int per_node, int width,
                           std::vector<int>& scatter) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(domains.size() * width * width);
    std::vector<int> local(width);
    auto fill_local = [&](const SmoothingDomain& d) {
        std::fill(local.begin(), local.end(), -1);
        for (int i = 0; i < d.num_support; ++i) {
            for (int c = 0; c < per_node; ++c) local[per_node * i + c] = per_node * d.nodes[i] + c;
        }
    };
    for (const auto& d : domains) {
        fill_local(d);
        for (int a : local) {
            for (int b : local) {
                if (a >= 0 && b >= 0) trip.emplace_back(a, b, 0.0);
            }
        }
    }
    SparseMatrix K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();

    scatter.assign(domains.size() * width * width, -1);
    const int* outer = K.outerIndexPtr();
    const int* inner = K.innerIndexPtr();
    for (std::size_t k = 0; k < domains.size(); ++k) {
        fill_local(domains[k]);
        for (int i = 0; i < width; ++i) {
            for (int j = 0; j < width; ++j) {
                const int row = local[i];
                const int col = local[j];
                if (row < 0 || col < 0) continue;
                const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
                scatter[k * width * width + i * width + j] = static_cast<int>(pos - inner);
            }
        }
    }
    return K;
}

}  // namespace

Constraints resolve_constraints(const TriMesh& mesh, const BoundaryConditions& bcs) {
    std::map<int, double> fixed;
    for (const auto& g : bcs.dirichlet) {
        if (!mesh.has_group(g.group)) throw ConfigError("unknown boundary group '" + g.group + "'");
        if (g.component != 0 && g.component != 1) throw ConfigError("Dirichlet component must be x or y");
        for (int n : mesh.group_nodes(g.group)) {
            const int dof = 2 * n + g.component;
            auto [it, inserted] = fixed.emplace(dof, g.scale);
            if (!inserted && it->second != g.scale) {
                throw ConfigError("node " + std::to_string(n) + " has conflicting Dirichlet values (group '" + g.group +
                                  "')");
            }
        }
    }
    Constraints c;
    for (const auto& [dof, s] : fixed) {
        c.dofs.push_back(dof);
        c.scale.push_back(s);
    }
    return c;
}

Vector external_forces(const TriMesh& mesh, const BoundaryConditions& bcs, double load) {
    Vector f = Vector::Zero(2 * mesh.num_nodes());
    for (const auto& t : bcs.tractions) {
        if (!mesh.has_group(t.group)) throw ConfigError("unknown boundary group '" + t.group + "'");
        const auto mask = mesh.group_mask(t.group);
        for (const auto& e : mesh.edges()) {
            if (!e.is_boundary()) continue;
            const auto& a = mesh.nodes()[e.nodes[0]];
            const auto& b = mesh.nodes()[e.nodes[1]];
            if (!(a.boundary_tag & mask) || !(b.boundary_tag & mask)) continue;
            const double half = 0.5 * (a.X - b.X).norm() * load;
            for (int n : e.nodes) {
                f[2 * n] += half * t.traction.x();
                f[2 * n + 1] += half * t.traction.y();
            }
        }
    }
    if (bcs.body_force != Vec2::Zero()) {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double w = mesh.element_area(e) / 3.0 * load;
            for (int n : mesh.elements()[e].nodes) {
                f[2 * n] += w * bcs.body_force.x();
                f[2 * n + 1] += w * bcs.body_force.y();
            }
        }
    }
    return f;
}

Assembler::Assembler(const TriMesh& mesh, std::span<const SmoothingDomain> domains) : domains_(domains) {
    dofs_.num_nodes = mesh.num_nodes();
    pattern_u_ = build_pattern(domains_, dofs_.num_u(), 2, 8, scatter_u_);
    pattern_phi_ = build_pattern(domains_, dofs_.num_phi(), 1, 4, scatter_phi_);
}

void Assembler::assemble_displacement(std::span<const double> u, std::span<const double> phi,
                                      const MaterialModel& material, const Vector& external,
                                      GlobalSystem& sys) const {
    sys.K = pattern_u_;
    sys.internal = Vector::Zero(dofs_.num_u());
    sys.energy = 0.0;
    double* values = sys.K.valuePtr();

    Eigen::Matrix<double, 3, 8> B0;
    Eigen::Matrix<double, 8, 8> Kl;
    Eigen::Matrix<double, 8, 1> fl;
    for (std::size_t k = 0; k < domains_.size(); ++k) {
        const auto& d = domains_[k];
        const int ns = d.num_support;
        const auto kin = smoothed_deformation(d, u);
        const double phibar = std::clamp(smoothed_value(d, phi), 0.0, 1.0);
        const auto s = degrade(stress_state(kin.F, material), phibar, material);
        const Mat2 F = kin.F;

        B0.setZero();
        for (int i = 0; i < ns; ++i) {
            const double b1 = d.grad[i].x();
            const double b2 = d.grad[i].y();
            B0.col(2 * i) << F(0, 0) * b1, F(0, 1) * b2, F(0, 0) * b2 + F(0, 1) * b1;
            B0.col(2 * i + 1) << F(1, 0) * b1, F(1, 1) * b2, F(1, 0) * b2 + F(1, 1) * b1;
        }
        Kl.noalias() = d.area * (B0.transpose() * s.D * B0);
        fl.noalias() = d.area * (B0.transpose() * s.S);
        Mat2 Sm;
        Sm << s.S(0), s.S(2), s.S(2), s.S(1);
        for (int i = 0; i < ns; ++i) {
            for (int j = 0; j < ns; ++j) {
                const double g = d.area * d.grad[i].dot(Sm * d.grad[j]);
                Kl(2 * i, 2 * j) += g;
                Kl(2 * i + 1, 2 * j + 1) += g;
            }
        }

        const int* sc = &scatter_u_[k * 64];
        for (int i = 0; i < 2 * ns; ++i) {
            for (int j = 0; j < 2 * ns; ++j) values[sc[i * 8 + j]] += Kl(i, j);
        }
        for (int i = 0; i < ns; ++i) {
            sys.internal[2 * d.nodes[i]] += fl(2 * i);
            sys.internal[2 * d.nodes[i] + 1] += fl(2 * i + 1);
        }
        sys.energy += d.area * degradation(phibar, material.k) * s.psi0;
    }
    sys.residual = sys.internal - external;
}

std::vector<double> Assembler::domain_psi0(std::span<const double> u, const MaterialModel& material) const {
    std::vector<double> psi0(domains_.size());
    for (std::size_t k = 0; k < domains_.size(); ++k) {
        psi0[k] = esfem::strain_energy(smoothed_deformation(domains_[k], u).F, material);
    }
    return psi0;
}

void Assembler::assemble_phase(std::span<const double> psi0, std::span<const double> phi, std::span<const double> phi_n,
                               double dt, const CrackModel& crack, GlobalSystem& sys) const {
    sys.K = pattern_phi_;
    sys.residual = Vector::Zero(dofs_.num_phi());
    sys.internal.resize(0);
    sys.energy = 0.0;
    double* values = sys.K.valuePtr();

    const bool at1 = crack.variant == CrackVariant::AT1;
    double visc = 0.0;
    if (crack.eta > 0.0) {
        if (!(dt > 0.0)) throw NumericalError("phase assembly requires dt > 0 when eta > 0");
        visc = crack.eta / dt;
    }
    for (std::size_t k = 0; k < domains_.size(); ++k) {
        const auto& d = domains_[k];
        const int ns = d.num_support;
        const double gc = crack.gc_for(d.region_tag);
        const double psi = psi0[k];
        const double phibar = smoothed_value(d, phi);
        const double phibar_n = smoothed_value(d, phi_n);
        const Vec2 gphi = smoothed_gradient(d, phi);

        const double cg = at1 ? 0.75 * gc * crack.l0 : gc * crack.l0;
        const double cm = at1 ? 2.0 * psi + visc : 2.0 * psi + gc / crack.l0 + visc;
        const double src = at1 ? 3.0 * gc / (8.0 * crack.l0) - 2.0 * psi * (1.0 - phibar) + visc * (phibar - phibar_n)
                               : -2.0 * psi * (1.0 - phibar) + gc / crack.l0 * phibar + visc * (phibar - phibar_n);

        const int* sc = &scatter_phi_[k * 16];
        for (int i = 0; i < ns; ++i) {
            for (int j = 0; j < ns; ++j) {
                values[sc[i * 4 + j]] += d.area * (cg * d.grad[i].dot(d.grad[j]) + cm * d.shape[i] * d.shape[j]);
            }
            sys.residual[d.nodes[i]] += d.area * (cg * d.grad[i].dot(gphi) + d.shape[i] * src);
        }
        sys.energy += gc * crack_density(phibar, gphi, crack) * d.area;
    }
}

double Assembler::strain_energy(std::span<const double> u, std::span<const double> phi,
                                const MaterialModel& material) const {
    double sum = 0.0;
    for (const auto& d : domains_) {
        const auto kin = smoothed_deformation(d, u);
        const double phibar = std::clamp(smoothed_value(d, phi), 0.0, 1.0);
        sum += d.area * degradation(phibar, material.k) * esfem::strain_energy(kin.F, material);
    }
    return sum;
}

void eliminate(SparseMatrix& K, Vector& rhs, std::span<const int> fixed) {
    std::vector<char> mask(K.rows(), 0);
    for (int i : fixed) mask[i] = 1;
    for (int c = 0; c < K.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(K, c); it; ++it) {
            if (mask[it.row()] || mask[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
        }
    }
    for (int i : fixed) rhs[i] = 0.0;
}

double reaction_force(const TriMesh& mesh, const Vector& internal, const std::string& group, int component) {
    if (!mesh.has_group(group)) throw ConfigError("unknown boundary group '" + group + "'");
    double sum = 0.0;
    for (int n : mesh.group_nodes(group)) sum += internal[2 * n + component];
    return sum;
}

double free_norm(const Vector& v, std::span<const int> fixed) {
    double sum = 0.0;
    std::size_t f = 0;
    for (int i = 0; i < v.size(); ++i) {
        if (f < fixed.size() && fixed[f] == i) {
            ++f;
            continue;
        }
        sum += v[i] * v[i];
    }
    return std::sqrt(sum);
}

}  // namespace esfem
