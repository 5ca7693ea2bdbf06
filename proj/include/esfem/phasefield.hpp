#pragma once

#include "esfem/common.hpp"
#include "esfem/smoothing.hpp"

#include <span>
#include <vector>

namespace esfem {

enum class CrackVariant { AT1, AT2 };

struct CrackModel {
    CrackVariant variant = CrackVariant::AT2;
    double l0 = 1.0;
    double gc = 1.0;            // bulk fracture energy
    double gc_interface = 1.0;  // used on domains whose region tag is non-zero
    double eta = 0.0;

    double gc_for(int region_tag) const { return region_tag == 0 ? gc : gc_interface; }
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// AT1: 3/8 (phi/l0 + l0 |grad phi|^2); AT2: 1/2 (phi^2/l0 + l0 |grad phi|^2).
double crack_density(double phi, const Vec2& grad, const CrackModel& model);

double surface_energy(std::span<const SmoothingDomain> domains, std::span<const double> phi, const CrackModel& model);

/// Surface energy restricted to domains with a non-zero region tag.
double interface_surface_energy(std::span<const SmoothingDomain> domains, std::span<const double> phi,
                                const CrackModel& model);

double driving_force(double psi0, double phi);

/// eta/2 sum_k ((phibar - phibar_n) / dt)^2 A_k.
double dissipation_increment(std::span<const SmoothingDomain> domains, std::span<const double> phi,
                             std::span<const double> phi_n, double dt, double eta);

struct ActiveSetPartition {
    std::vector<int> active;    // negative increments
    std::vector<int> inactive;
};

ActiveSetPartition active_set_partition(std::span<const double> dphi);

}  // namespace esfem
