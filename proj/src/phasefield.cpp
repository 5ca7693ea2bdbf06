#include "esfem/phasefield.hpp"

namespace esfem {

void CrackModel::validate() const {
    if (!(l0 > 0.0)) throw ConfigError("crack.l0 must be positive");
    if (!(gc > 0.0)) throw ConfigError("crack.gc must be positive");
    if (!(gc_interface > 0.0)) throw ConfigError("crack.gc_interface must be positive");
    if (!(eta >= 0.0)) throw ConfigError("crack.eta must be non-negative");
}

double crack_density(double phi, const Vec2& grad, const CrackModel& model) {
    const double g2 = grad.squaredNorm();
    if (model.variant == CrackVariant::AT1) return 3.0 / 8.0 * (phi / model.l0 + model.l0 * g2);
    return 0.5 * (phi * phi / model.l0 + model.l0 * g2);
}

double surface_energy(std::span<const SmoothingDomain> domains, std::span<const double> phi, const CrackModel& model) {
    double sum = 0.0;
    for (const auto& d : domains) {
        sum += model.gc_for(d.region_tag) * crack_density(smoothed_value(d, phi), smoothed_gradient(d, phi), model) * d.area;
    }
    return sum;
}

double interface_surface_energy(std::span<const SmoothingDomain> domains, std::span<const double> phi,
                                const CrackModel& model) {
    double sum = 0.0;
    for (const auto& d : domains) {
        if (d.region_tag == 0) continue;
        sum += model.gc_for(d.region_tag) * crack_density(smoothed_value(d, phi), smoothed_gradient(d, phi), model) * d.area;
    }
    return sum;
}

double driving_force(double psi0, double phi) { return 2.0 * (1.0 - phi) * psi0; }

double dissipation_increment(std::span<const SmoothingDomain> domains, std::span<const double> phi,
                             std::span<const double> phi_n, double dt, double eta) {
    if (eta == 0.0) return 0.0;
    if (!(dt > 0.0)) throw NumericalError("dissipation_increment requires dt > 0");
    double sum = 0.0;
    for (const auto& d : domains) {
        const double rate = (smoothed_value(d, phi) - smoothed_value(d, phi_n)) / dt;
        sum += rate * rate * d.area;
    }
    return 0.5 * eta * sum;
}

ActiveSetPartition active_set_partition(std::span<const double> dphi) {
    ActiveSetPartition p;
    for (int i = 0; i < static_cast<int>(dphi.size()); ++i) (dphi[i] < 0.0 ? p.active : p.inactive).push_back(i);
    return p;
}

}  // namespace esfem
