#include "esfem/constitutive.hpp"

#include <cmath>
#include <string>

namespace esfem {

namespace {

void require_positive_det(double j, const char* what) {
    if (!(j > 0.0)) throw NumericalError(std::string(what) + ": non-positive determinant " + std::to_string(j));
}

// (i, j) index pair of each Voigt slot.
constexpr int kVoigt[3][2] = {{0, 0}, {1, 1}, {0, 1}};

}  // namespace

MaterialModel MaterialModel::from_nu(double mu, double nu, double k) {
    MaterialModel m;
    m.variant = MaterialVariant::nu_form;
    m.mu = mu;
    m.nu = nu;
    m.k = k;
    return m;
}

MaterialModel MaterialModel::from_lambda(double mu, double lambda, double k) {
    MaterialModel m;
    m.variant = MaterialVariant::lambda_form;
    m.mu = mu;
    m.lambda = lambda;
    m.k = k;
    return m;
}

double MaterialModel::beta() const {
    return variant == MaterialVariant::nu_form ? 2.0 * nu / (1.0 - nu) : lambda / mu;
}

void MaterialModel::validate() const {
    if (!(mu > 0.0)) throw ConfigError("material.mu must be positive");
    if (variant == MaterialVariant::nu_form) {
        if (!(nu >= 0.0 && nu < 0.5)) throw ConfigError("material.nu must lie in [0, 0.5)");
    } else if (!(lambda > 0.0)) {
        throw ConfigError("material.lambda must be positive");
    }
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("material.k must lie in (0, 1)");
}

double strain_energy(const Mat2& F, const MaterialModel& m) {
    const double J = F.determinant();
    require_positive_det(J, "strain_energy");
    const double beta = m.beta();
    const double iso = 0.5 * m.mu * (F.squaredNorm() + 1.0 - 3.0);
    if (beta == 0.0) return iso - m.mu * std::log(J);
    return iso + m.mu / beta * (std::pow(J, -beta) - 1.0);
}

Mat2 pk1(const Mat2& F, const MaterialModel& m) {
    const double J = F.determinant();
    require_positive_det(J, "pk1");
    return m.mu * (F - std::pow(J, -m.beta()) * F.inverse().transpose());
}

Mat2 pk2(const Mat2& C, const MaterialModel& m) {
    const double detC = C.determinant();
    require_positive_det(detC, "pk2");
    const double J = std::sqrt(detC);
    return m.mu * (Mat2::Identity() - std::pow(J, -m.beta()) * C.inverse());
}

Mat3 tangent(const Mat2& C, const MaterialModel& m) {
    const double detC = C.determinant();
    require_positive_det(detC, "tangent");
    const double beta = m.beta();
    const double scale = m.mu * std::pow(std::sqrt(detC), -beta);
    const Mat2 Ci = C.inverse();
    Mat3 D;
    for (int a = 0; a < 3; ++a) {
        const int i = kVoigt[a][0], j = kVoigt[a][1];
        for (int b = 0; b < 3; ++b) {
            const int k = kVoigt[b][0], l = kVoigt[b][1];
            D(a, b) = scale * (Ci(i, k) * Ci(j, l) + Ci(i, l) * Ci(j, k) + beta * Ci(i, j) * Ci(k, l));
        }
    }
    return D;
}

StressState stress_state(const Mat2& F, const MaterialModel& m) {
    const Mat2 C = F.transpose() * F;
    StressState s;
    s.psi0 = strain_energy(F, m);
    s.S = to_voigt(pk2(C, m));
    s.D = tangent(C, m);
    return s;
}

double degradation(double phi, double k) { return (1.0 - phi) * (1.0 - phi) + k; }

StressState degrade(const StressState& s, double phi, const MaterialModel& m) {
    if (phi < -1e-12 || phi > 1.0 + 1e-12) {
        throw NumericalError("phase field value " + std::to_string(phi) + " outside [0, 1]");
    }
    const double g = degradation(phi, m.k);
    return {s.psi0, g * s.S, g * s.D};
}

Mat2 green_lagrange(const Mat2& C) { return 0.5 * (C - Mat2::Identity()); }

Vec3 to_voigt(const Mat2& S) { return {S(0, 0), S(1, 1), S(0, 1)}; }

}  // namespace esfem
