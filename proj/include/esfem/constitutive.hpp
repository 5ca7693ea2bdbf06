#pragma once

#include "esfem/common.hpp"

namespace esfem {

enum class MaterialVariant { nu_form, lambda_form };

/// Compressible Neo-Hookean solid in plane strain.
///
/// psi0 = mu/2 (tr C + 1 - 3) + mu/beta (J^-beta - 1), with
/// beta = 2 nu / (1 - nu) for nu_form and beta = Lambda / mu for lambda_form.
struct MaterialModel {
    MaterialVariant variant = MaterialVariant::nu_form;
    double mu = 1.0;
    double nu = 0.0;
    double lambda = 0.0;  // lambda_form only
    double k = 1e-8;      // degradation floor

    static MaterialModel from_nu(double mu, double nu, double k = 1e-8);
    static MaterialModel from_lambda(double mu, double lambda, double k = 1e-8);

    double beta() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Undamaged energy, PK2 stress in Voigt form (11, 22, 12) and the Voigt tangent.
struct StressState {
    double psi0 = 0.0;
    Vec3 S = Vec3::Zero();
    Mat3 D = Mat3::Zero();
};

double strain_energy(const Mat2& F, const MaterialModel& m);
Mat2 pk1(const Mat2& F, const MaterialModel& m);
Mat2 pk2(const Mat2& C, const MaterialModel& m);
/// 2 dS/dC in Voigt notation with engineering shear in the third slot.
Mat3 tangent(const Mat2& C, const MaterialModel& m);
StressState stress_state(const Mat2& F, const MaterialModel& m);

/// g(phi) = (1 - phi)^2 + k.
double degradation(double phi, double k);
/// Scales S and D by g(phi); psi0 is left undegraded.
StressState degrade(const StressState& s, double phi, const MaterialModel& m);

Mat2 green_lagrange(const Mat2& C);
Vec3 to_voigt(const Mat2& S);

}  // namespace esfem
