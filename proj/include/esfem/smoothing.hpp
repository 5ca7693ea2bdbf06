#pragma once

#include "esfem/common.hpp"
#include "esfem/mesh.hpp"

#include <array>
#include <span>
#include <vector>

namespace esfem {

/// Edge-based smoothing domain: the edge plus one third of each supporting triangle.
struct SmoothingDomain {
    int edge = -1;
    double area = 0.0;
    int num_support = 0;  // 3 for a boundary edge, 4 for an interior edge
    // Edge endpoints first, then the opposite vertex of each support.
    std::array<int, 4> nodes{-1, -1, -1, -1};
    std::array<Vec2, 4> grad{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};  // smoothed gradient row of each support node (1/mm)
    std::array<double, 4> shape{}; // smoothed shape value of each support node, sums to 1
    int region_tag = 0;
};

struct SmoothedKinematics {
    Mat2 H = Mat2::Zero();
    Mat2 F = Mat2::Identity();
    Mat2 C = Mat2::Identity();
    double J = 1.0;
};

/// Shape-function gradients of a T3 element, one row per vertex.
/// Throws MeshError for a degenerate or clockwise element.
Eigen::Matrix<double, 3, 2> element_gradient(const Vec2& a, const Vec2& b, const Vec2& c);

std::vector<SmoothingDomain> build_smoothing_domains(const TriMesh& mesh);

/// u holds (u_x, u_y) per node. Does not check admissibility.
SmoothedKinematics smoothed_kinematics(const SmoothingDomain& d, std::span<const double> u);

/// As smoothed_kinematics, throwing InvertedConfiguration when J <= 0.
SmoothedKinematics smoothed_deformation(const SmoothingDomain& d, std::span<const double> u);

/// Smallest J over all domains.
double min_jacobian(std::span<const SmoothingDomain> domains, std::span<const double> u);

double smoothed_value(const SmoothingDomain& d, std::span<const double> field);
Vec2 smoothed_gradient(const SmoothingDomain& d, std::span<const double> field);

}  // namespace esfem
