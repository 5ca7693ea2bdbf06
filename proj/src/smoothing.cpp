#include "esfem/smoothing.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace esfem {

Eigen::Matrix<double, 3, 2> element_gradient(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double two_area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (!(two_area > 0.0)) throw MeshError("degenerate or clockwise element in gradient evaluation");
    Eigen::Matrix<double, 3, 2> g;
    g << b.y() - c.y(), c.x() - b.x(),
         c.y() - a.y(), a.x() - c.x(),
         a.y() - b.y(), b.x() - a.x();
    return g / two_area;
}

std::vector<SmoothingDomain> build_smoothing_domains(const TriMesh& mesh) {
    std::vector<SmoothingDomain> out;
    out.reserve(mesh.edges().size());
    const auto& nodes = mesh.nodes();
    for (int k = 0; k < mesh.num_edges(); ++k) {
        const auto& edge = mesh.edges()[k];
        SmoothingDomain d;
        d.edge = k;
        d.nodes[0] = edge.nodes[0];
        d.nodes[1] = edge.nodes[1];
        d.num_support = 2;
        for (int s = 0; s < edge.support_count; ++s) {
            for (int v : mesh.elements()[edge.support[s]].nodes) {
                if (v != edge.nodes[0] && v != edge.nodes[1]) d.nodes[d.num_support++] = v;
            }
        }
        for (int s = 0; s < edge.support_count; ++s) {
            const auto& el = mesh.elements()[edge.support[s]];
            const Vec2& a = nodes[el.nodes[0]].X;
            const Vec2& b = nodes[el.nodes[1]].X;
            const Vec2& c = nodes[el.nodes[2]].X;
            const double w = signed_area(a, b, c) / 3.0;
            const auto g = element_gradient(a, b, c);
            d.area += w;
            for (int i = 0; i < 3; ++i) {
                const int slot = static_cast<int>(std::find(d.nodes.begin(), d.nodes.begin() + d.num_support, el.nodes[i]) -
                                                  d.nodes.begin());
                d.grad[slot] += w * g.row(i).transpose();
                d.shape[slot] += w / 3.0;
            }
        }
        for (int i = 0; i < d.num_support; ++i) {
            d.grad[i] /= d.area;
            d.shape[i] /= d.area;
        }

        std::map<int, int> votes;
        for (int i = 0; i < d.num_support; ++i) ++votes[nodes[d.nodes[i]].region_tag];
        int best = 0;
        for (const auto& [tag, count] : votes) {
            if (count > best) {
                best = count;
                d.region_tag = tag;
            }
        }
        out.push_back(d);
    }
    return out;
}

SmoothedKinematics smoothed_kinematics(const SmoothingDomain& d, std::span<const double> u) {
    SmoothedKinematics k;
    for (int i = 0; i < d.num_support; ++i) {
        const int n = d.nodes[i];
        k.H(0, 0) += u[2 * n] * d.grad[i].x();
        k.H(0, 1) += u[2 * n] * d.grad[i].y();
        k.H(1, 0) += u[2 * n + 1] * d.grad[i].x();
        k.H(1, 1) += u[2 * n + 1] * d.grad[i].y();
    }
    k.F = Mat2::Identity() + k.H;
    k.C = k.F.transpose() * k.F;
    k.J = k.F.determinant();
    return k;
}

SmoothedKinematics smoothed_deformation(const SmoothingDomain& d, std::span<const double> u) {
    auto k = smoothed_kinematics(d, u);
    if (!(k.J > 0.0)) throw InvertedConfiguration(d.edge, k.J);
    return k;
}

double min_jacobian(std::span<const SmoothingDomain> domains, std::span<const double> u) {
    double j = std::numeric_limits<double>::infinity();
    for (const auto& d : domains) j = std::min(j, smoothed_kinematics(d, u).J);
    return j;
}

double smoothed_value(const SmoothingDomain& d, std::span<const double> field) {
    double v = 0.0;
    for (int i = 0; i < d.num_support; ++i) v += d.shape[i] * field[d.nodes[i]];
    return v;
}

Vec2 smoothed_gradient(const SmoothingDomain& d, std::span<const double> field) {
    Vec2 g = Vec2::Zero();
    for (int i = 0; i < d.num_support; ++i) g += d.grad[i] * field[d.nodes[i]];
    return g;
}

}  // namespace esfem
