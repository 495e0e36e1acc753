#include "mt3d/scene/toy_assets.hpp"

#include <cmath>

namespace mt3d {

namespace {

std::vector<Eigen::Vector3d> fibonacci_sphere(std::size_t n) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return pts;
}

Eigen::Vector3d normal_color(const Eigen::Vector3d& n) {
    return (0.5 * (n.normalized() + Eigen::Vector3d::Ones())).cwiseMax(0.05).cwiseMin(0.95);
}

}  // namespace

ReferenceAsset make_sphere_asset(std::size_t points) {
    auto pts = fibonacci_sphere(points);
    std::vector<Eigen::Vector3d> colors;
    colors.reserve(pts.size());
    for (const auto& p : pts) colors.push_back(normal_color(p));
    return ReferenceAsset::create(std::move(pts), std::move(colors), "a colorful sphere");
}

ReferenceAsset make_cube_asset(std::size_t side) {
    std::vector<Eigen::Vector3d> pts, colors;
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            for (std::size_t i = 0; i < side; ++i) {
                for (std::size_t j = 0; j < side; ++j) {
                    const double u = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(side);
                    const double v = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(side);
                    Eigen::Vector3d p;
                    p[axis] = sign;
                    p[(axis + 1) % 3] = u;
                    p[(axis + 2) % 3] = v;
                    Eigen::Vector3d n = Eigen::Vector3d::Zero();
                    n[axis] = sign;
                    pts.push_back(p);
                    colors.push_back(normal_color(n));
                }
            }
        }
    }
    return ReferenceAsset::create(std::move(pts), std::move(colors), "a wooden cube box");
}

ReferenceAsset make_snout_asset(bool two_faced, std::size_t points) {
    // Head: sphere of radius 0.6. Snout: ellipsoid with semi-axes (0.45, 0.18, 0.18)
    // centered at x = +0.75 (and -0.75 when two-faced).
    const std::size_t head_n = points * 6 / 10;
    const std::size_t snout_n = points - head_n;
    std::vector<Eigen::Vector3d> pts, colors;
    for (const auto& u : fibonacci_sphere(head_n)) {
        pts.push_back(0.6 * u);
        colors.push_back(Eigen::Vector3d(0.8, 0.6, 0.4));
    }
    const Eigen::Vector3d axes(0.45, 0.18, 0.18);
    auto add_snout = [&](double sign, std::size_t n) {
        for (const auto& u : fibonacci_sphere(n)) {
            const Eigen::Vector3d p = Eigen::Vector3d(sign * 0.75, 0.0, 0.0) + axes.cwiseProduct(u);
            if (p.norm() < 0.6) continue;  // inside the head
            pts.push_back(p);
            colors.push_back(Eigen::Vector3d(0.9, 0.3, 0.3));
        }
    };
    if (two_faced) {
        add_snout(1.0, snout_n / 2);
        add_snout(-1.0, snout_n / 2);
    } else {
        add_snout(1.0, snout_n);
    }
    return ReferenceAsset::create(std::move(pts), std::move(colors),
                                  two_faced ? "a two-faced creature head" : "a creature head with a snout");
}

ReferenceAsset make_cube_mesh_asset() {
    TriangleMesh mesh;
    for (int i = 0; i < 8; ++i)
        mesh.vertices.emplace_back((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    for (const auto& v : mesh.vertices) mesh.colors.push_back(normal_color(v));
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        mesh.triangles.push_back({q[0], q[1], q[2]});
        mesh.triangles.push_back({q[0], q[2], q[3]});
    }
    auto pts = mesh.vertices;
    auto cols = mesh.colors;
    return ReferenceAsset::create(std::move(pts), std::move(cols), "a cube mesh", std::move(mesh));
}

}  // namespace mt3d
