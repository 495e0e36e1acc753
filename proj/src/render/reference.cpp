#include "mt3d/render/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mt3d {

namespace {

constexpr double kFarthestLevel = 0.2;

void splat_points(const ReferenceAsset& asset, const CameraPose& cam, RenderedImage& out,
                  Image& zbuf) {
    const Eigen::Matrix3d w = cam.world_to_camera();
    const double f = cam.focal();
    for (std::size_t i = 0; i < asset.points.size(); ++i) {
        const Eigen::Vector3d pc = w * (asset.points[i] - cam.position);
        const double z = pc.z();
        if (!(z > cam.near && z < cam.far)) continue;
        const double u = f * pc.x() / z + cam.cx();
        const double v = f * pc.y() / z + cam.cy();
        const double r = f * asset.point_footprint / z;
        const double r2 = r * r;
        const int x0 = std::max(0, static_cast<int>(std::ceil(u - r - 0.5)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(u + r - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(v - r - 0.5)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(v + r - 0.5)));
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                const double dx = px + 0.5 - u, dy = py + 0.5 - v;
                if (dx * dx + dy * dy > r2) continue;
                double& zb = zbuf.at(px, py);
                if (!(z < zb)) continue;
                zb = z;
                for (int k = 0; k < 3; ++k) out.rgb.at(px, py, k) = asset.colors[i][k];
                out.depth.at(px, py) = z;
                out.alpha.at(px, py) = 1.0;
            }
        }
    }
}

void rasterize_mesh(const TriangleMesh& mesh, const CameraPose& cam, RenderedImage& out, Image& zbuf) {
    const Eigen::Matrix3d w = cam.world_to_camera();
    const double f = cam.focal();
    std::vector<Eigen::Vector3d> screen(mesh.vertices.size());  // (u, v, z)
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Eigen::Vector3d pc = w * (mesh.vertices[i] - cam.position);
        screen[i] = {f * pc.x() / pc.z() + cam.cx(), f * pc.y() / pc.z() + cam.cy(), pc.z()};
    }
    for (const auto& tri : mesh.triangles) {
        const Eigen::Vector3d& a = screen[tri[0]];
        const Eigen::Vector3d& b = screen[tri[1]];
        const Eigen::Vector3d& c = screen[tri[2]];
        // Triangles crossing the near plane are dropped rather than clipped.
        if (!(a.z() > cam.near && b.z() > cam.near && c.z() > cam.near)) continue;
        const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        if (area == 0.0) continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                const double sx = px + 0.5, sy = py + 0.5;
                const double w0 = ((b.x() - sx) * (c.y() - sy) - (b.y() - sy) * (c.x() - sx)) / area;
                const double w1 = ((c.x() - sx) * (a.y() - sy) - (c.y() - sy) * (a.x() - sx)) / area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double iz = w0 / a.z() + w1 / b.z() + w2 / c.z();
                const double z = 1.0 / iz;
                double& zb = zbuf.at(px, py);
                if (!(z < zb)) continue;
                zb = z;
                const Eigen::Vector3d col =
                    z * (w0 / a.z() * mesh.colors[tri[0]] + w1 / b.z() * mesh.colors[tri[1]] +
                         w2 / c.z() * mesh.colors[tri[2]]);
                for (int k = 0; k < 3; ++k) out.rgb.at(px, py, k) = col[k];
                out.depth.at(px, py) = z;
                out.alpha.at(px, py) = 1.0;
            }
        }
    }
}

}  // namespace

RenderedImage render_reference(const ReferenceAsset& asset, const CameraPose& camera,
                               const Eigen::Vector3d& background) {
    camera.validate();
    RenderedImage out(camera.width, camera.height);
    for (int py = 0; py < camera.height; ++py)
        for (int px = 0; px < camera.width; ++px)
            for (int k = 0; k < 3; ++k) out.rgb.at(px, py, k) = background[k];
    Image zbuf(camera.width, camera.height, 1, std::numeric_limits<double>::infinity());
    if (asset.mesh) rasterize_mesh(*asset.mesh, camera, out, zbuf);
    else splat_points(asset, camera, out, zbuf);
    return out;
}

Image normalize_depth(const Image& depth) {
    Image out(depth.width, depth.height, 1, 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double d : depth.data) {
        if (d == kBackgroundDepth) continue;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    if (!(hi >= lo)) return out;
    const double span = hi - lo;
    for (std::size_t i = 0; i < depth.data.size(); ++i) {
        const double d = depth.data[i];
        if (d == kBackgroundDepth) continue;
        const double t = span > 0.0 ? (d - lo) / span : 0.0;
        out.data[i] = 1.0 - (1.0 - kFarthestLevel) * t;
    }
    return out;
}

}  // namespace mt3d
