#include "mt3d/scene/asset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mt3d/core/errors.hpp"
#include "mt3d/scene/kdtree.hpp"

namespace mt3d {

namespace {
constexpr double kSinglePointFootprint = 0.05;
}

double mean_nearest_neighbor_distance(const std::vector<Eigen::Vector3d>& points) {
    if (points.size() < 2) return 0.0;
    const KdTree tree(points);
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto nn = tree.k_nearest(points[i], 1, i);
        sum += std::sqrt(nn.front().distance_sq);
    }
    return sum / static_cast<double>(points.size());
}

ReferenceAsset ReferenceAsset::create(std::vector<Eigen::Vector3d> points,
                                      std::vector<Eigen::Vector3d> colors, std::string caption,
                                      std::optional<TriangleMesh> mesh) {
    if (points.empty()) throw InvalidInput("reference asset has no points");
    if (colors.size() != points.size()) throw InvalidInput("reference asset: colors/points size mismatch");
    for (const auto& p : points)
        if (!p.allFinite()) throw InvalidInput("reference asset: non-finite point");

    Eigen::Vector3d lo = points.front(), hi = points.front();
    auto grow = [&](const Eigen::Vector3d& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    };
    for (const auto& p : points) grow(p);
    if (mesh)
        for (const auto& v : mesh->vertices) grow(v);
    const Eigen::Vector3d center = 0.5 * (lo + hi);
    double radius = 0.0;
    for (const auto& p : points) radius = std::max(radius, (p - center).norm());
    if (mesh)
        for (const auto& v : mesh->vertices) radius = std::max(radius, (v - center).norm());
    const double inv = radius > 0.0 ? 1.0 / radius : 1.0;

    ReferenceAsset asset;
    asset.points.reserve(points.size());
    for (const auto& p : points) asset.points.push_back((p - center) * inv);
    asset.colors = std::move(colors);
    for (auto& c : asset.colors) c = c.cwiseMax(0.0).cwiseMin(1.0);
    if (mesh) {
        for (auto& v : mesh->vertices) v = (v - center) * inv;
        for (const auto& tri : mesh->triangles)
            for (int idx : tri)
                if (idx < 0 || static_cast<std::size_t>(idx) >= mesh->vertices.size())
                    throw InvalidInput("reference asset: triangle index out of range");
        if (mesh->colors.size() != mesh->vertices.size())
            mesh->colors.assign(mesh->vertices.size(), Eigen::Vector3d::Constant(0.5));
        asset.mesh = std::move(mesh);
    }
    asset.caption = std::move(caption);
    asset.center = Eigen::Vector3d::Zero();
    asset.radius = 1.0;
    const double spacing = mean_nearest_neighbor_distance(asset.points);
    asset.point_footprint = spacing > 0.0 ? kFootprintSpacingFactor * spacing : kSinglePointFootprint;
    return asset;
}

std::vector<std::size_t> farthest_point_sample(const std::vector<Eigen::Vector3d>& points,
                                               std::size_t n) {
    std::vector<std::size_t> picks;
    if (points.empty() || n == 0) return picks;
    n = std::min(n, points.size());
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    std::size_t first = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = (points[i] - centroid).squaredNorm();
        if (d > best) {
            best = d;
            first = i;
        }
    }
    picks.reserve(n);
    picks.push_back(first);
    std::vector<double> min_d(points.size(), std::numeric_limits<double>::infinity());
    std::size_t last = first;
    while (picks.size() < n) {
        std::size_t arg = 0;
        double far = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            min_d[i] = std::min(min_d[i], (points[i] - points[last]).squaredNorm());
            if (min_d[i] > far) {
                far = min_d[i];
                arg = i;
            }
        }
        picks.push_back(arg);
        last = arg;
    }
    return picks;
}

GaussianScene init_from_pointcloud(const ReferenceAsset& asset, std::size_t n) {
    if (asset.points.empty()) throw InvalidInput("init_from_pointcloud: asset has no points");
    if (n < 1) throw ConfigError("init_from_pointcloud: n must be >= 1");
    if (n > asset.points.size())
        throw ConfigError("init_from_pointcloud: requested " + std::to_string(n) +
                          " Gaussians but the asset has " + std::to_string(asset.points.size()) +
                          " points");
    const auto picks = farthest_point_sample(asset.points, n);
    std::vector<Eigen::Vector3d> means;
    means.reserve(picks.size());
    for (auto i : picks) means.push_back(asset.points[i]);
    double spacing = mean_nearest_neighbor_distance(means);
    if (!(spacing > 0.0)) spacing = mean_nearest_neighbor_distance(asset.points);
    if (!(spacing > 0.0)) spacing = kSinglePointFootprint;

    std::vector<Gaussian3D> gaussians;
    gaussians.reserve(picks.size());
    for (auto i : picks)
        gaussians.push_back(Gaussian3D::from_physical(asset.points[i], Eigen::Vector3d::Constant(spacing),
                                                      Eigen::Vector4d(1, 0, 0, 0), kInitialOpacity,
                                                      asset.colors[i]));
    return GaussianScene(std::move(gaussians));
}

namespace {

std::vector<Eigen::Vector3d> read_colors(const PlyElement& v) {
    std::vector<Eigen::Vector3d> colors(v.count, Eigen::Vector3d::Constant(0.5));
    const char* names[3] = {"red", "green", "blue"};
    for (int c = 0; c < 3; ++c) {
        const int idx = v.find(names[c]);
        if (idx < 0) continue;
        const auto type = v.properties[idx].type;
        const double scale = (type == PlyType::kFloat32 || type == PlyType::kFloat64) ? 1.0
                             : type == PlyType::kUInt16                                ? 1.0 / 65535.0
                                                                                       : 1.0 / 255.0;
        for (std::size_t i = 0; i < v.count; ++i) colors[i][c] = v.columns[idx][i] * scale;
    }
    return colors;
}

std::vector<Eigen::Vector3d> read_positions(const PlyElement& v) {
    const auto& xs = v.column("x");
    const auto& ys = v.column("y");
    const auto& zs = v.column("z");
    std::vector<Eigen::Vector3d> out(v.count);
    for (std::size_t i = 0; i < v.count; ++i) out[i] = {xs[i], ys[i], zs[i]};
    return out;
}

}  // namespace

ReferenceAsset load_reference_asset(const std::filesystem::path& path, std::string caption) {
    const PlyData ply = read_ply(path);
    const PlyElement& v = ply.element("vertex");
    if (v.count == 0) throw InvalidInput("malformed PLY: element 'vertex': no points in " + path.string());
    auto points = read_positions(v);
    auto colors = read_colors(v);
    std::optional<TriangleMesh> mesh;
    if (const PlyElement* f = ply.find("face"); f && f->count > 0) {
        int li = f->find("vertex_indices");
        if (li < 0) li = f->find("vertex_index");
        if (li < 0 || !f->properties[li].is_list)
            throw InvalidInput("malformed PLY: element 'face': missing vertex_indices list");
        TriangleMesh m;
        m.vertices = points;
        m.colors = colors;
        for (const auto& poly : f->lists[li]) {
            if (poly.size() < 3) throw InvalidInput("malformed PLY: element 'face': polygon with < 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)  // fan triangulation
                m.triangles.push_back({static_cast<int>(poly[0]), static_cast<int>(poly[k]),
                                       static_cast<int>(poly[k + 1])});
        }
        for (const auto& tri : m.triangles)
            for (int idx : tri)
                if (idx < 0 || static_cast<std::size_t>(idx) >= v.count)
                    throw InvalidInput("malformed PLY: element 'face': vertex index out of range");
        mesh = std::move(m);
    }
    return ReferenceAsset::create(std::move(points), std::move(colors), std::move(caption),
                                  std::move(mesh));
}

void save_reference_asset(const std::filesystem::path& path, const ReferenceAsset& asset,
                          PlyFormat format) {
    PlyData ply;
    ply.format = format;
    if (!asset.caption.empty()) ply.comments.push_back("caption " + asset.caption);
    const bool has_mesh = asset.mesh.has_value();
    const auto& pts = has_mesh ? asset.mesh->vertices : asset.points;
    const auto& cols = has_mesh ? asset.mesh->colors : asset.colors;
    PlyElement v;
    v.name = "vertex";
    v.count = pts.size();
    std::vector<double> col[6];
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int k = 0; k < 3; ++k) col[k].push_back(pts[i][k]);
        for (int k = 0; k < 3; ++k) col[3 + k].push_back(std::round(std::clamp(cols[i][k], 0.0, 1.0) * 255.0));
    }
    v.add_column("x", PlyType::kFloat64, std::move(col[0]));
    v.add_column("y", PlyType::kFloat64, std::move(col[1]));
    v.add_column("z", PlyType::kFloat64, std::move(col[2]));
    v.add_column("red", PlyType::kUInt8, std::move(col[3]));
    v.add_column("green", PlyType::kUInt8, std::move(col[4]));
    v.add_column("blue", PlyType::kUInt8, std::move(col[5]));
    ply.elements.push_back(std::move(v));
    if (has_mesh) {
        PlyElement f;
        f.name = "face";
        f.count = asset.mesh->triangles.size();
        f.properties.push_back({"vertex_indices", PlyType::kInt32, true, PlyType::kUInt8});
        f.columns.emplace_back();
        f.lists.emplace_back();
        for (const auto& t : asset.mesh->triangles) f.lists[0].push_back({t[0], t[1], t[2]});
        ply.elements.push_back(std::move(f));
    }
    write_ply(path, ply);
}

PlyData gaussian_scene_to_ply(const GaussianScene& scene, PlyFormat format) {
    PlyData ply;
    ply.format = format;
    PlyElement v;
    v.name = "vertex";
    v.count = scene.size();
    const char* names[] = {"x", "y", "z", "red", "green", "blue", "opacity",
                           "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
    std::vector<std::vector<double>> cols(14);
    for (const auto& g : scene.gaussians) {
        for (int k = 0; k < 3; ++k) cols[k].push_back(g.mean[k]);
        for (int k = 0; k < 3; ++k) cols[3 + k].push_back(g.color[k]);
        cols[6].push_back(g.opacity_logit);
        for (int k = 0; k < 3; ++k) cols[7 + k].push_back(g.log_scale[k]);
        for (int k = 0; k < 4; ++k) cols[10 + k].push_back(g.rotation[k]);
    }
    for (int k = 0; k < 14; ++k) v.add_column(names[k], PlyType::kFloat64, std::move(cols[k]));
    ply.elements.push_back(std::move(v));
    return ply;
}

GaussianScene gaussian_scene_from_ply(const PlyData& ply) {
    const PlyElement& v = ply.element("vertex");
    const auto& x = v.column("x");
    const auto& y = v.column("y");
    const auto& z = v.column("z");
    const auto& r = v.column("red");
    const auto& g = v.column("green");
    const auto& b = v.column("blue");
    const auto& op = v.column("opacity");
    const std::vector<double>* s[3] = {&v.column("scale_0"), &v.column("scale_1"), &v.column("scale_2")};
    const std::vector<double>* q[4] = {&v.column("rot_0"), &v.column("rot_1"), &v.column("rot_2"),
                                       &v.column("rot_3")};
    std::vector<Gaussian3D> out(v.count);
    for (std::size_t i = 0; i < v.count; ++i) {
        Gaussian3D& gs = out[i];
        gs.mean = {x[i], y[i], z[i]};
        gs.color = {r[i], g[i], b[i]};
        gs.opacity_logit = op[i];
        gs.log_scale = {(*s[0])[i], (*s[1])[i], (*s[2])[i]};
        gs.rotation = {(*q[0])[i], (*q[1])[i], (*q[2])[i], (*q[3])[i]};
        if (!gs.finite())
            throw InvalidInput("malformed PLY: element 'vertex': non-finite Gaussian at row " +
                               std::to_string(i));
    }
    return GaussianScene(std::move(out));
}

void save_gaussian_scene(const std::filesystem::path& path, const GaussianScene& scene,
                         PlyFormat format) {
    write_ply(path, gaussian_scene_to_ply(scene, format));
}

GaussianScene load_gaussian_scene(const std::filesystem::path& path) {
    return gaussian_scene_from_ply(read_ply(path));
}

}  // namespace mt3d
