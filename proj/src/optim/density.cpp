#include "mt3d/optim/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mt3d/core/rng.hpp"
#include "mt3d/scene/kdtree.hpp"

namespace mt3d {

Provenance densify_split(GaussianScene& scene, double threshold, Rng& rng, double scale_divisor) {
    if (scene.view_grad_accum.size() != scene.size()) scene.reset_accumulators();
    std::vector<Gaussian3D> out;
    Provenance origin;
    out.reserve(scene.size());
    const double log_div = std::log(scale_divisor);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian3D& g = scene.gaussians[i];
        if (!(scene.mean_view_grad(i) > threshold)) {
            out.push_back(g);
            origin.push_back(static_cast<long>(i));
            continue;
        }
        const Eigen::Matrix3d m = g.rotation_matrix() * g.scale().asDiagonal();
        for (int c = 0; c < 2; ++c) {
            Eigen::Vector3d z;
            for (int k = 0; k < 3; ++k) z[k] = rng.normal();
            Gaussian3D child = g;
            child.mean = g.mean + m * z;
            child.log_scale = g.log_scale.array() - log_div;
            out.push_back(child);
            origin.push_back(-1);
        }
    }
    scene.gaussians = std::move(out);
    scene.reset_accumulators();
    return origin;
}

Provenance densify_compact(GaussianScene& scene, int neighbors) {
    const std::size_t n = scene.size();
    Provenance origin(n);
    std::iota(origin.begin(), origin.end(), 0L);
    if (n < 2 || neighbors < 1) {
        scene.reset_accumulators();
        return origin;
    }
    std::vector<Eigen::Vector3d> means(n);
    std::vector<double> radius(n);
    for (std::size_t i = 0; i < n; ++i) {
        means[i] = scene.gaussians[i].mean;
        radius[i] = scene.gaussians[i].mean_scale();
    }
    const KdTree tree(means);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<Gaussian3D> added;
    for (std::size_t i = 0; i < n; ++i) {
        for (const Neighbor& nb : tree.k_nearest(means[i], static_cast<std::size_t>(neighbors), i)) {
            const std::size_t j = nb.index;
            if (!seen.insert({std::min(i, j), std::max(i, j)}).second) continue;
            const Eigen::Vector3d delta = means[j] - means[i];
            const double d = delta.norm();
            const double gap = d - radius[i] - radius[j];
            if (!(gap > 0.0)) continue;
            const Eigen::Vector3d dir = delta / d;
            const Gaussian3D& a = scene.gaussians[i];
            const Gaussian3D& b = scene.gaussians[j];
            const double r = 0.5 * gap;
            added.push_back(Gaussian3D::from_physical(means[i] + dir * (radius[i] + r), Eigen::Vector3d::Constant(r),
                                                      Eigen::Vector4d(1.0, 0.0, 0.0, 0.0),
                                                      0.5 * (a.opacity() + b.opacity()), 0.5 * (a.color + b.color)));
        }
    }
    for (auto& g : added) {
        scene.gaussians.push_back(std::move(g));
        origin.push_back(-1);
    }
    scene.reset_accumulators();
    return origin;
}

Provenance prune(GaussianScene& scene, double min_opacity, double max_radius, std::size_t min_survivors) {
    const std::size_t n = scene.size();
    std::vector<char> keep(n, 0);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Gaussian3D& g = scene.gaussians[i];
        keep[i] = !(g.opacity() < min_opacity || g.mean_scale() > max_radius);
        kept += keep[i];
    }
    const std::size_t floor = std::min(min_survivors, n);
    if (kept < floor) {
        std::vector<std::size_t> removed;
        for (std::size_t i = 0; i < n; ++i)
            if (!keep[i]) removed.push_back(i);
        std::stable_sort(removed.begin(), removed.end(), [&](std::size_t a, std::size_t b) {
            return scene.gaussians[a].opacity_logit > scene.gaussians[b].opacity_logit;
        });
        for (std::size_t k = 0; kept < floor; ++k, ++kept) keep[removed[k]] = 1;
    }
    std::vector<Gaussian3D> out;
    Provenance origin;
    out.reserve(kept);
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        out.push_back(scene.gaussians[i]);
        origin.push_back(static_cast<long>(i));
    }
    scene.gaussians = std::move(out);
    scene.reset_accumulators();
    return origin;
}

}  // namespace mt3d
