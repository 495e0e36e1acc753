#include "mt3d/scene/gaussian.hpp"

#include <cmath>

namespace mt3d {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Gaussian3D Gaussian3D::from_physical(const Eigen::Vector3d& mean, const Eigen::Vector3d& scale,
                                     const Eigen::Vector4d& rotation, double opacity,
                                     const Eigen::Vector3d& color) {
    Gaussian3D g;
    g.mean = mean;
    g.log_scale = scale.array().log();
    g.rotation = rotation;
    g.opacity_logit = logit(opacity);
    g.color = color;
    return g;
}

Eigen::Matrix3d Gaussian3D::covariance() const {
    const Eigen::Matrix3d r = rotation_matrix();
    const Eigen::Vector3d s = scale();
    return r * s.array().square().matrix().asDiagonal() * r.transpose();
}

bool Gaussian3D::finite() const {
    return mean.allFinite() && log_scale.allFinite() && rotation.allFinite() &&
           std::isfinite(opacity_logit) && color.allFinite() && rotation.norm() > 0.0;
}

GaussianScene::GaussianScene(std::vector<Gaussian3D> g) : gaussians(std::move(g)) {
    reset_accumulators();
}

void GaussianScene::reset_accumulators() {
    view_grad_accum.assign(gaussians.size(), 0.0);
    view_grad_count.assign(gaussians.size(), 0);
}

double GaussianScene::mean_view_grad(std::size_t i) const {
    if (i >= view_grad_count.size() || view_grad_count[i] == 0) return 0.0;
    return view_grad_accum[i] / view_grad_count[i];
}

}  // namespace mt3d
