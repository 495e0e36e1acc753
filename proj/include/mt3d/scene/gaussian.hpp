#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace mt3d {

/// Numerically safe sigmoid and its inverse, used for the opacity reparameterization.
double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a unit quaternion stored as (w, x, y, z).
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& unit_q);

/// One anisotropic 3D Gaussian in its unconstrained parameterization.
///
/// Scales live in log space, opacity as a logit, and the rotation as an
/// unnormalized quaternion (w, x, y, z) that is renormalized on read, so any
/// gradient step keeps the constrained quantities valid.
struct Gaussian3D {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
    double opacity_logit = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);

    static Gaussian3D from_physical(const Eigen::Vector3d& mean, const Eigen::Vector3d& scale,
                                    const Eigen::Vector4d& rotation, double opacity,
                                    const Eigen::Vector3d& color);

    Eigen::Vector3d scale() const { return log_scale.array().exp(); }
    double mean_scale() const { return scale().mean(); }
    double opacity() const { return sigmoid(opacity_logit); }
    Eigen::Vector4d unit_rotation() const { return rotation / rotation.norm(); }
    Eigen::Matrix3d rotation_matrix() const { return quaternion_to_matrix(unit_rotation()); }
    /// Sigma = R diag(scale^2) R^T.
    Eigen::Matrix3d covariance() const;

    bool finite() const;
};

/// The optimizable scene: an ordered list of Gaussians plus the densification
/// statistics gathered from backward passes.
struct GaussianScene {
    std::vector<Gaussian3D> gaussians;
    std::int64_t step_counter = 0;
    /// Sum of view-space positional gradient norms since the last reset.
    std::vector<double> view_grad_accum;
    /// Number of backward passes in which the Gaussian was visible.
    std::vector<int> view_grad_count;

    GaussianScene() = default;
    explicit GaussianScene(std::vector<Gaussian3D> g);

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }

    /// Resizes the statistics to match the Gaussian list and zeroes them.
    void reset_accumulators();
    /// Mean view-space gradient norm of Gaussian i over the accumulation window.
    double mean_view_grad(std::size_t i) const;
};

}  // namespace mt3d
