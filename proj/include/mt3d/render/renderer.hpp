#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "mt3d/core/image.hpp"
#include "mt3d/scene/camera.hpp"
#include "mt3d/scene/gaussian.hpp"

namespace mt3d {

struct RenderSettings {
    /// Upper clamp on per-Gaussian alpha.
    double alpha_max = 0.99;
    /// Footprints are cut where the Mahalanobis distance exceeds this many sigmas.
    double truncation_sigma = 3.0;
    /// Added to the diagonal of every projected covariance, in pixel^2.
    double cov2d_floor = 0.3;
    /// Depth is reported only where accumulated alpha exceeds this value.
    double depth_alpha_threshold = 1e-4;
    /// Compositing of a pixel stops once its transmittance falls below this value.
    double min_transmittance = 1e-4;
};

/// Depth value written where nothing was hit.
inline constexpr double kBackgroundDepth = 0.0;

/// rgb (3 channels), camera-space depth and accumulated alpha (1 channel each).
struct RenderedImage {
    int width = 0;
    int height = 0;
    Image rgb;
    Image depth;
    Image alpha;

    RenderedImage() = default;
    RenderedImage(int w, int h)
        : width(w), height(h), rgb(w, h, 3), depth(w, h, 1, kBackgroundDepth), alpha(w, h, 1) {}

    bool operator==(const RenderedImage&) const = default;
};

/// Screen-space footprint of one Gaussian.
struct ProjectedGaussian {
    bool visible = false;
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    /// Inverse of cov2d as (a, b, c): Q = a dx^2 + 2 b dx dy + c dy^2.
    Eigen::Vector3d conic = Eigen::Vector3d::Zero();
    double depth = 0.0;
    Eigen::Vector3d camera_point = Eigen::Vector3d::Zero();
    /// Half-extent of the truncated ellipse along x and y, in pixels.
    Eigen::Vector2d extent = Eigen::Vector2d::Zero();
};

/// EWA projection: cov2d = J W Sigma W^T J^T + floor * I. Gaussians whose mean
/// is not inside (near, far) come back with visible = false.
ProjectedGaussian project(const Gaussian3D& g, const CameraPose& camera,
                          const RenderSettings& settings = {});

/// Projection, depth order and tile bins of a scene seen from one camera.
/// Building it once lets a forward and a backward pass share the work; the
/// scene must not change in between.
class RenderPlan {
public:
    RenderPlan(const GaussianScene& scene, const CameraPose& camera, const RenderSettings& settings = {});

    const CameraPose& camera() const;
    const RenderSettings& settings() const;
    std::size_t scene_size() const;

    struct Data;
    const Data& data() const { return *data_; }

private:
    std::shared_ptr<const Data> data_;
};

RenderedImage render(const RenderPlan& plan, const Eigen::Vector3d& background);

/// Front-to-back alpha compositing of the scene. Throws RenderError naming the
/// first Gaussian with a non-finite parameter.
RenderedImage render(const GaussianScene& scene, const CameraPose& camera,
                     const Eigen::Vector3d& background, const RenderSettings& settings = {});

/// Same image without tile binning: every pixel walks the full sorted list.
/// Used to check that binning is exact.
RenderedImage render_unbinned(const GaussianScene& scene, const CameraPose& camera,
                              const Eigen::Vector3d& background,
                              const RenderSettings& settings = {});

/// Partial derivatives with respect to the stored (unconstrained) parameters.
struct GaussianGrad {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d::Zero();
    double opacity_logit = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();

    GaussianGrad& operator+=(const GaussianGrad& o);
    GaussianGrad operator*(double s) const;
    bool finite() const;
};

struct RenderGradients {
    std::vector<GaussianGrad> gaussians;
    /// Norm of dL/d(mean2d) in NDC units, per Gaussian.
    std::vector<double> view_grad_norm;
    /// Whether the Gaussian was projected inside the frustum.
    std::vector<char> visible;

    std::size_t size() const { return gaussians.size(); }
    bool finite() const;
};

/// Adjoint of render for L = sum(loss_grad * rgb). loss_grad must be a
/// 3-channel image of the camera's size (ContractError otherwise). The sort
/// order is treated as locally constant and clamped alphas pass no gradient.
RenderGradients render_backward(const GaussianScene& scene, const CameraPose& camera,
                                const Eigen::Vector3d& background, const Image& loss_grad,
                                const RenderSettings& settings = {});

RenderGradients render_backward(const RenderPlan& plan, const GaussianScene& scene,
                                const Eigen::Vector3d& background, const Image& loss_grad);

/// Adds the view-space gradient norms of visible Gaussians to the scene statistics.
void accumulate_view_gradients(GaussianScene& scene, const RenderGradients& grads);

}  // namespace mt3d
