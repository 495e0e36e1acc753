#pragma once

#include <Eigen/Core>
#include <vector>

#include "mt3d/core/image.hpp"
#include "mt3d/guidance/oracle.hpp"
#include "mt3d/render/renderer.hpp"
#include "mt3d/scene/kdtree.hpp"

namespace mt3d {

class NoiseSurrogate;

/// Pixel-space guidance gradient together with the draw that produced it.
struct PixelGuidance {
    /// d loss / d rendered rgb: scale * w(t) * residual / (W H).
    Image grad;
    /// Noise-prediction residual before weighting.
    Image residual;
    int t = 0;
    Image noise;
};

/// Score distillation on an already rendered image: samples t, then noise,
/// forms r_t and weights the residual eps_hat - eps.
PixelGuidance sds_pixel_gradient(const Image& render, const GuidanceCondition& condition,
                                 const ScoreOracle& oracle, const NoiseSchedule& schedule,
                                 const PromptEmbedding& prompt, Rng& rng, double guidance_scale = 1.0);

/// Depth-conditioned control residual
///   eps_phi - lambda * eps_theta - (1 - lambda) * eps,
/// which reduces to the score-distillation residual at lambda = 0 and to
/// eps_phi - eps_theta at lambda = 1. Consumes rng exactly like sds_pixel_gradient.
PixelGuidance vsd_pixel_gradient(const Image& render, const GuidanceCondition& condition,
                                 const ScoreOracle& oracle, const NoiseSurrogate& surrogate,
                                 const NoiseSchedule& schedule, const PromptEmbedding& prompt,
                                 double lora_lambda, Rng& rng, double guidance_scale = 1.0);

/// Renders the scene, applies sds_pixel_gradient and pulls back through the renderer.
RenderGradients sds_gradient(const GaussianScene& scene, const CameraPose& camera,
                             const ScoreOracle& oracle, const NoiseSchedule& schedule,
                             const PromptEmbedding& prompt, Rng& rng,
                             const Eigen::Vector3d& background = Eigen::Vector3d::Zero(),
                             double guidance_scale = 1.0);

/// Renders the reference depth at the camera, applies vsd_pixel_gradient and
/// pulls back through the renderer.
RenderGradients vsd_control_gradient(const GaussianScene& scene, const CameraPose& camera,
                                     const ReferenceAsset& asset, const ScoreOracle& oracle,
                                     const NoiseSurrogate& surrogate, const NoiseSchedule& schedule,
                                     const PromptEmbedding& prompt, double lora_lambda, Rng& rng,
                                     const Eigen::Vector3d& background = Eigen::Vector3d::Zero(),
                                     double guidance_scale = 1.0);

/// Point-cloud prior for explicit noise: with p_t = alpha p + sigma eps_p and
/// eps_hat = (p_t - alpha NN(p_t)) / sigma, returns
/// lambda_p * w_p(t) * (eps_hat - eps_p) per mean.
std::vector<Eigen::Vector3d> pointcloud_prior_residual(const std::vector<Eigen::Vector3d>& means,
                                                       const KdTree& reference, int t,
                                                       const std::vector<Eigen::Vector3d>& noise,
                                                       const NoiseSchedule& schedule, double lambda_p);

/// Draws one t for the whole scene and fresh noise per Gaussian.
/// Throws ConfigError when the reference tree is empty.
std::vector<Eigen::Vector3d> pointcloud_prior_gradient(const GaussianScene& scene, const KdTree& reference,
                                                       const NoiseSchedule& schedule, Rng& rng,
                                                       double lambda_p = 1.0);

/// Half-cosine ramp from 0 to 0.75 over the first 5000 steps, constant afterwards.
double lora_lambda(long long step, double max_value = 0.75, long long ramp_steps = 5000);

}  // namespace mt3d
