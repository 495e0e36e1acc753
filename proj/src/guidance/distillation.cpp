#include "mt3d/guidance/distillation.hpp"

#include <algorithm>
#include <cmath>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"
#include "mt3d/guidance/surrogate.hpp"
#include "mt3d/render/reference.hpp"

namespace mt3d {

namespace {

PixelGuidance weight_residual(PixelGuidance g, const NoiseSchedule& schedule, double guidance_scale) {
    const double w = guidance_scale * schedule.weight(g.t) / static_cast<double>(g.residual.pixel_count());
    g.grad = Image(g.residual.width, g.residual.height, g.residual.channels);
    for (std::size_t k = 0; k < g.grad.data.size(); ++k) g.grad.data[k] = w * g.residual.data[k];
    return g;
}

}  // namespace

PixelGuidance sds_pixel_gradient(const Image& render, const GuidanceCondition& condition,
                                 const ScoreOracle& oracle, const NoiseSchedule& schedule,
                                 const PromptEmbedding& prompt, Rng& rng, double guidance_scale) {
    const int t = schedule.sample_timestep(rng);
    DiffusionSample s = DiffusionSample::draw(render, t, schedule, rng);
    const Image eps_hat = oracle.predict(s.noisy, t, condition, prompt);
    PixelGuidance g;
    g.t = t;
    g.residual = Image(render.width, render.height, render.channels);
    for (std::size_t k = 0; k < eps_hat.data.size(); ++k) g.residual.data[k] = eps_hat.data[k] - s.noise.data[k];
    g.noise = std::move(s.noise);
    return weight_residual(std::move(g), schedule, guidance_scale);
}

PixelGuidance vsd_pixel_gradient(const Image& render, const GuidanceCondition& condition,
                                 const ScoreOracle& oracle, const NoiseSurrogate& surrogate,
                                 const NoiseSchedule& schedule, const PromptEmbedding& prompt,
                                 double lora_lambda, Rng& rng, double guidance_scale) {
    if (!(lora_lambda >= 0.0 && lora_lambda <= 1.0)) throw ConfigError("lora lambda must lie in [0, 1]");
    const int t = schedule.sample_timestep(rng);
    DiffusionSample s = DiffusionSample::draw(render, t, schedule, rng);
    const Image eps_phi = oracle.predict(s.noisy, t, condition, prompt);
    PixelGuidance g;
    g.t = t;
    g.residual = Image(render.width, render.height, render.channels);
    if (lora_lambda == 0.0) {
        for (std::size_t k = 0; k < eps_phi.data.size(); ++k) g.residual.data[k] = eps_phi.data[k] - s.noise.data[k];
    } else {
        const Image eps_theta = surrogate.predict(s.noisy, t, condition, prompt);
        const double keep = 1.0 - lora_lambda;
        for (std::size_t k = 0; k < eps_phi.data.size(); ++k)
            g.residual.data[k] = eps_phi.data[k] - lora_lambda * eps_theta.data[k] - keep * s.noise.data[k];
    }
    g.noise = std::move(s.noise);
    return weight_residual(std::move(g), schedule, guidance_scale);
}

RenderGradients sds_gradient(const GaussianScene& scene, const CameraPose& camera, const ScoreOracle& oracle,
                             const NoiseSchedule& schedule, const PromptEmbedding& prompt, Rng& rng,
                             const Eigen::Vector3d& background, double guidance_scale) {
    const RenderedImage r = render(scene, camera, background);
    const GuidanceCondition condition{camera, std::nullopt};
    const PixelGuidance g = sds_pixel_gradient(r.rgb, condition, oracle, schedule, prompt, rng, guidance_scale);
    return render_backward(scene, camera, background, g.grad);
}

RenderGradients vsd_control_gradient(const GaussianScene& scene, const CameraPose& camera,
                                     const ReferenceAsset& asset, const ScoreOracle& oracle,
                                     const NoiseSurrogate& surrogate, const NoiseSchedule& schedule,
                                     const PromptEmbedding& prompt, double lora_lambda, Rng& rng,
                                     const Eigen::Vector3d& background, double guidance_scale) {
    const RenderedImage r = render(scene, camera, background);
    const RenderedImage ref = render_reference(asset, camera, background);
    const GuidanceCondition condition{camera, normalize_depth(ref.depth)};
    const PixelGuidance g = vsd_pixel_gradient(r.rgb, condition, oracle, surrogate, schedule, prompt,
                                               lora_lambda, rng, guidance_scale);
    return render_backward(scene, camera, background, g.grad);
}

std::vector<Eigen::Vector3d> pointcloud_prior_residual(const std::vector<Eigen::Vector3d>& means,
                                                       const KdTree& reference, int t,
                                                       const std::vector<Eigen::Vector3d>& noise,
                                                       const NoiseSchedule& schedule, double lambda_p) {
    if (reference.size() == 0) throw ConfigError("point prior: reference point cloud is empty");
    if (noise.size() != means.size()) throw ContractError("point prior: noise count differs from means");
    const double a = schedule.alpha(t), sg = schedule.sigma(t);
    if (!(sg > 0.0)) throw ConfigError("point prior: timestep has sigma = 0");
    const double w = lambda_p * schedule.prior_weight(t);
    std::vector<Eigen::Vector3d> out(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        const Eigen::Vector3d pt = a * means[i] + sg * noise[i];
        const Eigen::Vector3d& nn = reference.points()[reference.nearest(pt).index];
        const Eigen::Vector3d eps_hat = (pt - a * nn) / sg;
        out[i] = w * (eps_hat - noise[i]);
    }
    return out;
}

std::vector<Eigen::Vector3d> pointcloud_prior_gradient(const GaussianScene& scene, const KdTree& reference,
                                                       const NoiseSchedule& schedule, Rng& rng, double lambda_p) {
    if (reference.size() == 0) throw ConfigError("point prior: reference point cloud is empty");
    const int t = schedule.sample_timestep(rng);
    std::vector<Eigen::Vector3d> means(scene.size()), noise(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        means[i] = scene.gaussians[i].mean;
        noise[i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    }
    return pointcloud_prior_residual(means, reference, t, noise, schedule, lambda_p);
}

double lora_lambda(long long step, double max_value, long long ramp_steps) {
    if (step < 0) throw ConfigError("lora_lambda: step must be >= 0");
    if (ramp_steps <= 0) return max_value;
    const double u = static_cast<double>(std::min(step, ramp_steps)) / static_cast<double>(ramp_steps);
    return max_value * (1.0 - std::cos(M_PI * u)) / 2.0;
}

}  // namespace mt3d
