#include "mt3d/guidance/oracle.hpp"

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"
#include "mt3d/render/reference.hpp"

namespace mt3d {

DiffusionSample DiffusionSample::draw(const Image& clean, int t, const NoiseSchedule& schedule, Rng& rng) {
    Image noise(clean.width, clean.height, clean.channels);
    rng.fill_normal(noise.data);
    return from_noise(clean, std::move(noise), t, schedule);
}

DiffusionSample DiffusionSample::from_noise(const Image& clean, Image noise, int t, const NoiseSchedule& schedule) {
    if (!noise.same_shape(clean)) throw ContractError("diffusion sample: noise shape differs from image");
    DiffusionSample s;
    s.clean = clean;
    s.t = t;
    s.noisy = Image(clean.width, clean.height, clean.channels);
    const double a = schedule.alpha(t), sg = schedule.sigma(t);
    for (std::size_t k = 0; k < clean.data.size(); ++k) s.noisy.data[k] = a * clean.data[k] + sg * noise.data[k];
    s.noise = std::move(noise);
    return s;
}

ReferenceScoreOracle::ReferenceScoreOracle(ReferenceAsset asset, NoiseSchedule schedule,
                                           Eigen::Vector3d background)
    : asset_(std::move(asset)), schedule_(schedule), background_(background) {
    if (asset_.points.empty()) throw InvalidInput("reference oracle: asset has no points");
}

Image ReferenceScoreOracle::predict(const Image& noisy, int t, const GuidanceCondition& condition,
                                    const PromptEmbedding& prompt) const {
    const RenderedImage ref = render_reference(asset_, condition.camera, background_);
    return predict_with_reference(noisy, t, ref.rgb);
}

Image ReferenceScoreOracle::predict_with_reference(const Image& noisy, int t, const Image& reference) const {
    if (!noisy.same_shape(reference)) throw ContractError("reference oracle: image shape differs from reference");
    const double a = schedule_.alpha(t), sg = schedule_.sigma(t);
    if (!(sg > 0.0)) throw ConfigError("reference oracle: timestep " + std::to_string(t) + " has sigma = 0");
    Image eps(noisy.width, noisy.height, noisy.channels);
    for (std::size_t k = 0; k < eps.data.size(); ++k) eps.data[k] = (noisy.data[k] - a * reference.data[k]) / sg;
    return eps;
}

}  // namespace mt3d
