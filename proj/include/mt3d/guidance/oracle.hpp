#pragma once

#include <Eigen/Core>
#include <optional>

#include "mt3d/core/image.hpp"
#include "mt3d/guidance/schedule.hpp"
#include "mt3d/scene/asset.hpp"
#include "mt3d/scene/camera.hpp"
#include "mt3d/scene/prompt.hpp"

namespace mt3d {

class Rng;

/// Clean image x, unit normal noise and the noisy image alpha_t x + sigma_t noise.
struct DiffusionSample {
    Image clean;
    Image noise;
    int t = 0;
    Image noisy;

    /// Draws noise from rng (row-major, channel-interleaved order).
    static DiffusionSample draw(const Image& clean, int t, const NoiseSchedule& schedule, Rng& rng);
    static DiffusionSample from_noise(const Image& clean, Image noise, int t, const NoiseSchedule& schedule);
};

/// What a score oracle is conditioned on besides the noisy image: the camera
/// the image was taken from and, optionally, the normalized depth map of the
/// reference asset at that camera.
struct GuidanceCondition {
    CameraPose camera;
    std::optional<Image> depth;
};

/// Predicts the noise contained in a noisy image.
class ScoreOracle {
public:
    virtual ~ScoreOracle() = default;
    /// Output has the shape of noisy; deterministic in its inputs.
    virtual Image predict(const Image& noisy, int t, const GuidanceCondition& condition,
                          const PromptEmbedding& prompt) const = 0;
};

/// Depth-consistent reference guidance: eps_hat = (r_t - alpha_t x_ref) / sigma_t
/// with x_ref the reference asset rendered from the condition's camera.
class ReferenceScoreOracle final : public ScoreOracle {
public:
    ReferenceScoreOracle(ReferenceAsset asset, NoiseSchedule schedule,
                         Eigen::Vector3d background = Eigen::Vector3d::Zero());

    Image predict(const Image& noisy, int t, const GuidanceCondition& condition,
                  const PromptEmbedding& prompt) const override;

    /// Same formula with an explicitly supplied reference image.
    Image predict_with_reference(const Image& noisy, int t, const Image& reference) const;

    const ReferenceAsset& asset() const { return asset_; }
    const NoiseSchedule& schedule() const { return schedule_; }

private:
    ReferenceAsset asset_;
    NoiseSchedule schedule_;
    Eigen::Vector3d background_;
};

}  // namespace mt3d
