#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>

#include "mt3d/guidance/schedule.hpp"
#include "mt3d/moments/dgm.hpp"
#include "mt3d/render/renderer.hpp"
#include "mt3d/scene/camera.hpp"

namespace mt3d {

/// Adam learning rates per parameter group. The mean rate decays
/// exponentially from mean to mean_final over the whole run.
struct LearningRates {
    double mean = 1.6e-4;
    double mean_final = 1.6e-6;
    double scale = 5e-3;
    double rotation = 1e-3;
    double opacity = 5e-2;
    double color = 2.5e-3;
};

/// Step counts, density control and loss weights of the two training stages.
struct StageConfig {
    int geometry_steps = 15000;
    int texture_steps = 15000;
    LearningRates lr;
    int densify_interval = 500;
    double densify_threshold = 0.02;
    int compact_interval = 1000;
    int compact_neighbors = 3;
    int prune_interval = 500;
    double prune_opacity = 0.05;
    double prune_radius = 0.05;
    int prune_min_survivors = 16;
    double split_scale_divisor = 1.6;
    double lambda_p = 1.0;
    double lambda_m = 100.0;

    /// Throws ConfigError for negative step counts, non-positive intervals or thresholds.
    void validate() const;
    int total_steps() const { return geometry_steps + texture_steps; }
};

/// Guidance, camera sampling and rendering settings shared by both stages.
struct GuidanceConfig {
    NoiseSchedule schedule;
    double guidance_scale = 1.0;
    double lora_max = 0.75;
    int lora_ramp_steps = 5000;
    double surrogate_lr = 1e-3;
    /// Radians.
    Range elevation{-0.5235987755982988, 1.0471975511965976};
    Range azimuth{-3.141592653589793, 3.141592653589793};
    Range radius{3.0, 3.5};
    CameraIntrinsics intrinsics;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    RenderSettings render;
    DgmConfig dgm;
    std::size_t initial_gaussians = 8192;
    /// Smoothing factor of the reported loss moving averages.
    double loss_ema = 0.05;

    void validate() const;
};

struct TrainConfig {
    StageConfig stage;
    GuidanceConfig guidance;
    std::uint64_t seed = 0;

    void validate() const {
        stage.validate();
        guidance.validate();
    }
};

}  // namespace mt3d
