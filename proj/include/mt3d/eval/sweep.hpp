#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "mt3d/core/image.hpp"
#include "mt3d/render/renderer.hpp"
#include "mt3d/scene/asset.hpp"
#include "mt3d/scene/camera.hpp"

namespace mt3d {

/// Turntable of evenly spaced azimuths at one elevation and radius.
struct SweepConfig {
    int views = 8;
    /// Radians.
    double elevation = 0.2617993877991494;  // 15 degrees
    double start_azimuth = 0.0;
    double radius = 3.0;
    CameraIntrinsics intrinsics{0.6981317007977318, 128, 128, 0.1, 10.0};
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    /// A pixel belongs to the silhouette when its alpha exceeds this value.
    double silhouette_alpha = 0.5;

    void validate() const;
    /// Camera v sits at azimuth start_azimuth + 2 pi v / views.
    std::vector<CameraPose> cameras() const;
};

struct ViewSweep {
    std::vector<CameraPose> cameras;
    std::vector<RenderedImage> renders;
    /// 1-channel masks with values 0 and 1.
    std::vector<Image> silhouettes;
};

Image silhouette_mask(const RenderedImage& render, double alpha_threshold = 0.5);

ViewSweep sweep_scene(const GaussianScene& scene, const SweepConfig& config = {});
ViewSweep sweep_asset(const ReferenceAsset& asset, const SweepConfig& config = {});

struct IouReport {
    /// Empty for views where both masks are empty.
    std::vector<std::optional<double>> per_view;
    std::vector<int> excluded_views;
    /// Mean over the views that were not excluded; nullopt when all were.
    std::optional<double> mean;
};

/// Intersection over union of two masks; nullopt when both are empty.
std::optional<double> mask_iou(const Image& a, const Image& b);
/// Throws ContractError when the sweeps differ in view count or mask shape.
IouReport silhouette_iou(const std::vector<Image>& a, const std::vector<Image>& b);
IouReport silhouette_iou(const GaussianScene& scene, const ReferenceAsset& asset, const SweepConfig& config = {});

}  // namespace mt3d
