#include "mt3d/eval/sweep.hpp"

#include <cmath>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/parallel.hpp"
#include "mt3d/render/reference.hpp"

namespace mt3d {

void SweepConfig::validate() const {
    if (views < 1) throw ConfigError("sweep: views must be >= 1");
    if (!(radius > 0.0 && std::isfinite(radius))) throw ConfigError("sweep: radius must be positive");
    if (!std::isfinite(elevation) || !std::isfinite(start_azimuth)) throw ConfigError("sweep: angles must be finite");
    if (!(silhouette_alpha >= 0.0 && silhouette_alpha < 1.0))
        throw ConfigError("sweep: silhouette_alpha must lie in [0, 1)");
}

std::vector<CameraPose> SweepConfig::cameras() const {
    validate();
    std::vector<CameraPose> cams;
    cams.reserve(views);
    for (int v = 0; v < views; ++v)
        cams.push_back(orbit_camera(start_azimuth + 2.0 * M_PI * v / views, elevation, radius, intrinsics));
    return cams;
}

Image silhouette_mask(const RenderedImage& render, double alpha_threshold) {
    Image mask(render.alpha.width, render.alpha.height, 1);
    for (std::size_t k = 0; k < mask.data.size(); ++k) mask.data[k] = render.alpha.data[k] > alpha_threshold ? 1.0 : 0.0;
    return mask;
}

namespace {

template <class RenderFn>
ViewSweep run_sweep(const SweepConfig& config, RenderFn&& fn) {
    ViewSweep sweep;
    sweep.cameras = config.cameras();
    sweep.renders.resize(sweep.cameras.size());
    sweep.silhouettes.resize(sweep.cameras.size());
    parallel_for_chunks(static_cast<int>(sweep.cameras.size()), [&](int v) {
        sweep.renders[v] = fn(sweep.cameras[v]);
        sweep.silhouettes[v] = silhouette_mask(sweep.renders[v], config.silhouette_alpha);
    });
    return sweep;
}

}  // namespace

ViewSweep sweep_scene(const GaussianScene& scene, const SweepConfig& config) {
    return run_sweep(config, [&](const CameraPose& cam) { return render(scene, cam, config.background); });
}

ViewSweep sweep_asset(const ReferenceAsset& asset, const SweepConfig& config) {
    return run_sweep(config, [&](const CameraPose& cam) { return render_reference(asset, cam, config.background); });
}

std::optional<double> mask_iou(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.channels != 1) throw ContractError("mask_iou: masks must be 1-channel and equally sized");
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const bool x = a.data[k] > 0.5, y = b.data[k] > 0.5;
        inter += x && y;
        uni += x || y;
    }
    if (uni == 0) return std::nullopt;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

IouReport silhouette_iou(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size()) throw ContractError("silhouette_iou: sweeps differ in view count");
    IouReport report;
    double sum = 0.0;
    int counted = 0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        report.per_view.push_back(mask_iou(a[v], b[v]));
        if (report.per_view.back()) {
            sum += *report.per_view.back();
            ++counted;
        } else {
            report.excluded_views.push_back(static_cast<int>(v));
        }
    }
    if (counted > 0) report.mean = sum / counted;
    return report;
}

IouReport silhouette_iou(const GaussianScene& scene, const ReferenceAsset& asset, const SweepConfig& config) {
    return silhouette_iou(sweep_scene(scene, config).silhouettes, sweep_asset(asset, config).silhouettes);
}

}  // namespace mt3d
