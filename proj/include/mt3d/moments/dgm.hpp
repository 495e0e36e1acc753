#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mt3d/core/image.hpp"
#include "mt3d/render/renderer.hpp"

namespace mt3d {

/// Layout of the multi-scale moment feature stack.
struct DgmConfig {
    /// Pyramid levels; level 0 is full resolution, each next level halves it.
    int levels = 3;
    /// Maximum moment order per window.
    int order = 4;
    /// Windows per axis at every level; neighbours overlap by 50%.
    int grid = 4;
    /// Windows whose mass falls below this emit all-zero features.
    double degenerate_mass = 1e-8;

    void validate() const;
    /// One whole-image window plus grid x grid overlapping windows.
    int windows_per_level() const { return grid * grid + 1; }
    int features_per_window() const;
    std::size_t feature_length() const;
};

/// Flattened features ordered level by level; within a level the whole-image
/// window comes first, then the grid windows in row-major order. Each window
/// holds its normalized central moments in MomentVector order.
struct MomentFeatureStack {
    int levels = 0;
    int order = 0;
    int grid_x = 0;
    int grid_y = 0;
    std::vector<double> values;

    bool operator==(const MomentFeatureStack&) const = default;
};

/// Rec. 601 luma of an rgb image.
Image luminance(const Image& rgb);
/// 2x2 box downsampling; an odd trailing row or column is dropped.
Image downsample2(const Image& gray);

/// Throws ConfigError when the coarsest level is smaller than grid + 1 pixels.
MomentFeatureStack dgm_features(const Image& rgb, const DgmConfig& config = {});

/// Pulls a gradient on the feature vector back to the rgb pixels.
Image dgm_backward(const Image& rgb, const std::vector<double>& feature_grad,
                   const DgmConfig& config = {});

struct MomentLoss {
    double loss = 0.0;
    /// d loss / d render rgb.
    Image grad;
};

/// L2 distance between the stacks of render and reference with its gradient
/// with respect to the render. The gradient is zero when the stacks coincide.
MomentLoss moment_loss(const Image& render, const Image& reference, const DgmConfig& config = {});
MomentLoss moment_loss(const RenderedImage& render, const RenderedImage& reference,
                       const DgmConfig& config = {});

void write_feature_stack(std::ostream& out, const MomentFeatureStack& stack);
MomentFeatureStack read_feature_stack(std::istream& in);
void save_feature_stack(const std::filesystem::path& path, const MomentFeatureStack& stack);
MomentFeatureStack load_feature_stack(const std::filesystem::path& path);

}  // namespace mt3d
