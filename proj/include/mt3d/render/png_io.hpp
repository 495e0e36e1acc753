#pragma once

#include <filesystem>
#include <vector>

#include "mt3d/core/image.hpp"

namespace mt3d {

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded.
void write_png_rgb(const std::filesystem::path& path, const Image& rgb);
/// Reads any PNG as RGB in [0,1] (gray is expanded, alpha dropped, 16-bit reduced).
Image read_png_rgb(const std::filesystem::path& path);

/// 16-bit grayscale depth: near -> 0, far -> 65535 linearly, clamped.
/// Background pixels (kBackgroundDepth) are written as 65535.
void write_depth_png16(const std::filesystem::path& path, const Image& depth, double near, double far);
/// Inverse mapping; 65535 decodes to kBackgroundDepth.
Image read_depth_png16(const std::filesystem::path& path, double near, double far);

/// Concatenates equally sized images left to right.
Image hstack(const std::vector<Image>& images);

}  // namespace mt3d
