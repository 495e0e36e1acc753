#include "mt3d/moments/dgm.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "mt3d/core/binary_io.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/moments/moments.hpp"

namespace mt3d {

namespace {

constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};
constexpr char kStackMagic[9] = "MT3DDGM1";

struct Window {
    int x0, y0, w, h;
};

std::vector<Window> level_windows(int width, int height, int grid) {
    std::vector<Window> windows;
    windows.push_back({0, 0, width, height});
    const int sx = width / (grid + 1), sy = height / (grid + 1);
    for (int gy = 0; gy < grid; ++gy)
        for (int gx = 0; gx < grid; ++gx) windows.push_back({gx * sx, gy * sy, 2 * sx, 2 * sy});
    return windows;
}

std::vector<Image> build_pyramid(const Image& rgb, const DgmConfig& config) {
    std::vector<Image> pyramid;
    pyramid.push_back(luminance(rgb));
    for (int l = 1; l < config.levels; ++l) pyramid.push_back(downsample2(pyramid.back()));
    const Image& coarsest = pyramid.back();
    if (coarsest.width < config.grid + 1 || coarsest.height < config.grid + 1)
        throw ConfigError("moment features: image " + std::to_string(rgb.width) + "x" +
                          std::to_string(rgb.height) + " is too small for the window grid");
    return pyramid;
}

/// Central moments of one window in window-local normalized coordinates.
struct WindowMoments {
    bool degenerate = true;
    double m00 = 0.0, cx = 0.0, cy = 0.0;
    MomentVector mu;
};

WindowMoments window_moments(const Image& img, const Window& win, int order, double min_mass) {
    WindowMoments out;
    out.mu = MomentVector(order);
    const double area = 1.0 / (static_cast<double>(win.w) * win.h);
    double m00 = 0.0, m10 = 0.0, m01 = 0.0;
    for (int j = 0; j < win.h; ++j) {
        const double y = (j + 0.5) / win.h;
        for (int i = 0; i < win.w; ++i) {
            const double f = img.at(win.x0 + i, win.y0 + j);
            m00 += f;
            m10 += f * (i + 0.5) / win.w;
            m01 += f * y;
        }
    }
    m00 *= area;
    m10 *= area;
    m01 *= area;
    if (!(m00 >= min_mass)) return out;
    out.degenerate = false;
    out.m00 = m00;
    out.cx = m10 / m00;
    out.cy = m01 / m00;
    std::vector<double> xp(order + 1), yq(order + 1);
    for (int j = 0; j < win.h; ++j) {
        const double dy = (j + 0.5) / win.h - out.cy;
        yq[0] = 1.0;
        for (int q = 1; q <= order; ++q) yq[q] = yq[q - 1] * dy;
        for (int i = 0; i < win.w; ++i) {
            const double dx = (i + 0.5) / win.w - out.cx;
            xp[0] = img.at(win.x0 + i, win.y0 + j);
            for (int p = 1; p <= order; ++p) xp[p] = xp[p - 1] * dx;
            for (int n = 0; n <= order; ++n)
                for (int q = 0; q <= n; ++q) out.mu(n - q, q) += xp[n - q] * yq[q];
        }
    }
    for (double& v : out.mu.values) v *= area;
    return out;
}

double eta_exponent(int n) { return 1.0 + 0.5 * n; }

void window_forward(const Image& img, const Window& win, const DgmConfig& config, double* out) {
    const WindowMoments wm = window_moments(img, win, config.order, config.degenerate_mass);
    const std::size_t count = MomentVector::length(config.order);
    if (wm.degenerate) {
        std::fill(out, out + count, 0.0);
        return;
    }
    for (int n = 0; n <= config.order; ++n)
        for (int q = 0; q <= n; ++q) {
            const std::size_t k = MomentVector::index(n - q, q);
            out[k] = wm.mu.values[k] / std::pow(wm.m00, eta_exponent(n));
        }
}

void window_backward(const Image& img, const Window& win, const DgmConfig& config,
                     const double* g, Image& grad) {
    const int order = config.order;
    const WindowMoments wm = window_moments(img, win, order, config.degenerate_mass);
    if (wm.degenerate) return;
    const double m00 = wm.m00;
    MomentVector c(order);
    double beta_x = 0.0, beta_y = 0.0, beta_0 = 0.0;
    for (int n = 0; n <= order; ++n)
        for (int q = 0; q <= n; ++q) {
            const int p = n - q;
            const std::size_t k = MomentVector::index(p, q);
            const double gamma = eta_exponent(n);
            const double scale = std::pow(m00, -gamma);
            c.values[k] = g[k] * scale;
            if (p > 0) beta_x -= c.values[k] * p * wm.mu(p - 1, q) / m00;
            if (q > 0) beta_y -= c.values[k] * q * wm.mu(p, q - 1) / m00;
            beta_0 -= g[k] * gamma * wm.mu.values[k] * scale / m00;
        }
    const double area = 1.0 / (static_cast<double>(win.w) * win.h);
    std::vector<double> xp(order + 1), yq(order + 1);
    for (int j = 0; j < win.h; ++j) {
        const double dy = (j + 0.5) / win.h - wm.cy;
        yq[0] = 1.0;
        for (int q = 1; q <= order; ++q) yq[q] = yq[q - 1] * dy;
        for (int i = 0; i < win.w; ++i) {
            const double dx = (i + 0.5) / win.w - wm.cx;
            xp[0] = 1.0;
            for (int p = 1; p <= order; ++p) xp[p] = xp[p - 1] * dx;
            double s = beta_x * dx + beta_y * dy + beta_0;
            for (int n = 0; n <= order; ++n)
                for (int q = 0; q <= n; ++q) s += c(n - q, q) * xp[n - q] * yq[q];
            grad.at(win.x0 + i, win.y0 + j) += area * s;
        }
    }
}

}  // namespace

void DgmConfig::validate() const {
    if (levels < 1) throw ConfigError("moment features: levels must be >= 1");
    if (order < 0 || order > kMaxMomentOrder)
        throw ConfigError("moment features: order must lie in [0, " + std::to_string(kMaxMomentOrder) + "]");
    if (grid < 1) throw ConfigError("moment features: grid must be >= 1");
    if (!(degenerate_mass >= 0.0)) throw ConfigError("moment features: degenerate mass must be >= 0");
}

int DgmConfig::features_per_window() const { return static_cast<int>(MomentVector::length(order)); }

std::size_t DgmConfig::feature_length() const {
    return static_cast<std::size_t>(levels) * windows_per_level() * features_per_window();
}

Image luminance(const Image& rgb) {
    if (rgb.channels != 3) throw ContractError("luminance: expected 3 channels");
    Image gray(rgb.width, rgb.height, 1);
    for (std::size_t k = 0; k < gray.data.size(); ++k)
        gray.data[k] = kLumaWeights[0] * rgb.data[3 * k] + kLumaWeights[1] * rgb.data[3 * k + 1] +
                       kLumaWeights[2] * rgb.data[3 * k + 2];
    return gray;
}

Image downsample2(const Image& gray) {
    Image out(gray.width / 2, gray.height / 2, gray.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < gray.channels; ++c)
                out.at(x, y, c) = 0.25 * (gray.at(2 * x, 2 * y, c) + gray.at(2 * x + 1, 2 * y, c) +
                                          gray.at(2 * x, 2 * y + 1, c) + gray.at(2 * x + 1, 2 * y + 1, c));
    return out;
}

MomentFeatureStack dgm_features(const Image& rgb, const DgmConfig& config) {
    config.validate();
    for (double v : rgb.data)
        if (!std::isfinite(v)) throw InvalidInput("moment features: image contains non-finite values");
    const std::vector<Image> pyramid = build_pyramid(rgb, config);
    MomentFeatureStack stack;
    stack.levels = config.levels;
    stack.order = config.order;
    stack.grid_x = stack.grid_y = config.grid;
    stack.values.assign(config.feature_length(), 0.0);
    const std::size_t per_window = config.features_per_window();
    std::size_t offset = 0;
    for (const Image& level : pyramid)
        for (const Window& win : level_windows(level.width, level.height, config.grid)) {
            window_forward(level, win, config, stack.values.data() + offset);
            offset += per_window;
        }
    return stack;
}

Image dgm_backward(const Image& rgb, const std::vector<double>& feature_grad, const DgmConfig& config) {
    config.validate();
    if (feature_grad.size() != config.feature_length())
        throw ContractError("dgm_backward: feature gradient has the wrong length");
    const std::vector<Image> pyramid = build_pyramid(rgb, config);
    const std::size_t per_window = config.features_per_window();
    std::vector<Image> grads;
    for (const Image& level : pyramid) grads.emplace_back(level.width, level.height, 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < pyramid.size(); ++l)
        for (const Window& win : level_windows(pyramid[l].width, pyramid[l].height, config.grid)) {
            window_backward(pyramid[l], win, config, feature_grad.data() + offset, grads[l]);
            offset += per_window;
        }
    for (std::size_t l = pyramid.size() - 1; l > 0; --l) {
        const Image& coarse = grads[l];
        Image& fine = grads[l - 1];
        for (int y = 0; y < coarse.height; ++y)
            for (int x = 0; x < coarse.width; ++x) {
                const double g = 0.25 * coarse.at(x, y);
                fine.at(2 * x, 2 * y) += g;
                fine.at(2 * x + 1, 2 * y) += g;
                fine.at(2 * x, 2 * y + 1) += g;
                fine.at(2 * x + 1, 2 * y + 1) += g;
            }
    }
    Image out(rgb.width, rgb.height, 3);
    for (std::size_t k = 0; k < grads[0].data.size(); ++k)
        for (int c = 0; c < 3; ++c) out.data[3 * k + c] = kLumaWeights[c] * grads[0].data[k];
    return out;
}

MomentLoss moment_loss(const Image& render, const Image& reference, const DgmConfig& config) {
    if (!render.same_shape(reference))
        throw ContractError("moment_loss: render and reference differ in shape");
    const MomentFeatureStack a = dgm_features(render, config);
    const MomentFeatureStack b = dgm_features(reference, config);
    std::vector<double> diff(a.values.size());
    double sq = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
        diff[k] = a.values[k] - b.values[k];
        sq += diff[k] * diff[k];
    }
    MomentLoss out;
    out.loss = std::sqrt(sq);
    if (out.loss == 0.0) {
        out.grad = Image(render.width, render.height, 3);
        return out;
    }
    for (double& d : diff) d /= out.loss;
    out.grad = dgm_backward(render, diff, config);
    return out;
}

MomentLoss moment_loss(const RenderedImage& render, const RenderedImage& reference,
                       const DgmConfig& config) {
    return moment_loss(render.rgb, reference.rgb, config);
}

void write_feature_stack(std::ostream& out, const MomentFeatureStack& stack) {
    binary::put_magic(out, kStackMagic);
    binary::put_u32(out, static_cast<std::uint32_t>(stack.levels));
    binary::put_u32(out, static_cast<std::uint32_t>(stack.order));
    binary::put_u32(out, static_cast<std::uint32_t>(stack.grid_x));
    binary::put_u32(out, static_cast<std::uint32_t>(stack.grid_y));
    binary::put_f64s(out, stack.values);
}

MomentFeatureStack read_feature_stack(std::istream& in) {
    binary::expect_magic(in, kStackMagic, "feature stack");
    MomentFeatureStack stack;
    stack.levels = static_cast<int>(binary::get_u32(in));
    stack.order = static_cast<int>(binary::get_u32(in));
    stack.grid_x = static_cast<int>(binary::get_u32(in));
    stack.grid_y = static_cast<int>(binary::get_u32(in));
    if (stack.order < 0 || stack.order > kMaxMomentOrder || stack.levels < 1 || stack.levels > 64 ||
        stack.grid_x < 1 || stack.grid_x > 4096 || stack.grid_y < 1 || stack.grid_y > 4096)
        throw InvalidInput("feature stack: implausible header");
    const std::uint64_t expected = static_cast<std::uint64_t>(stack.levels) *
                                   (static_cast<std::uint64_t>(stack.grid_x) * stack.grid_y + 1) *
                                   MomentVector::length(stack.order);
    stack.values = binary::get_f64s(in, expected);
    if (stack.values.size() != expected) throw InvalidInput("feature stack: header does not match payload size");
    return stack;
}

void save_feature_stack(const std::filesystem::path& path, const MomentFeatureStack& stack) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_feature_stack(out, stack);
}

MomentFeatureStack load_feature_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read_feature_stack(in);
}

}  // namespace mt3d
