#include "mt3d/render/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "mt3d/core/errors.hpp"
#include "mt3d/render/renderer.hpp"

namespace mt3d {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               int bit_depth, const std::vector<png_bytep>& rows) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw ConfigError("cannot write PNG: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Reads a PNG into 16-bit samples with the requested channel count (1 or 3).
std::vector<std::uint16_t> read_png(const std::filesystem::path& path, int channels, int& width,
                                    int& height) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw ConfigError("cannot open PNG: " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw InvalidInput("not a PNG file: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int ct = png_get_color_type(png, info);
    const int bd = png_get_bit_depth(png, info);
    if (ct == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (ct == PNG_COLOR_TYPE_GRAY && bd < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (ct & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (channels == 3 && (ct == PNG_COLOR_TYPE_GRAY || ct == PNG_COLOR_TYPE_GRAY_ALPHA)) png_set_gray_to_rgb(png);
    if (channels == 1 && (ct & PNG_COLOR_MASK_COLOR)) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (bd < 16) png_set_expand_16(png);
    png_set_swap(png);  // native little-endian 16-bit samples
    png_read_update_info(png, info);
    if (static_cast<int>(png_get_channels(png, info)) != channels) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("unsupported PNG layout: " + path.string());
    }
    std::vector<std::uint16_t> samples(static_cast<std::size_t>(width) * height * channels);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(samples.data() + static_cast<std::size_t>(y) * width * channels);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return samples;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Image& rgb) {
    if (rgb.channels != 3) throw ContractError("write_png_rgb: expected 3 channels");
    std::vector<png_byte> bytes(rgb.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<png_byte>(std::lround(std::clamp(rgb.data[i], 0.0, 1.0) * 255.0));
    std::vector<png_bytep> rows(rgb.height);
    for (int y = 0; y < rgb.height; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * rgb.width * 3;
    write_png(path, rgb.width, rgb.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

Image read_png_rgb(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto samples = read_png(path, 3, w, h);
    Image img(w, h, 3);
    for (std::size_t i = 0; i < samples.size(); ++i) img.data[i] = samples[i] / 65535.0;
    return img;
}

void write_depth_png16(const std::filesystem::path& path, const Image& depth, double near, double far) {
    if (depth.channels != 1) throw ContractError("write_depth_png16: expected 1 channel");
    if (!(far > near)) throw ConfigError("write_depth_png16: far must exceed near");
    std::vector<std::uint16_t> samples(depth.data.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = depth.data[i];
        const double t = d == kBackgroundDepth ? 1.0 : std::clamp((d - near) / (far - near), 0.0, 1.0);
        std::uint16_t v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        // big-endian byte order as PNG stores it
        samples[i] = static_cast<std::uint16_t>((v >> 8) | (v << 8));
    }
    std::vector<png_bytep> rows(depth.height);
    for (int y = 0; y < depth.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(samples.data() + static_cast<std::size_t>(y) * depth.width);
    write_png(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, rows);
}

Image read_depth_png16(const std::filesystem::path& path, double near, double far) {
    int w = 0, h = 0;
    const auto samples = read_png(path, 1, w, h);
    Image img(w, h, 1);
    for (std::size_t i = 0; i < samples.size(); ++i)
        img.data[i] = samples[i] == 65535 ? kBackgroundDepth : near + (far - near) * (samples[i] / 65535.0);
    return img;
}

Image hstack(const std::vector<Image>& images) {
    if (images.empty()) return {};
    const Image& first = images.front();
    for (const auto& im : images)
        if (!im.same_shape(first)) throw ContractError("hstack: images differ in shape");
    Image out(first.width * static_cast<int>(images.size()), first.height, first.channels);
    for (std::size_t k = 0; k < images.size(); ++k)
        for (int y = 0; y < first.height; ++y)
            for (int x = 0; x < first.width; ++x)
                for (int c = 0; c < first.channels; ++c)
                    out.at(static_cast<int>(k) * first.width + x, y, c) = images[k].at(x, y, c);
    return out;
}

}  // namespace mt3d
