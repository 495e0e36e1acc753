#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mt3d/core/errors.hpp"
#include "mt3d/moments/dgm.hpp"
#include "mt3d/moments/moments.hpp"

using namespace mt3d;

namespace {

Image random_gray(int w, int h, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, 1);
    for (double& v : img.data) v = u(gen);
    return img;
}

Image random_rgb(int w, int h, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, 3);
    for (double& v : img.data) v = u(gen);
    return img;
}

/// Naive double sum with std::pow, written independently of the library loop.
double brute_moment(const Image& img, int p, int q, double cx = 0.0, double cy = 0.0) {
    double s = 0.0;
    for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i) {
            const double x = (i + 0.5) / img.width, y = (j + 0.5) / img.height;
            s += img.at(i, j) * std::pow(x - cx, p) * std::pow(y - cy, q) / (img.width * img.height);
        }
    return s;
}

/// Counter-clockwise 90 degree rotation in pixel index space.
Image rot90(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, img.width - 1 - x, c) = img.at(x, y, c);
    return out;
}

/// Rotates about the image centre with bilinear sampling, zero outside.
Image rotate_bilinear(const Image& img, double degrees) {
    const double th = degrees * M_PI / 180.0, c = std::cos(th), s = std::sin(th);
    const double cx = img.width / 2.0, cy = img.height / 2.0;
    Image out(img.width, img.height, 1);
    auto sample = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
        return img.at(x, y);
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double sx = c * dx + s * dy + cx - 0.5, sy = -s * dx + c * dy + cy - 0.5;
            const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            out.at(x, y) = (1 - fx) * (1 - fy) * sample(x0, y0) + fx * (1 - fy) * sample(x0 + 1, y0) +
                           (1 - fx) * fy * sample(x0, y0 + 1) + fx * fy * sample(x0 + 1, y0 + 1);
        }
    return out;
}

/// An off-centre, asymmetric smooth shape: two anisotropic blobs.
Image blob_image(int size) {
    Image img(size, size, 1);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5) / size - 0.45, v = (y + 0.5) / size - 0.5;
            const double a = std::exp(-(u * u / 0.012 + v * v / 0.004 + u * v / 0.01));
            const double u2 = u - 0.12, v2 = v + 0.1;
            const double b = 0.6 * std::exp(-(u2 * u2 + v2 * v2) / 0.002);
            img.at(x, y) = a + b;
        }
    return img;
}

}  // namespace

TEST(RawMoments, AllOnesTwoByTwo) {
    const Image img(2, 2, 1, 1.0);
    const MomentVector m = raw_moments(img, 2);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
    EXPECT_EQ(m.size(), 6u);
}

TEST(RawMoments, SinglePixel) {
    Image img(5, 4, 1);
    img.at(3, 1) = 2.5;
    const double x0 = 3.5 / 5, y0 = 1.5 / 4;
    const MomentVector m = raw_moments(img, 4);
    for (int p = 0; p <= 4; ++p)
        for (int q = 0; p + q <= 4; ++q)
            EXPECT_NEAR(m(p, q), 2.5 * std::pow(x0, p) * std::pow(y0, q) / 20.0, 1e-15);
}

TEST(RawMoments, MatchesBruteForceOnRandomImages) {
    for (unsigned seed = 0; seed < 100; ++seed) {
        const Image img = random_gray(8, 8, seed);
        const MomentVector m = raw_moments(img, 4);
        for (int p = 0; p <= 4; ++p)
            for (int q = 0; p + q <= 4; ++q) ASSERT_NEAR(m(p, q), brute_moment(img, p, q), 1e-12);
    }
}

TEST(RawMoments, Linear) {
    const Image f = random_gray(7, 9, 1), g = random_gray(7, 9, 2);
    Image h(7, 9, 1);
    for (std::size_t k = 0; k < h.data.size(); ++k) h.data[k] = 2.0 * f.data[k] + 0.5 * g.data[k];
    const auto mf = raw_moments(f, 4), mg = raw_moments(g, 4), mh = raw_moments(h, 4);
    for (std::size_t k = 0; k < mh.size(); ++k)
        EXPECT_NEAR(mh.values[k], 2.0 * mf.values[k] + 0.5 * mg.values[k], 1e-14);
}

TEST(RawMoments, RejectsBadOrderAndNonFinite) {
    const Image img(4, 4, 1, 1.0);
    EXPECT_THROW(raw_moments(img, 9), ConfigError);
    Image bad = img;
    bad.at(1, 1) = NAN;
    EXPECT_THROW(raw_moments(bad, 2), InvalidInput);
    EXPECT_NO_THROW(raw_moments(img, 8));
}

TEST(CentralMoments, MatchesBruteForceAboutCentroid) {
    const Image img = random_gray(9, 6, 3);
    const double m00 = brute_moment(img, 0, 0);
    const double cx = brute_moment(img, 1, 0) / m00, cy = brute_moment(img, 0, 1) / m00;
    const MomentVector mu = central_moments(img, 4);
    for (int p = 0; p <= 4; ++p)
        for (int q = 0; p + q <= 4; ++q) EXPECT_NEAR(mu(p, q), brute_moment(img, p, q, cx, cy), 1e-13);
}

TEST(CentralMoments, IntegerShiftInvariance) {
    Image base(32, 32, 1), shifted(32, 32, 1);
    const Image patch = random_gray(10, 8, 4);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            base.at(x + 5, y + 6) = patch.at(x, y);
            shifted.at(x + 17, y + 20) = patch.at(x, y);
        }
    const auto a = central_moments(base, 4), b = central_moments(shifted, 4);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-10);
}

TEST(CentralMoments, BlankImageIsDegenerate) {
    EXPECT_THROW(central_moments(Image(4, 4, 1), 3), DegenerateInput);
    EXPECT_THROW(hu_invariants(Image(4, 4, 1)), DegenerateInput);
}

TEST(CentralMoments, PixelReplicationKeepsEta) {
    const Image img = random_gray(64, 64, 12);
    Image big(128, 128, 1);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) big.at(x, y) = img.at(x / 2, y / 2);
    const auto a = normalized_central_moments(img, 4), b = normalized_central_moments(big, 4);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-3);
}

TEST(HuInvariants, ExactUnderQuarterTurns) {
    const Image img = random_gray(12, 12, 5);
    const auto h0 = hu_invariants(img);
    Image r = img;
    for (int turn = 1; turn <= 3; ++turn) {
        r = rot90(r);
        const auto h = hu_invariants(r);
        for (int i = 0; i < 7; ++i) EXPECT_NEAR(h[i], h0[i], 1e-9) << "turn " << turn << " invariant " << i;
    }
}

TEST(HuInvariants, StableUnderFifteenDegreeRotation) {
    const Image img = blob_image(128);
    const Image rotated = rotate_bilinear(img, 15.0);
    const auto a = hu_invariants(img), b = hu_invariants(rotated);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 7; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    EXPECT_LE(std::sqrt(num / den), 0.01);
}

TEST(HuInvariants, KnownValuesForCentredSquare) {
    // A centred uniform square has eta20 = eta02 = 1/12 in the continuum limit,
    // so h1 ~ 1/6 and every odd-order invariant vanishes.
    Image img(64, 64, 1);
    for (int y = 16; y < 48; ++y)
        for (int x = 16; x < 48; ++x) img.at(x, y) = 1.0;
    const auto h = hu_invariants(img);
    EXPECT_NEAR(h[0], 1.0 / 6.0, 1e-3);
    for (int i = 1; i < 7; ++i) EXPECT_NEAR(h[i], 0.0, 1e-12);
}

TEST(DgmFeatures, LengthAndDeterminism) {
    const Image img = random_rgb(64, 64, 6);
    const DgmConfig config;
    const auto a = dgm_features(img, config), b = dgm_features(img, config);
    EXPECT_EQ(a.values.size(), config.feature_length());
    EXPECT_EQ(a.values.size(), 3u * 17u * 15u);
    EXPECT_EQ(a, b);
    for (double v : a.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(DgmFeatures, BlankImageGivesZeroStack) {
    const auto s = dgm_features(Image(32, 32, 3));
    for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(DgmFeatures, TooSmallImageIsConfigError) {
    EXPECT_THROW(dgm_features(Image(16, 16, 3)), ConfigError);
    EXPECT_NO_THROW(dgm_features(Image(20, 20, 3)));
}

TEST(DgmFeatures, QuarterTurnPreservesGlobalHuAndPermutesWindows) {
    // 40 is divisible by (grid + 1) at every level, so the window grid maps onto itself.
    Image rgb(40, 40, 3);
    const Image blob = blob_image(40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = blob.at(x, y) * (0.5 + 0.2 * c);
    const DgmConfig config;
    const auto a = dgm_features(rgb, config), b = dgm_features(rot90(rgb), config);
    const int per = config.features_per_window();
    auto window_hu = [&](const MomentFeatureStack& s, int level, int window) {
        MomentVector eta(config.order);
        const std::size_t off = (static_cast<std::size_t>(level) * config.windows_per_level() + window) * per;
        std::copy(s.values.begin() + off, s.values.begin() + off + per, eta.values.begin());
        return hu_from_normalized(eta);
    };
    for (int level = 0; level < config.levels; ++level) {
        const auto ha = window_hu(a, level, 0), hb = window_hu(b, level, 0);
        for (int i = 0; i < 7; ++i) EXPECT_NEAR(ha[i], hb[i], 1e-6 * std::max(1.0, std::abs(ha[i])));
        // pixel (x, y) moves to (y, W-1-x), so grid cell (gx, gy) moves to (gy, g-1-gx).
        for (int gy = 0; gy < config.grid; ++gy)
            for (int gx = 0; gx < config.grid; ++gx) {
                const int src = 1 + gy * config.grid + gx;
                const int dst = 1 + (config.grid - 1 - gx) * config.grid + gy;
                const auto wa = window_hu(a, level, src), wb = window_hu(b, level, dst);
                for (int i = 0; i < 7; ++i)
                    EXPECT_NEAR(wa[i], wb[i], 1e-6 * std::max(1.0, std::abs(wa[i])))
                        << "level " << level << " window " << src;
            }
    }
}

TEST(DgmFeatures, SerializationRoundTrip) {
    const auto s = dgm_features(random_rgb(48, 40, 7));
    std::stringstream buffer;
    write_feature_stack(buffer, s);
    EXPECT_EQ(buffer.str().size(), 8u + 16u + 8u + 8u * s.values.size());
    const auto back = read_feature_stack(buffer);
    EXPECT_EQ(back, s);
    std::stringstream bad("NOTASTACK");
    EXPECT_THROW(read_feature_stack(bad), InvalidInput);
}

TEST(MomentLoss, ZeroForIdenticalImages) {
    const Image img = random_rgb(32, 32, 8);
    const auto r = moment_loss(img, img);
    EXPECT_EQ(r.loss, 0.0);
    for (double v : r.grad.data) EXPECT_EQ(v, 0.0);
}

TEST(MomentLoss, SymmetricAndTriangle) {
    const Image a = random_rgb(32, 32, 9), b = random_rgb(32, 32, 10), c = random_rgb(32, 32, 11);
    const double ab = moment_loss(a, b).loss, ba = moment_loss(b, a).loss;
    EXPECT_EQ(ab, ba);
    EXPECT_GT(ab, 0.0);
    EXPECT_LE(moment_loss(a, c).loss, ab + moment_loss(b, c).loss + 1e-15);
}

TEST(MomentLoss, ShapeMismatchIsContractError) {
    EXPECT_THROW(moment_loss(Image(32, 32, 3), Image(32, 40, 3)), ContractError);
}

TEST(MomentLoss, GradientMatchesFiniteDifferences) {
    for (unsigned seed = 20; seed < 23; ++seed) {
        const Image a = random_rgb(32, 32, seed), b = random_rgb(32, 32, seed + 100);
        const auto r = moment_loss(a, b);
        std::mt19937_64 gen(seed);
        std::uniform_int_distribution<std::size_t> pick(0, a.data.size() - 1);
        double max_grad = 0.0;
        for (double g : r.grad.data) max_grad = std::max(max_grad, std::abs(g));
        for (int n = 0; n < 20; ++n) {
            const std::size_t k = pick(gen);
            const double h = 1e-5;
            Image plus = a, minus = a;
            plus.data[k] += h;
            minus.data[k] -= h;
            const double fd = (moment_loss(plus, b).loss - moment_loss(minus, b).loss) / (2 * h);
            const double an = r.grad.data[k];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-3 * max_grad});
            EXPECT_LT(std::abs(fd - an) / denom, 1e-4) << "seed " << seed << " index " << k;
        }
    }
}
