#include "mt3d/moments/moments.hpp"

#include <cmath>
#include <string>

#include "mt3d/core/errors.hpp"

namespace mt3d {

namespace {

void check_input(const Image& gray, int order) {
    if (gray.channels != 1) throw ContractError("moments: expected a single-channel image");
    if (order < 0 || order > kMaxMomentOrder)
        throw ConfigError("moments: order must lie in [0, " + std::to_string(kMaxMomentOrder) + "]");
    for (double v : gray.data)
        if (!std::isfinite(v)) throw InvalidInput("moments: image contains non-finite values");
}

/// Sums f * (x - cx)^p (y - cy)^q over the image with the pixel area weight.
MomentVector accumulate(const Image& gray, int order, double cx, double cy) {
    MomentVector m(order);
    const double area = 1.0 / (static_cast<double>(gray.width) * gray.height);
    std::vector<double> xp(order + 1), yq(order + 1);
    for (int j = 0; j < gray.height; ++j) {
        const double y = (j + 0.5) / gray.height - cy;
        yq[0] = 1.0;
        for (int q = 1; q <= order; ++q) yq[q] = yq[q - 1] * y;
        for (int i = 0; i < gray.width; ++i) {
            const double f = gray.at(i, j);
            if (f == 0.0) continue;
            const double x = (i + 0.5) / gray.width - cx;
            xp[0] = f;
            for (int p = 1; p <= order; ++p) xp[p] = xp[p - 1] * x;
            for (int n = 0; n <= order; ++n)
                for (int q = 0; q <= n; ++q) m(n - q, q) += xp[n - q] * yq[q];
        }
    }
    for (double& v : m.values) v *= area;
    return m;
}

}  // namespace

MomentVector raw_moments(const Image& gray, int order) {
    check_input(gray, order);
    return accumulate(gray, order, 0.0, 0.0);
}

MomentVector central_moments(const Image& gray, int order) {
    check_input(gray, order);
    const MomentVector first = accumulate(gray, 1, 0.0, 0.0);
    if (!(first(0, 0) > 0.0)) throw DegenerateInput("central moments: image has zero mass");
    return accumulate(gray, order, first(1, 0) / first(0, 0), first(0, 1) / first(0, 0));
}

MomentVector normalized_central_moments(const Image& gray, int order) {
    MomentVector mu = central_moments(gray, order);
    const double m00 = mu(0, 0);
    for (int n = 0; n <= order; ++n)
        for (int q = 0; q <= n; ++q) mu(n - q, q) /= std::pow(m00, 1.0 + 0.5 * n);
    return mu;
}

std::array<double, 7> hu_from_normalized(const MomentVector& e) {
    if (e.order < 3) throw ConfigError("hu invariants need moments up to order 3");
    const double n20 = e(2, 0), n02 = e(0, 2), n11 = e(1, 1);
    const double n30 = e(3, 0), n03 = e(0, 3), n21 = e(2, 1), n12 = e(1, 2);
    const double a = n30 + n12, b = n21 + n03;
    const double c = n30 - 3 * n12, d = 3 * n21 - n03;
    std::array<double, 7> h{};
    h[0] = n20 + n02;
    h[1] = (n20 - n02) * (n20 - n02) + 4 * n11 * n11;
    h[2] = c * c + d * d;
    h[3] = a * a + b * b;
    h[4] = c * a * (a * a - 3 * b * b) + d * b * (3 * a * a - b * b);
    h[5] = (n20 - n02) * (a * a - b * b) + 4 * n11 * a * b;
    h[6] = d * a * (a * a - 3 * b * b) - c * b * (3 * a * a - b * b);
    return h;
}

std::array<double, 7> hu_invariants(const Image& gray) {
    return hu_from_normalized(normalized_central_moments(gray, 3));
}

}  // namespace mt3d
