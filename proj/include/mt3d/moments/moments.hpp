#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mt3d/core/image.hpp"

namespace mt3d {

/// Largest supported moment order.
inline constexpr int kMaxMomentOrder = 8;

/// Moments m_pq for all p + q <= order, stored by total degree then q:
/// (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
struct MomentVector {
    int order = 0;
    std::vector<double> values;

    MomentVector() = default;
    explicit MomentVector(int max_order)
        : order(max_order), values(length(max_order), 0.0) {}

    static std::size_t length(int max_order) {
        return static_cast<std::size_t>(max_order + 1) * (max_order + 2) / 2;
    }
    static std::size_t index(int p, int q) {
        const int n = p + q;
        return static_cast<std::size_t>(n) * (n + 1) / 2 + q;
    }

    double operator()(int p, int q) const { return values[index(p, q)]; }
    double& operator()(int p, int q) { return values[index(p, q)]; }
    std::size_t size() const { return values.size(); }
};

/// Raw moments of a single-channel image. Pixel (i, j) sits at
/// ((i + 0.5) / W, (j + 0.5) / H) and carries area 1 / (W H).
MomentVector raw_moments(const Image& gray, int order);

/// Moments about the intensity centroid. Throws DegenerateInput when m_00 = 0.
MomentVector central_moments(const Image& gray, int order);

/// eta_pq = mu_pq / m_00^(1 + (p + q) / 2).
MomentVector normalized_central_moments(const Image& gray, int order);

/// Hu's seven invariants computed from normalized central moments (order >= 3).
std::array<double, 7> hu_from_normalized(const MomentVector& eta);

std::array<double, 7> hu_invariants(const Image& gray);

}  // namespace mt3d
