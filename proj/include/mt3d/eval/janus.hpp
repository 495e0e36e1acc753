#pragma once

#include <array>
#include <vector>

#include "mt3d/eval/sweep.hpp"

namespace mt3d {

struct JanusConfig {
    SweepConfig sweep;
    /// Flag when scene dispersion / reference dispersion exceeds this.
    double ratio_threshold = 2.0;
    /// Flag when the fraction of thin views exceeds this.
    double thin_threshold = 0.25;
    /// A view is thin when its silhouette area is below this fraction of the sweep median.
    double thin_area_fraction = 0.2;
    /// Floor on the reference dispersion in the ratio.
    double epsilon = 1e-9;

    void validate() const;
};

using HuVector = std::array<double, 7>;

/// sign(h) * log(|h| + 1e-12), elementwise.
HuVector log_compress(const HuVector& hu);

/// Log-compressed Hu invariants of every silhouette; an empty mask gives zeros.
std::vector<HuVector> silhouette_hu(const std::vector<Image>& silhouettes);

/// Mean pairwise L2 distance of the vectors (0 for fewer than two).
double mean_pairwise_distance(const std::vector<HuVector>& vectors);

/// Fraction of views whose area is below fraction * median area.
double thin_view_fraction(const std::vector<double>& areas, double fraction);

struct JanusReport {
    std::vector<HuVector> hu;
    std::vector<HuVector> reference_hu;
    std::vector<double> areas;
    double dispersion = 0.0;
    double reference_dispersion = 0.0;
    double ratio = 0.0;
    double thin_score = 0.0;
    bool inconsistent = false;
};

/// Consistency proxy from two silhouette sweeps. Throws DegenerateInput when
/// every scene silhouette is empty.
JanusReport janus_from_sweeps(const std::vector<Image>& scene_silhouettes,
                              const std::vector<Image>& reference_silhouettes, const JanusConfig& config = {});
JanusReport janus_proxy(const GaussianScene& scene, const ReferenceAsset& asset, const JanusConfig& config = {});

}  // namespace mt3d
