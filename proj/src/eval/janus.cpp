#include "mt3d/eval/janus.hpp"

#include <algorithm>
#include <cmath>

#include "mt3d/core/errors.hpp"
#include "mt3d/moments/moments.hpp"

namespace mt3d {

void JanusConfig::validate() const {
    sweep.validate();
    if (!(ratio_threshold > 0.0 && thin_threshold >= 0.0 && thin_area_fraction > 0.0 && epsilon > 0.0))
        throw ConfigError("janus: thresholds must be positive");
}

HuVector log_compress(const HuVector& hu) {
    HuVector out{};
    for (int k = 0; k < 7; ++k) {
        const double sign = hu[k] > 0.0 ? 1.0 : (hu[k] < 0.0 ? -1.0 : 0.0);
        out[k] = sign * std::log(std::abs(hu[k]) + 1e-12);
    }
    return out;
}

std::vector<HuVector> silhouette_hu(const std::vector<Image>& silhouettes) {
    std::vector<HuVector> out;
    out.reserve(silhouettes.size());
    for (const Image& s : silhouettes) {
        const bool empty = std::none_of(s.data.begin(), s.data.end(), [](double v) { return v > 0.0; });
        out.push_back(empty ? HuVector{} : log_compress(hu_invariants(s)));
    }
    return out;
}

double mean_pairwise_distance(const std::vector<HuVector>& vectors) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            double d2 = 0.0;
            for (int k = 0; k < 7; ++k) d2 += (vectors[i][k] - vectors[j][k]) * (vectors[i][k] - vectors[j][k]);
            sum += std::sqrt(d2);
            ++pairs;
        }
    return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

double thin_view_fraction(const std::vector<double>& areas, double fraction) {
    if (areas.empty()) return 0.0;
    std::vector<double> sorted = areas;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const auto thin = std::count_if(areas.begin(), areas.end(), [&](double a) { return a < fraction * median; });
    return static_cast<double>(thin) / static_cast<double>(n);
}

JanusReport janus_from_sweeps(const std::vector<Image>& scene_silhouettes,
                              const std::vector<Image>& reference_silhouettes, const JanusConfig& config) {
    config.validate();
    JanusReport r;
    bool any = false;
    for (const Image& s : scene_silhouettes) {
        double area = 0.0;
        for (double v : s.data) area += v;
        r.areas.push_back(area);
        any = any || area > 0.0;
    }
    if (!any) throw DegenerateInput("janus proxy: the scene is blank in every view");
    r.hu = silhouette_hu(scene_silhouettes);
    r.reference_hu = silhouette_hu(reference_silhouettes);
    r.dispersion = mean_pairwise_distance(r.hu);
    r.reference_dispersion = mean_pairwise_distance(r.reference_hu);
    r.ratio = r.dispersion / std::max(r.reference_dispersion, config.epsilon);
    r.thin_score = thin_view_fraction(r.areas, config.thin_area_fraction);
    r.inconsistent = r.ratio > config.ratio_threshold || r.thin_score > config.thin_threshold;
    return r;
}

JanusReport janus_proxy(const GaussianScene& scene, const ReferenceAsset& asset, const JanusConfig& config) {
    config.validate();
    return janus_from_sweeps(sweep_scene(scene, config.sweep).silhouettes,
                             sweep_asset(asset, config.sweep).silhouettes, config);
}

}  // namespace mt3d
