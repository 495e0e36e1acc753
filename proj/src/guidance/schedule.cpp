#include "mt3d/guidance/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"

namespace mt3d {

Weighting parse_weighting(const std::string& name) {
    if (name == "sigma2") return Weighting::kSigmaSquared;
    if (name == "unit") return Weighting::kUnit;
    if (name == "alpha_sigma") return Weighting::kAlphaSigma;
    throw ConfigError("unknown weighting '" + name + "' (expected sigma2, unit or alpha_sigma)");
}

std::string weighting_name(Weighting w) {
    switch (w) {
        case Weighting::kSigmaSquared: return "sigma2";
        case Weighting::kUnit: return "unit";
        case Weighting::kAlphaSigma: return "alpha_sigma";
    }
    return "sigma2";
}

void NoiseSchedule::validate() const {
    if (max_timestep < 2) throw ConfigError("noise schedule: T must be >= 2");
    if (!(cosine_offset > 0.0)) throw ConfigError("noise schedule: cosine offset must be > 0");
    if (t_min < 1) throw ConfigError("noise schedule: t_min must be >= 1 (sigma_0 = 0)");
    if (t_max > max_timestep) throw ConfigError("noise schedule: t_max exceeds T");
    if (t_min > t_max) throw ConfigError("noise schedule: empty timestep range");
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > max_timestep) throw ConfigError("noise schedule: timestep out of range");
    auto f = [this](double u) {
        const double c = std::cos(0.5 * M_PI * (u + cosine_offset) / (1.0 + cosine_offset));
        return c * c;
    };
    return std::clamp(f(static_cast<double>(t) / max_timestep) / f(0.0), 0.0, 1.0);
}

double NoiseSchedule::alpha(int t) const { return std::sqrt(alpha_bar(t)); }
double NoiseSchedule::sigma(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

namespace {
double apply_weighting(Weighting w, double alpha, double sigma) {
    switch (w) {
        case Weighting::kSigmaSquared: return sigma * sigma;
        case Weighting::kUnit: return 1.0;
        case Weighting::kAlphaSigma: return alpha * sigma;
    }
    return sigma * sigma;
}
}  // namespace

double NoiseSchedule::weight(int t) const { return apply_weighting(weighting, alpha(t), sigma(t)); }
double NoiseSchedule::prior_weight(int t) const { return apply_weighting(prior_weighting, alpha(t), sigma(t)); }

int NoiseSchedule::sample_timestep(Rng& rng) const {
    validate();
    return rng.uniform_int(t_min, t_max);
}

}  // namespace mt3d
