#pragma once

#include <string>

namespace mt3d {

class Rng;

/// Timestep weighting for the distillation gradients.
enum class Weighting {
    kSigmaSquared,  ///< w(t) = sigma_t^2
    kUnit,          ///< w(t) = 1
    kAlphaSigma,    ///< w(t) = alpha_t * sigma_t
};

Weighting parse_weighting(const std::string& name);
std::string weighting_name(Weighting w);

/// Variance-preserving cosine schedule: abar(t) = f(t) / f(0) with
/// f(t) = cos^2(pi/2 * (t/T + s) / (1 + s)), alpha = sqrt(abar), sigma = sqrt(1 - abar).
struct NoiseSchedule {
    int max_timestep = 1000;
    double cosine_offset = 0.008;
    /// Timesteps are drawn uniformly from the integers in [t_min, t_max].
    int t_min = 20;
    int t_max = 980;
    Weighting weighting = Weighting::kSigmaSquared;
    Weighting prior_weighting = Weighting::kSigmaSquared;

    /// Throws ConfigError for an empty range, t_min = 0 or t_max > T.
    void validate() const;

    double alpha_bar(int t) const;
    double alpha(int t) const;
    double sigma(int t) const;
    double weight(int t) const;
    double prior_weight(int t) const;

    int sample_timestep(Rng& rng) const;
};

}  // namespace mt3d
