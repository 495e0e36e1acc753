#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mt3d/core/image.hpp"
#include "mt3d/guidance/oracle.hpp"
#include "mt3d/optim/adam.hpp"

namespace mt3d {

/// One 3x3 convolution with zero padding, weights laid out [out][in][ky][kx].
struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

/// Image, normalized depth condition and prompt used to train the surrogate.
struct SurrogateExample {
    Image rgb;
    Image depth;  // normalized, 1 channel; empty means no depth
    PromptEmbedding prompt;
};

/// Small convolutional noise predictor trained online on the current renders.
///
/// Input channels: noisy rgb (3), normalized depth (1) and a sinusoidal
/// timestep embedding (4) broadcast over the image; two hidden layers of
/// width 8 with SiLU; three output channels. The prompt is not an input.
class NoiseSurrogate final : public ScoreOracle {
public:
    static constexpr int kInputChannels = 8;
    static constexpr int kHiddenChannels = 8;

    explicit NoiseSurrogate(std::uint64_t seed = 0, AdamHyper hyper = {});

    Image predict(const Image& noisy, int t, const GuidanceCondition& condition,
                  const PromptEmbedding& prompt) const override;
    Image predict(const Image& noisy, int t, const Image& depth) const;

    /// Mean squared error between prediction and noise over the samples, and
    /// its gradient with respect to every parameter (flattened in layer order).
    double loss_and_gradient(const std::vector<DiffusionSample>& samples,
                             const std::vector<Image>& depths, std::vector<double>* grad) const;

    /// One Adam step on a fixed set of samples; returns the pre-step loss.
    double train_on_samples(const std::vector<DiffusionSample>& samples, const std::vector<Image>& depths);

    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& flat);
    void set_zero();

    const std::vector<ConvLayer>& layers() const { return layers_; }
    const AdamState& adam_state() const { return adam_; }
    const AdamHyper& hyper() const { return hyper_; }
    void set_learning_rate(double lr) { hyper_.lr = lr; }

    void write(std::ostream& out) const;
    static NoiseSurrogate read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static NoiseSurrogate load(const std::filesystem::path& path);

    bool operator==(const NoiseSurrogate&) const;

private:
    std::vector<ConvLayer> layers_;
    AdamHyper hyper_;
    AdamState adam_;
};

/// Timestep embedding channels [sin(pi u), cos(pi u), sin(4 pi u), cos(4 pi u)], u = t / T.
std::vector<double> timestep_embedding(int t, int max_timestep = 1000);

/// One stochastic step of the surrogate's denoising objective: for every batch
/// element draw t, then fresh noise, and take one Adam step on the mean
/// squared error. Returns the pre-step loss. Throws InvalidInput on an empty batch.
double surrogate_train_step(NoiseSurrogate& surrogate, const std::vector<SurrogateExample>& batch,
                            const NoiseSchedule& schedule, Rng& rng);

}  // namespace mt3d
