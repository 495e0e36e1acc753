#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>

#include "mt3d/core/rng.hpp"
#include "mt3d/guidance/oracle.hpp"
#include "mt3d/guidance/surrogate.hpp"
#include "mt3d/optim/adam.hpp"
#include "mt3d/optim/config.hpp"
#include "mt3d/optim/density.hpp"
#include "mt3d/render/renderer.hpp"
#include "mt3d/scene/asset.hpp"
#include "mt3d/scene/kdtree.hpp"

namespace mt3d {

enum class Stage { kGeometry, kTexture };
std::string_view stage_name(Stage stage);

/// Parameter groups of the scene, in the order of TrainState::adam.
enum class ParamGroup { kMean, kScale, kRotation, kOpacity, kColor };
inline constexpr int kParamGroups = 5;
int group_width(ParamGroup group);

/// Everything that evolves during training; serializing it is enough for a
/// bit-identical continuation.
struct TrainState {
    GaussianScene scene;
    NoiseSurrogate surrogate;
    std::int64_t step = 0;
    double control_ema = 0.0;
    double moment_ema = 0.0;
    double total_ema = 0.0;
    bool ema_started = false;
    std::array<AdamState, kParamGroups> adam;
    Rng rng;
};

/// Scalars reported for one training step.
struct StepReport {
    std::int64_t step = 0;  // 1-based index of the completed step
    Stage stage = Stage::kGeometry;
    int t = 0;
    double lora_lambda = 0.0;
    /// 0.5 * mean squared difference between the render and the reference render.
    double control_loss = 0.0;
    double moment_loss = 0.0;
    /// control_loss + lambda_m * moment_loss.
    double total_loss = 0.0;
    double control_ema = 0.0;
    double moment_ema = 0.0;
    double total_ema = 0.0;
    double surrogate_loss = 0.0;
    std::size_t gaussians = 0;
    std::size_t split = 0;
    std::size_t compacted = 0;
    std::size_t pruned = 0;
};

/// Gradients of one step before anything is updated.
struct StepGradients {
    CameraPose camera;
    PromptEmbedding prompt;
    RenderedImage render;
    RenderedImage reference;
    Image depth_condition;
    int t = 0;
    double lora_lambda = 0.0;
    /// Pixel gradient of the guidance (control) term.
    Image control_grad;
    /// Pixel gradient of the moment loss, before lambda_m.
    Image moment_grad;
    /// control_grad + lambda_m * moment_grad, the single input to render_backward.
    Image pixel_grad;
    double moment_loss = 0.0;
    double control_loss = 0.0;
    RenderGradients scene_grads;
    /// Point prior gradient per mean (empty when lambda_p is 0).
    std::vector<Eigen::Vector3d> prior_grads;
};

/// The two-stage optimization loop over one reference asset.
class Trainer {
public:
    /// Initializes the scene from the asset's point cloud and seeds every
    /// random choice from config.seed. Throws ConfigError for invalid configs.
    Trainer(ReferenceAsset asset, std::string prompt, TrainConfig config);

    const TrainConfig& config() const { return config_; }
    const TrainState& state() const { return state_; }
    TrainState& mutable_state() { return state_; }
    const ReferenceAsset& asset() const { return oracle_.asset(); }
    const std::string& prompt() const { return prompt_; }

    bool done() const { return state_.step >= config_.stage.total_steps(); }
    Stage stage() const;
    double mean_learning_rate() const;

    /// One full step: gradients, Adam update of the scene, surrogate update and,
    /// in the texture stage, density control. Throws NumericalAbort when a loss
    /// or gradient is not finite; the state is left as before the step.
    StepReport step();

    /// Samples a camera and computes every gradient of the current step.
    /// Consumes the rng but changes nothing else.
    StepGradients compute_gradients();
    /// Adam step on the scene parameters only.
    void apply_scene_update(const StepGradients& grads);
    /// One denoising step of the surrogate on the step's render.
    double update_surrogate(const StepGradients& grads);

    /// Writes scene.ply, surrogate.bin and optimizer.bin into dir.
    void save_checkpoint(const std::filesystem::path& dir) const;
    /// Replaces the state with a checkpoint written by save_checkpoint.
    void load_checkpoint(const std::filesystem::path& dir);

private:
    void remap_optimizer(const Provenance& origin);

    std::string prompt_;
    TrainConfig config_;
    ReferenceScoreOracle oracle_;
    KdTree reference_tree_;
    TrainState state_;
};

/// Writes and reads the optimizer part of a checkpoint (step, moving averages,
/// Adam buffers, rng and densification statistics).
void write_optimizer_state(std::ostream& out, const TrainState& state);
void read_optimizer_state(std::istream& in, TrainState& state);

}  // namespace mt3d
