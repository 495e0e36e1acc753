#include "mt3d/optim/trainer.hpp"

#include <cmath>
#include <fstream>

#include "mt3d/core/binary_io.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/guidance/distillation.hpp"
#include "mt3d/moments/dgm.hpp"
#include "mt3d/render/reference.hpp"
#include "mt3d/scene/prompt.hpp"

namespace mt3d {

namespace {

constexpr std::uint64_t kSurrogateSeedSalt = 0x9e3779b97f4a7c15ull;

bool all_finite(const Image& img) {
    for (double v : img.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_range(const Range& r, const char* name, bool positive) {
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi))
        throw ConfigError(std::string("guidance: invalid ") + name + " range");
    if (positive && !(r.lo > 0.0)) throw ConfigError(std::string("guidance: ") + name + " must be positive");
}

/// Copies one parameter group out of the scene, or writes it back.
void gather(const GaussianScene& scene, ParamGroup group, std::vector<double>& out) {
    const int w = group_width(group);
    out.resize(scene.size() * w);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian3D& g = scene.gaussians[i];
        double* p = out.data() + i * w;
        switch (group) {
            case ParamGroup::kMean: for (int k = 0; k < 3; ++k) p[k] = g.mean[k]; break;
            case ParamGroup::kScale: for (int k = 0; k < 3; ++k) p[k] = g.log_scale[k]; break;
            case ParamGroup::kRotation: for (int k = 0; k < 4; ++k) p[k] = g.rotation[k]; break;
            case ParamGroup::kOpacity: p[0] = g.opacity_logit; break;
            case ParamGroup::kColor: for (int k = 0; k < 3; ++k) p[k] = g.color[k]; break;
        }
    }
}

void scatter(GaussianScene& scene, ParamGroup group, const std::vector<double>& in) {
    const int w = group_width(group);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        Gaussian3D& g = scene.gaussians[i];
        const double* p = in.data() + i * w;
        switch (group) {
            case ParamGroup::kMean: for (int k = 0; k < 3; ++k) g.mean[k] = p[k]; break;
            case ParamGroup::kScale: for (int k = 0; k < 3; ++k) g.log_scale[k] = p[k]; break;
            case ParamGroup::kRotation: for (int k = 0; k < 4; ++k) g.rotation[k] = p[k]; break;
            case ParamGroup::kOpacity: g.opacity_logit = p[0]; break;
            case ParamGroup::kColor: for (int k = 0; k < 3; ++k) g.color[k] = std::clamp(p[k], 0.0, 1.0); break;
        }
    }
}

void gather_grad(const RenderGradients& grads, const std::vector<Eigen::Vector3d>& prior, ParamGroup group,
                 std::vector<double>& out) {
    const int w = group_width(group);
    out.resize(grads.size() * w);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const GaussianGrad& g = grads.gaussians[i];
        double* p = out.data() + i * w;
        switch (group) {
            case ParamGroup::kMean:
                for (int k = 0; k < 3; ++k) p[k] = g.mean[k] + (prior.empty() ? 0.0 : prior[i][k]);
                break;
            case ParamGroup::kScale: for (int k = 0; k < 3; ++k) p[k] = g.log_scale[k]; break;
            case ParamGroup::kRotation: for (int k = 0; k < 4; ++k) p[k] = g.rotation[k]; break;
            case ParamGroup::kOpacity: p[0] = g.opacity_logit; break;
            case ParamGroup::kColor: for (int k = 0; k < 3; ++k) p[k] = g.color[k]; break;
        }
    }
}

constexpr std::array<ParamGroup, kParamGroups> kGroups = {ParamGroup::kMean, ParamGroup::kScale,
                                                          ParamGroup::kRotation, ParamGroup::kOpacity,
                                                          ParamGroup::kColor};

}  // namespace

void StageConfig::validate() const {
    if (geometry_steps < 0 || texture_steps < 0) throw ConfigError("stage: step counts must be >= 0");
    if (densify_interval <= 0 || compact_interval <= 0 || prune_interval <= 0)
        throw ConfigError("stage: intervals must be > 0");
    if (!(densify_threshold > 0.0 && prune_opacity > 0.0 && prune_radius > 0.0))
        throw ConfigError("stage: thresholds must be > 0");
    if (compact_neighbors < 1) throw ConfigError("stage: compact_neighbors must be >= 1");
    if (prune_min_survivors < 1) throw ConfigError("stage: prune_min_survivors must be >= 1");
    if (!(split_scale_divisor > 1.0)) throw ConfigError("stage: split_scale_divisor must be > 1");
    if (!(lambda_p >= 0.0 && lambda_m >= 0.0)) throw ConfigError("stage: loss weights must be >= 0");
    for (double lr : {this->lr.mean, this->lr.mean_final, this->lr.scale, this->lr.rotation, this->lr.opacity,
                      this->lr.color})
        if (!(lr >= 0.0 && std::isfinite(lr))) throw ConfigError("stage: learning rates must be finite and >= 0");
    if ((this->lr.mean == 0.0) != (this->lr.mean_final == 0.0))
        throw ConfigError("stage: mean and mean_final learning rates must both be zero or both positive");
}

void GuidanceConfig::validate() const {
    schedule.validate();
    if (!(guidance_scale >= 0.0)) throw ConfigError("guidance: guidance_scale must be >= 0");
    if (!(lora_max >= 0.0 && lora_max <= 1.0)) throw ConfigError("guidance: lora_max must lie in [0, 1]");
    if (lora_ramp_steps < 0) throw ConfigError("guidance: lora_ramp_steps must be >= 0");
    if (!(surrogate_lr >= 0.0)) throw ConfigError("guidance: surrogate_lr must be >= 0");
    check_range(elevation, "elevation", false);
    check_range(azimuth, "azimuth", false);
    check_range(radius, "radius", true);
    CameraPose probe;
    probe.fov_y = intrinsics.fov_y;
    probe.width = intrinsics.width;
    probe.height = intrinsics.height;
    probe.near = intrinsics.near;
    probe.far = intrinsics.far;
    probe.validate();
    dgm.validate();
    if (initial_gaussians < 1) throw ConfigError("guidance: initial_gaussians must be >= 1");
    if (!(loss_ema > 0.0 && loss_ema <= 1.0)) throw ConfigError("guidance: loss_ema must lie in (0, 1]");
}

std::string_view stage_name(Stage stage) { return stage == Stage::kGeometry ? "geometry" : "texture"; }

int group_width(ParamGroup group) {
    switch (group) {
        case ParamGroup::kRotation: return 4;
        case ParamGroup::kOpacity: return 1;
        default: return 3;
    }
}

Trainer::Trainer(ReferenceAsset asset, std::string prompt, TrainConfig config)
    : prompt_(std::move(prompt)),
      config_(std::move(config)),
      oracle_((config_.validate(), std::move(asset)), config_.guidance.schedule, config_.guidance.background),
      reference_tree_(oracle_.asset().points) {
    if (prompt_.empty()) throw InvalidInput("trainer: empty prompt");
    if (config_.guidance.initial_gaussians > oracle_.asset().points.size())
        throw ConfigError("trainer: initial_gaussians (" + std::to_string(config_.guidance.initial_gaussians) +
                          ") exceeds the asset's " + std::to_string(oracle_.asset().points.size()) + " points");
    state_.scene = init_from_pointcloud(oracle_.asset(), config_.guidance.initial_gaussians);
    state_.surrogate = NoiseSurrogate(config_.seed ^ kSurrogateSeedSalt, AdamHyper{config_.guidance.surrogate_lr});
    state_.rng = Rng(config_.seed);
    for (ParamGroup g : kGroups) state_.adam[static_cast<int>(g)].resize(state_.scene.size() * group_width(g));
}

Stage Trainer::stage() const {
    return state_.step < config_.stage.geometry_steps ? Stage::kGeometry : Stage::kTexture;
}

double Trainer::mean_learning_rate() const {
    const auto& lr = config_.stage.lr;
    const int total = config_.stage.total_steps();
    if (lr.mean == 0.0 || total <= 1) return lr.mean;
    const double u = std::min(1.0, static_cast<double>(state_.step) / (total - 1));
    return lr.mean * std::pow(lr.mean_final / lr.mean, u);
}

StepGradients Trainer::compute_gradients() {
    const auto& gc = config_.guidance;
    const auto& sc = config_.stage;
    TrainState& st = state_;
    StepGradients out;
    out.camera = sample_camera(st.rng, gc.elevation, gc.azimuth, gc.radius, gc.intrinsics);
    out.prompt = view_prompt(prompt_, out.camera);
    const RenderPlan plan(st.scene, out.camera, gc.render);
    out.render = render(plan, gc.background);
    out.reference = render_reference(oracle_.asset(), out.camera, gc.background);
    out.depth_condition = normalize_depth(out.reference.depth);
    out.lora_lambda = lora_lambda(st.step, gc.lora_max, gc.lora_ramp_steps);

    const GuidanceCondition condition{out.camera, out.depth_condition};
    PixelGuidance guide = vsd_pixel_gradient(out.render.rgb, condition, oracle_, st.surrogate, gc.schedule,
                                             out.prompt, out.lora_lambda, st.rng, gc.guidance_scale);
    out.t = guide.t;
    out.control_grad = std::move(guide.grad);

    double sq = 0.0;
    for (std::size_t k = 0; k < out.render.rgb.data.size(); ++k) {
        const double d = out.render.rgb.data[k] - out.reference.rgb.data[k];
        sq += d * d;
    }
    out.control_loss = 0.5 * sq / static_cast<double>(out.render.rgb.data.size());

    out.pixel_grad = out.control_grad;
    if (sc.lambda_m > 0.0) {
        MomentLoss ml = moment_loss(out.render.rgb, out.reference.rgb, gc.dgm);
        out.moment_loss = ml.loss;
        out.moment_grad = std::move(ml.grad);
        for (std::size_t k = 0; k < out.pixel_grad.data.size(); ++k)
            out.pixel_grad.data[k] += sc.lambda_m * out.moment_grad.data[k];
    } else {
        out.moment_grad = Image(out.render.width, out.render.height, 3);
    }
    out.scene_grads = render_backward(plan, st.scene, gc.background, out.pixel_grad);
    if (sc.lambda_p > 0.0)
        out.prior_grads = pointcloud_prior_gradient(st.scene, reference_tree_, gc.schedule, st.rng, sc.lambda_p);
    return out;
}

void Trainer::apply_scene_update(const StepGradients& grads) {
    const auto& lr = config_.stage.lr;
    std::vector<double> params, g;
    for (ParamGroup group : kGroups) {
        AdamHyper hyper;
        switch (group) {
            case ParamGroup::kMean: hyper.lr = mean_learning_rate(); break;
            case ParamGroup::kScale: hyper.lr = lr.scale; break;
            case ParamGroup::kRotation: hyper.lr = lr.rotation; break;
            case ParamGroup::kOpacity: hyper.lr = lr.opacity; break;
            case ParamGroup::kColor: hyper.lr = lr.color; break;
        }
        gather(state_.scene, group, params);
        gather_grad(grads.scene_grads, grads.prior_grads, group, g);
        adam_update(params, g, state_.adam[static_cast<int>(group)], hyper);
        scatter(state_.scene, group, params);
    }
}

double Trainer::update_surrogate(const StepGradients& grads) {
    const std::vector<SurrogateExample> batch{{grads.render.rgb, grads.depth_condition, grads.prompt}};
    return surrogate_train_step(state_.surrogate, batch, config_.guidance.schedule, state_.rng);
}

void Trainer::remap_optimizer(const Provenance& origin) {
    for (ParamGroup group : kGroups) {
        const int w = group_width(group);
        AdamState& a = state_.adam[static_cast<int>(group)];
        AdamState next;
        next.step = a.step;
        next.m.assign(origin.size() * w, 0.0);
        next.v.assign(origin.size() * w, 0.0);
        for (std::size_t i = 0; i < origin.size(); ++i) {
            if (origin[i] < 0) continue;
            for (int k = 0; k < w; ++k) {
                next.m[i * w + k] = a.m[origin[i] * w + k];
                next.v[i * w + k] = a.v[origin[i] * w + k];
            }
        }
        a = std::move(next);
    }
}

StepReport Trainer::step() {
    if (done()) throw ContractError("trainer: all steps already taken");
    const auto& sc = config_.stage;
    const Rng rng_before = state_.rng;
    StepReport rep;
    rep.stage = stage();

    StepGradients grads;
    try {
        grads = compute_gradients();
    } catch (const RenderError& e) {
        state_.rng = rng_before;
        throw NumericalAbort("step " + std::to_string(state_.step + 1) + " (" + std::string(stage_name(rep.stage)) +
                             "): " + e.what());
    }
    const double total = grads.control_loss + sc.lambda_m * grads.moment_loss;
    bool finite = std::isfinite(total) && all_finite(grads.pixel_grad) && grads.scene_grads.finite();
    for (const auto& p : grads.prior_grads) finite = finite && p.allFinite();
    if (!finite) {
        state_.rng = rng_before;
        throw NumericalAbort("step " + std::to_string(state_.step + 1) + " (" + std::string(stage_name(rep.stage)) +
                             "): non-finite loss or gradient (control " + std::to_string(grads.control_loss) +
                             ", moment " + std::to_string(grads.moment_loss) + ", t " + std::to_string(grads.t) + ")");
    }
    if (rep.stage == Stage::kTexture) accumulate_view_gradients(state_.scene, grads.scene_grads);
    apply_scene_update(grads);
    rep.surrogate_loss = update_surrogate(grads);

    state_.step += 1;
    state_.scene.step_counter = state_.step;
    // Density control never runs after the last step, so the final scene is a trained one.
    if (rep.stage == Stage::kTexture && !done()) {
        const std::int64_t k = state_.step - sc.geometry_steps;
        if (k % sc.densify_interval == 0) {
            const std::size_t before = state_.scene.size();
            const Provenance origin = densify_split(state_.scene, sc.densify_threshold, state_.rng,
                                                    sc.split_scale_divisor);
            rep.split = (origin.size() - before);
            remap_optimizer(origin);
        }
        if (k % sc.compact_interval == 0) {
            const std::size_t before = state_.scene.size();
            const Provenance origin = densify_compact(state_.scene, sc.compact_neighbors);
            rep.compacted = origin.size() - before;
            remap_optimizer(origin);
        }
        if (k % sc.prune_interval == 0) {
            const std::size_t before = state_.scene.size();
            const Provenance origin = prune(state_.scene, sc.prune_opacity, sc.prune_radius,
                                            static_cast<std::size_t>(sc.prune_min_survivors));
            rep.pruned = before - origin.size();
            remap_optimizer(origin);
        }
    }

    const double a = config_.guidance.loss_ema;
    if (!state_.ema_started) {
        state_.control_ema = grads.control_loss;
        state_.moment_ema = grads.moment_loss;
        state_.total_ema = total;
        state_.ema_started = true;
    } else {
        state_.control_ema += a * (grads.control_loss - state_.control_ema);
        state_.moment_ema += a * (grads.moment_loss - state_.moment_ema);
        state_.total_ema += a * (total - state_.total_ema);
    }
    rep.step = state_.step;
    rep.t = grads.t;
    rep.lora_lambda = grads.lora_lambda;
    rep.control_loss = grads.control_loss;
    rep.moment_loss = grads.moment_loss;
    rep.total_loss = total;
    rep.control_ema = state_.control_ema;
    rep.moment_ema = state_.moment_ema;
    rep.total_ema = state_.total_ema;
    rep.gaussians = state_.scene.size();
    return rep;
}

namespace {
constexpr char kOptimizerMagic[9] = "MT3DOPT1";
}

void write_optimizer_state(std::ostream& out, const TrainState& st) {
    binary::put_magic(out, kOptimizerMagic);
    binary::put_u64(out, static_cast<std::uint64_t>(st.step));
    binary::put_u64(out, static_cast<std::uint64_t>(st.scene.step_counter));
    binary::put_f64(out, st.control_ema);
    binary::put_f64(out, st.moment_ema);
    binary::put_f64(out, st.total_ema);
    binary::put_u32(out, st.ema_started ? 1u : 0u);
    binary::put_string(out, st.rng.serialize());
    binary::put_u32(out, kParamGroups);
    for (const AdamState& a : st.adam) write_adam_state(out, a);
    binary::put_f64s(out, st.scene.view_grad_accum);
    std::vector<double> counts(st.scene.view_grad_count.begin(), st.scene.view_grad_count.end());
    binary::put_f64s(out, counts);
    if (!out) throw ConfigError("optimizer state: write failed");
}

void read_optimizer_state(std::istream& in, TrainState& st) {
    binary::expect_magic(in, kOptimizerMagic, "optimizer state");
    st.step = static_cast<std::int64_t>(binary::get_u64(in));
    st.scene.step_counter = static_cast<std::int64_t>(binary::get_u64(in));
    st.control_ema = binary::get_f64(in);
    st.moment_ema = binary::get_f64(in);
    st.total_ema = binary::get_f64(in);
    st.ema_started = binary::get_u32(in) != 0;
    st.rng.deserialize(binary::get_string(in));
    if (binary::get_u32(in) != kParamGroups) throw InvalidInput("optimizer state: wrong group count");
    for (int g = 0; g < kParamGroups; ++g) {
        st.adam[g] = read_adam_state(in);
        const std::size_t expected = st.scene.size() * group_width(static_cast<ParamGroup>(g));
        if (st.adam[g].m.size() != expected || st.adam[g].v.size() != expected)
            throw InvalidInput("optimizer state: Adam buffers do not match the scene size");
    }
    st.scene.view_grad_accum = binary::get_f64s(in);
    const auto counts = binary::get_f64s(in);
    if (st.scene.view_grad_accum.size() != st.scene.size() || counts.size() != st.scene.size())
        throw InvalidInput("optimizer state: densification statistics do not match the scene size");
    st.scene.view_grad_count.assign(counts.begin(), counts.end());
}

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    save_gaussian_scene(dir / "scene.ply", state_.scene);
    state_.surrogate.save(dir / "surrogate.bin");
    std::ofstream out(dir / "optimizer.bin", std::ios::binary);
    if (!out) throw ConfigError("checkpoint: cannot write " + (dir / "optimizer.bin").string());
    write_optimizer_state(out, state_);
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
    TrainState next;
    next.scene = load_gaussian_scene(dir / "scene.ply");
    next.surrogate = NoiseSurrogate::load(dir / "surrogate.bin");
    std::ifstream in(dir / "optimizer.bin", std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open " + (dir / "optimizer.bin").string());
    read_optimizer_state(in, next);
    state_ = std::move(next);
}

}  // namespace mt3d
