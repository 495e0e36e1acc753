#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"
#include "mt3d/guidance/distillation.hpp"
#include "mt3d/moments/dgm.hpp"
#include "mt3d/optim/density.hpp"
#include "mt3d/optim/pipeline.hpp"
#include "mt3d/optim/trainer.hpp"
#include "mt3d/render/reference.hpp"
#include "mt3d/scene/prompt.hpp"
#include "mt3d/scene/toy_assets.hpp"

using namespace mt3d;
using Eigen::Matrix3d;
using Eigen::Vector3d;
using Eigen::Vector4d;

namespace fs = std::filesystem;

namespace {

Gaussian3D make_gaussian(const Vector3d& mean, double radius, double opacity = 0.5,
                         const Vector3d& color = Vector3d::Constant(0.5)) {
    return Gaussian3D::from_physical(mean, Vector3d::Constant(radius), Vector4d(1, 0, 0, 0), opacity, color);
}

/// Scene whose accumulated view-gradient mean of Gaussian i is norms[i].
GaussianScene scene_with_view_grads(const std::vector<double>& norms) {
    std::vector<Gaussian3D> gs;
    for (std::size_t i = 0; i < norms.size(); ++i) gs.push_back(make_gaussian(Vector3d(0.1 * i, 0, 0), 0.02));
    GaussianScene s(gs);
    s.reset_accumulators();
    for (std::size_t i = 0; i < norms.size(); ++i) {
        // Two passes averaging to the requested norm.
        s.view_grad_accum[i] = 2.0 * norms[i];
        s.view_grad_count[i] = 2;
    }
    return s;
}

/// Small, fast training setup on a toy asset.
TrainConfig small_config(int geometry, int texture, std::uint64_t seed = 3) {
    TrainConfig cfg;
    cfg.stage.geometry_steps = geometry;
    cfg.stage.texture_steps = texture;
    cfg.guidance.initial_gaussians = 384;
    cfg.guidance.intrinsics.width = cfg.guidance.intrinsics.height = 32;
    cfg.seed = seed;
    return cfg;
}

/// Density intervals short enough that every event fires inside a short texture stage.
void frequent_density_control(TrainConfig& cfg) {
    cfg.stage.densify_interval = 10;
    cfg.stage.compact_interval = 20;
    cfg.stage.prune_interval = 10;
    cfg.stage.densify_threshold = 1e-4;
}

std::string scene_bytes(const GaussianScene& scene) {
    const fs::path p = fs::temp_directory_path() / "mt3d_optim_scene.ply";
    save_gaussian_scene(p, scene);
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const ReferenceAsset& sphere() {
    static const ReferenceAsset asset = make_sphere_asset(4000);
    return asset;
}

}  // namespace

// ---- density control ----

TEST(DensifySplit, NormAboveThresholdSplitsAndBelowDoesNot) {
    StageConfig defaults;
    EXPECT_EQ(defaults.densify_threshold, 0.02);
    Rng rng(1);
    GaussianScene above = scene_with_view_grads({0.03});
    EXPECT_EQ(densify_split(above, defaults.densify_threshold, rng).size(), 2u);
    EXPECT_EQ(above.size(), 2u);
    GaussianScene below = scene_with_view_grads({0.01});
    densify_split(below, defaults.densify_threshold, rng);
    EXPECT_EQ(below.size(), 1u);
    GaussianScene exact = scene_with_view_grads({0.02});
    densify_split(exact, defaults.densify_threshold, rng);
    EXPECT_EQ(exact.size(), 1u);
}

TEST(DensifySplit, AllAboveThresholdDoublesTheScene) {
    Rng rng(2);
    GaussianScene s = scene_with_view_grads(std::vector<double>(7, 0.5));
    densify_split(s, 0.02, rng);
    EXPECT_EQ(s.size(), 14u);
}

TEST(DensifySplit, ChildrenInheritAndShrinkInPlace) {
    Rng rng(3);
    GaussianScene s = scene_with_view_grads({0.01, 0.05, 0.01});
    s.gaussians[1] = Gaussian3D::from_physical(Vector3d(1, 2, 3), Vector3d(0.1, 0.2, 0.3),
                                               Vector4d(0.9, 0.1, 0.2, 0.3), 0.7, Vector3d(0.1, 0.2, 0.3));
    const Gaussian3D parent = s.gaussians[1];
    const Gaussian3D first = s.gaussians[0], last = s.gaussians[2];
    const Provenance origin = densify_split(s, 0.02, rng);
    EXPECT_EQ(origin, (Provenance{0, -1, -1, 2}));
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s.gaussians[0].mean, first.mean);
    EXPECT_EQ(s.gaussians[3].mean, last.mean);
    for (int c = 1; c <= 2; ++c) {
        const Gaussian3D& child = s.gaussians[c];
        EXPECT_TRUE(child.scale().isApprox(parent.scale() / 1.6, 1e-12));
        EXPECT_EQ(child.rotation, parent.rotation);
        EXPECT_EQ(child.opacity_logit, parent.opacity_logit);
        EXPECT_EQ(child.color, parent.color);
    }
    EXPECT_NE(s.gaussians[1].mean, s.gaussians[2].mean);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s.view_grad_accum[i], 0.0);
        EXPECT_EQ(s.view_grad_count[i], 0);
    }
}

TEST(DensifySplit, ChildMeansFollowTheParentDensity) {
    const Gaussian3D parent = Gaussian3D::from_physical(Vector3d(0.5, -0.2, 0.1), Vector3d(0.3, 0.1, 0.05),
                                                        Vector4d(0.8, 0.3, -0.2, 0.4), 0.5, Vector3d::Zero());
    Rng rng(11);
    const int parents = 4000;
    GaussianScene s(std::vector<Gaussian3D>(parents, parent));
    s.reset_accumulators();
    for (int i = 0; i < parents; ++i) {
        s.view_grad_accum[i] = 1.0;
        s.view_grad_count[i] = 1;
    }
    densify_split(s, 0.02, rng);
    Vector3d mean = Vector3d::Zero();
    for (const auto& g : s.gaussians) mean += g.mean;
    mean /= static_cast<double>(s.size());
    Matrix3d cov = Matrix3d::Zero();
    for (const auto& g : s.gaussians) cov += (g.mean - parent.mean) * (g.mean - parent.mean).transpose();
    cov /= static_cast<double>(s.size());
    const Matrix3d expected = parent.covariance();
    EXPECT_LT((mean - parent.mean).norm(), 0.02);
    EXPECT_LT((cov - expected).norm(), 0.05 * expected.norm());
}

TEST(DensifyCompact, FillsTheGapBetweenTwoDistantGaussians) {
    GaussianScene s({make_gaussian(Vector3d::Zero(), 0.2, 0.4, Vector3d(1, 0, 0)),
                     make_gaussian(Vector3d(1, 0, 0), 0.3, 0.8, Vector3d(0, 0, 1))});
    const Provenance origin = densify_compact(s, 3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(origin, (Provenance{0, 1, -1}));
    const Gaussian3D& g = s.gaussians[2];
    // The gap spans [0.2, 0.7] on the x axis.
    EXPECT_NEAR(g.mean_scale(), 0.25, 1e-12);
    EXPECT_TRUE(g.mean.isApprox(Vector3d(0.45, 0, 0), 1e-12));
    EXPECT_NEAR(g.opacity(), 0.6, 1e-12);
    EXPECT_TRUE(g.color.isApprox(Vector3d(0.5, 0, 0.5), 1e-12));
}

TEST(DensifyCompact, TouchingGaussiansAreLeftAlone) {
    GaussianScene s({make_gaussian(Vector3d::Zero(), 0.2), make_gaussian(Vector3d::Zero(), 0.3)});
    const double sum = s.gaussians[0].mean_scale() + s.gaussians[1].mean_scale();
    s.gaussians[1].mean = Vector3d(sum, 0, 0);
    densify_compact(s, 3);
    EXPECT_EQ(s.size(), 2u);
}

TEST(DensifyCompact, DenseClusterIsUnchanged) {
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) gs.push_back(make_gaussian(Vector3d(0.1 * i, 0.1 * j, 0), 0.08));
    GaussianScene s(gs);
    const GaussianScene before = s;
    densify_compact(s, 3);
    ASSERT_EQ(s.size(), before.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.gaussians[i].mean, before.gaussians[i].mean);
}

TEST(Prune, RemovesLowOpacityAndLargeGaussians) {
    StageConfig defaults;
    EXPECT_EQ(defaults.prune_opacity, 0.05);
    EXPECT_EQ(defaults.prune_radius, 0.05);
    std::vector<Gaussian3D> gs(20, make_gaussian(Vector3d::Zero(), 0.01, 0.5));
    gs.push_back(make_gaussian(Vector3d(1, 0, 0), 0.01, 0.04));
    gs.push_back(make_gaussian(Vector3d(2, 0, 0), 0.06, 0.5));
    gs.push_back(make_gaussian(Vector3d(3, 0, 0), 0.01, 0.5));
    GaussianScene s(gs);
    const Provenance origin = prune(s, defaults.prune_opacity, defaults.prune_radius);
    ASSERT_EQ(s.size(), 21u);
    EXPECT_EQ(origin.back(), 22);
    EXPECT_EQ(s.gaussians.back().mean, Vector3d(3, 0, 0));
}

TEST(Prune, SurvivorsSatisfyBothThresholds) {
    Rng rng(5);
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 300; ++i)
        gs.push_back(make_gaussian(Vector3d(rng.uniform(), rng.uniform(), rng.uniform()), 0.005 + 0.07 * rng.uniform(),
                                   0.01 + 0.9 * rng.uniform()));
    GaussianScene s(gs);
    prune(s);
    ASSERT_GE(s.size(), 16u);
    for (const auto& g : s.gaussians) {
        EXPECT_GE(g.opacity(), 0.05);
        EXPECT_LE(g.mean_scale(), 0.05);
    }
}

TEST(Prune, FloorKeepsTheMostOpaqueGaussians) {
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 20; ++i) gs.push_back(make_gaussian(Vector3d(i, 0, 0), 0.01, 0.001 * (i + 1)));
    GaussianScene s(gs);
    const Provenance origin = prune(s, 0.05, 0.05, 16);
    ASSERT_EQ(s.size(), 16u);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(origin[k], static_cast<long>(k + 4));
}

// ---- schedules and defaults ----

TEST(StageConfig, DefaultsFollowTheDeclaredConstants) {
    StageConfig c;
    EXPECT_EQ(c.geometry_steps, 15000);
    EXPECT_EQ(c.texture_steps, 15000);
    EXPECT_EQ(c.densify_interval, 500);
    EXPECT_EQ(c.compact_interval, 1000);
    EXPECT_EQ(c.prune_interval, 500);
    EXPECT_EQ(c.lambda_p, 1.0);
    EXPECT_EQ(c.lambda_m, 100.0);
    EXPECT_EQ(lora_lambda(0), 0.0);
    EXPECT_DOUBLE_EQ(lora_lambda(5000), 0.75);
}

TEST(StageConfig, RejectsNonPositiveIntervalsAndThresholds) {
    StageConfig c;
    c.densify_interval = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.prune_opacity = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.geometry_steps = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Trainer, RejectsMoreInitialGaussiansThanAssetPoints) {
    TrainConfig cfg = small_config(1, 0);
    cfg.guidance.initial_gaussians = 100000;
    EXPECT_THROW(Trainer(sphere(), "a sphere", cfg), ConfigError);
}

TEST(Trainer, MeanLearningRateDecaysFromInitialToFinal) {
    TrainConfig cfg = small_config(3, 2);
    Trainer trainer(sphere(), "a sphere", cfg);
    EXPECT_DOUBLE_EQ(trainer.mean_learning_rate(), 1.6e-4);
    while (trainer.state().step < 4) trainer.step();
    EXPECT_NEAR(trainer.mean_learning_rate(), 1.6e-6, 1e-18);
}

// ---- loss assembly and alternation ----

TEST(Trainer, PixelGradientIsControlPlusWeightedMoment) {
    Trainer trainer(sphere(), "a sphere", small_config(5, 0));
    trainer.step();
    const StepGradients g = trainer.compute_gradients();
    const double lm = trainer.config().stage.lambda_m;
    for (std::size_t k = 0; k < g.pixel_grad.data.size(); ++k)
        ASSERT_EQ(g.pixel_grad.data[k], g.control_grad.data[k] + lm * g.moment_grad.data[k]);

    // The moment path recomputed on its own.
    const MomentLoss ml = moment_loss(g.render.rgb, g.reference.rgb, trainer.config().guidance.dgm);
    EXPECT_EQ(ml.loss, g.moment_loss);
    EXPECT_EQ(ml.grad.data, g.moment_grad.data);

    // Backward is linear: the two paths pulled back separately add up to the combined one.
    const auto& gc = trainer.config().guidance;
    const GaussianScene& scene = trainer.state().scene;
    const RenderGradients control = render_backward(scene, g.camera, gc.background, g.control_grad, gc.render);
    const RenderGradients moment = render_backward(scene, g.camera, gc.background, g.moment_grad, gc.render);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        GaussianGrad sum = control.gaussians[i];
        sum += moment.gaussians[i] * lm;
        const GaussianGrad& c = g.scene_grads.gaussians[i];
        err += (sum.mean - c.mean).squaredNorm() + (sum.color - c.color).squaredNorm() +
               (sum.log_scale - c.log_scale).squaredNorm() + (sum.rotation - c.rotation).squaredNorm() +
               std::pow(sum.opacity_logit - c.opacity_logit, 2);
        norm += c.mean.squaredNorm() + c.color.squaredNorm() + c.log_scale.squaredNorm() +
                c.rotation.squaredNorm() + c.opacity_logit * c.opacity_logit;
    }
    ASSERT_GT(norm, 0.0);
    EXPECT_LT(std::sqrt(err / norm), 1e-9);
}

TEST(Trainer, SurrogateAndSceneChangeOnlyInTheirOwnUpdates) {
    Trainer trainer(sphere(), "a sphere", small_config(5, 0));
    const auto scene_before = scene_bytes(trainer.state().scene);
    const NoiseSurrogate surrogate_before = trainer.state().surrogate;

    const StepGradients g = trainer.compute_gradients();
    EXPECT_EQ(scene_bytes(trainer.state().scene), scene_before);
    EXPECT_TRUE(trainer.state().surrogate == surrogate_before);

    trainer.apply_scene_update(g);
    const auto scene_after = scene_bytes(trainer.state().scene);
    EXPECT_NE(scene_after, scene_before);
    EXPECT_TRUE(trainer.state().surrogate == surrogate_before);

    trainer.update_surrogate(g);
    EXPECT_EQ(scene_bytes(trainer.state().scene), scene_after);
    EXPECT_FALSE(trainer.state().surrogate == surrogate_before);
}

TEST(Trainer, AblationWithoutExtraTermsIsPlainSds) {
    TrainConfig cfg = small_config(5, 0);
    cfg.stage.lambda_m = 0.0;
    cfg.stage.lambda_p = 0.0;
    cfg.guidance.lora_max = 0.0;
    Trainer trainer(sphere(), "a sphere", cfg);
    trainer.step();
    Rng rng = trainer.state().rng;
    const StepGradients g = trainer.compute_gradients();

    const auto& gc = cfg.guidance;
    const CameraPose cam = sample_camera(rng, gc.elevation, gc.azimuth, gc.radius, gc.intrinsics);
    ASSERT_EQ(cam, g.camera);
    const RenderedImage ref = render_reference(sphere(), cam, gc.background);
    const ReferenceScoreOracle oracle(sphere(), gc.schedule, gc.background);
    const PixelGuidance sds = sds_pixel_gradient(g.render.rgb, GuidanceCondition{cam, normalize_depth(ref.depth)},
                                                 oracle, gc.schedule, view_prompt("a sphere", cam), rng,
                                                 gc.guidance_scale);
    EXPECT_EQ(sds.grad.data, g.pixel_grad.data);
    EXPECT_TRUE(g.prior_grads.empty());
    const RenderGradients plain = render_backward(trainer.state().scene, cam, gc.background, sds.grad, gc.render);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        ASSERT_EQ(plain.gaussians[i].mean, g.scene_grads.gaussians[i].mean);
        ASSERT_EQ(plain.gaussians[i].color, g.scene_grads.gaussians[i].color);
    }
}

TEST(Trainer, AdamBuffersFollowDensityControl) {
    TrainConfig cfg = small_config(5, 25);
    frequent_density_control(cfg);
    Trainer trainer(sphere(), "a sphere", cfg);
    std::size_t events = 0;
    while (!trainer.done()) {
        const StepReport r = trainer.step();
        events += r.split + r.compacted + r.pruned;
        for (int g = 0; g < kParamGroups; ++g)
            ASSERT_EQ(trainer.state().adam[g].m.size(),
                      trainer.state().scene.size() * group_width(static_cast<ParamGroup>(g)));
    }
    EXPECT_GT(events, 0u);
}

TEST(Trainer, GeometryStageNeverChangesTheGaussianCount) {
    TrainConfig cfg = small_config(30, 0);
    frequent_density_control(cfg);
    Trainer trainer(sphere(), "a sphere", cfg);
    while (!trainer.done()) EXPECT_EQ(trainer.step().gaussians, 384u);
}

// ---- determinism and resume ----

TEST(Trainer, ZeroTextureStepsGivesTheGeometryStageResult) {
    // The mean learning rate decays over the whole run, so hold it constant to
    // make the two schedules agree.
    TrainConfig short_cfg = small_config(12, 0), long_cfg = small_config(12, 10);
    short_cfg.stage.lr.mean_final = long_cfg.stage.lr.mean_final = short_cfg.stage.lr.mean;
    Trainer geometry_only(sphere(), "a sphere", short_cfg);
    while (!geometry_only.done()) EXPECT_EQ(geometry_only.step().stage, Stage::kGeometry);
    Trainer full(sphere(), "a sphere", long_cfg);
    while (full.state().step < 12) full.step();
    EXPECT_EQ(scene_bytes(geometry_only.state().scene), scene_bytes(full.state().scene));
}

TEST(Trainer, SameSeedGivesIdenticalScenes) {
    TrainConfig cfg = small_config(10, 20);
    frequent_density_control(cfg);
    std::vector<std::string> bytes;
    for (std::uint64_t seed : {7u, 7u, 8u}) {
        cfg.seed = seed;
        Trainer t(sphere(), "a sphere", cfg);
        while (!t.done()) t.step();
        bytes.push_back(scene_bytes(t.state().scene));
    }
    EXPECT_EQ(bytes[0], bytes[1]);
    EXPECT_NE(bytes[0], bytes[2]);
}

TEST(Trainer, ResumeIsBitIdenticalToUninterruptedRun) {
    TrainConfig cfg = small_config(40, 80);
    frequent_density_control(cfg);
    const fs::path dir = fs::temp_directory_path() / "mt3d_optim_resume";
    fs::remove_all(dir);

    Trainer uninterrupted(sphere(), "a sphere", cfg);
    for (std::int64_t resume_at : {15, 60}) {
        Trainer first(sphere(), "a sphere", cfg);
        while (first.state().step < resume_at) first.step();
        first.save_checkpoint(dir / std::to_string(resume_at));

        Trainer resumed(sphere(), "a sphere", cfg);
        resumed.load_checkpoint(dir / std::to_string(resume_at));
        ASSERT_EQ(resumed.state().step, resume_at);
        std::vector<StepReport> a, b;
        while (resumed.state().step < resume_at + 100 && !resumed.done()) b.push_back(resumed.step());
        while (first.state().step < resume_at + 100 && !first.done()) a.push_back(first.step());
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(a[k].total_loss, b[k].total_loss);
            EXPECT_EQ(a[k].gaussians, b[k].gaussians);
        }
        EXPECT_EQ(scene_bytes(first.state().scene), scene_bytes(resumed.state().scene));
        EXPECT_TRUE(first.state().surrogate == resumed.state().surrogate);
        EXPECT_EQ(first.state().rng.serialize(), resumed.state().rng.serialize());
        EXPECT_EQ(first.state().adam, resumed.state().adam);
    }
}

TEST(Trainer, TotalLossAverageDecreasesOnTheSphere) {
    TrainConfig cfg;
    cfg.stage.geometry_steps = 500;
    cfg.stage.texture_steps = 0;
    cfg.guidance.initial_gaussians = 2048;
    cfg.guidance.intrinsics.width = cfg.guidance.intrinsics.height = 32;
    cfg.seed = 1;
    Trainer trainer(make_sphere_asset(), "a sphere", cfg);
    double at50 = 0.0, at500 = 0.0;
    while (!trainer.done()) {
        const StepReport r = trainer.step();
        if (r.step == 50) at50 = r.total_ema;
        if (r.step == 500) at500 = r.total_ema;
    }
    EXPECT_LT(at500, at50);
}

TEST(Trainer, NonFiniteStateAbortsAndLeavesTheStateUntouched) {
    Trainer trainer(sphere(), "a sphere", small_config(5, 0));
    trainer.mutable_state().scene.gaussians[0].color = Vector3d(std::nan(""), 0, 0);
    const std::string rng_before = trainer.state().rng.serialize();
    EXPECT_THROW(trainer.step(), NumericalAbort);
    EXPECT_EQ(trainer.state().step, 0);
    EXPECT_EQ(trainer.state().rng.serialize(), rng_before);
}

// ---- run directory ----

TEST(TrainToDirectory, WritesLogFramesCheckpointAndFinalScene) {
    TrainConfig cfg = small_config(6, 6);
    const fs::path dir = fs::temp_directory_path() / "mt3d_optim_run";
    fs::remove_all(dir);
    Trainer trainer(sphere(), "a sphere", cfg);
    RunOutputConfig out;
    out.directory = dir;
    out.frame_interval = 5;
    out.checkpoint_interval = 4;
    const RunSummary summary = train_to_directory(trainer, out);
    EXPECT_EQ(summary.final_step, 12);
    EXPECT_TRUE(fs::exists(dir / "final.ply"));
    EXPECT_TRUE(fs::exists(dir / "frames" / "step_000005.png"));
    EXPECT_TRUE(fs::exists(dir / "frames" / "step_000010.png"));
    EXPECT_TRUE(fs::exists(dir / "checkpoint" / "optimizer.bin"));
    std::ifstream log(dir / "metrics.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line);) ++lines;
    EXPECT_EQ(lines, 12);
}

TEST(TrainToDirectory, ResumedRunMatchesUninterruptedRun) {
    TrainConfig cfg = small_config(8, 16);
    frequent_density_control(cfg);
    const fs::path full_dir = fs::temp_directory_path() / "mt3d_optim_full";
    const fs::path split_dir = fs::temp_directory_path() / "mt3d_optim_split";
    fs::remove_all(full_dir);
    fs::remove_all(split_dir);
    RunOutputConfig out;
    out.checkpoint_interval = 5;
    out.frame_interval = 0;

    Trainer full(sphere(), "a sphere", cfg);
    out.directory = full_dir;
    train_to_directory(full, out);

    // Stop after 13 steps; a stray record from a crashed step 14 must be dropped on resume.
    Trainer part(sphere(), "a sphere", cfg);
    out.directory = split_dir;
    out.stop_at_step = 13;
    train_to_directory(part, out);
    EXPECT_FALSE(fs::exists(split_dir / "final.ply"));
    {
        StepReport stray;
        stray.step = 14;
        std::ofstream(split_dir / "metrics.jsonl", std::ios::app) << metrics_record(stray) << '\n';
    }
    out.stop_at_step = 0;
    Trainer resumed(sphere(), "a sphere", cfg);
    out.resume = true;
    const RunSummary s = train_to_directory(resumed, out);
    EXPECT_EQ(s.first_step, 13);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    EXPECT_EQ(slurp(full_dir / "final.ply"), slurp(split_dir / "final.ply"));
    EXPECT_EQ(slurp(full_dir / "metrics.jsonl"), slurp(split_dir / "metrics.jsonl"));
}
