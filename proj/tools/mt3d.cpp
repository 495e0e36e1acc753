// Command-line entry point: retrieve, optimize, render and eval subcommands.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical abort,
// 1 anything unexpected.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mt3d/cli/run_config.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/core/parallel.hpp"
#include "mt3d/eval/report.hpp"
#include "mt3d/optim/pipeline.hpp"
#include "mt3d/render/png_io.hpp"

namespace fs = std::filesystem;
using namespace mt3d;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr double kDeg = M_PI / 180.0;

fs::path catalog_or_env(const fs::path& given) {
    if (!given.empty()) return given;
    if (const char* env = std::getenv("MT3D_CATALOG"); env && *env) return env;
    throw ConfigError("no catalog given: pass --catalog or set MT3D_CATALOG");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- retrieve ----

struct RetrieveArgs {
    std::string prompt;
    fs::path catalog;
    int top = 5;
    bool json = false;
};

int cmd_retrieve(const RetrieveArgs& a) {
    const Catalog catalog = load_catalog(catalog_or_env(a.catalog));
    const RetrievalResult r = retrieve(a.prompt, catalog);
    const std::size_t shown = a.top > 0 ? std::min<std::size_t>(a.top, r.ranking.size()) : r.ranking.size();
    if (a.json) {
        Json j;
        j["index"] = r.index;
        j["asset"] = r.entry->asset.string();
        j["caption"] = r.entry->caption;
        Json ranking = Json::array();
        for (std::size_t k = 0; k < shown; ++k) {
            const auto& e = catalog.entries[r.ranking[k].index];
            ranking.push_back({{"index", r.ranking[k].index}, {"similarity", r.ranking[k].similarity},
                               {"caption", e.caption}, {"asset", e.asset.string()}});
        }
        j["ranking"] = ranking;
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }
    for (std::size_t k = 0; k < shown; ++k) {
        const auto& e = catalog.entries[r.ranking[k].index];
        std::printf("%.6f  %s  (%s)\n", r.ranking[k].similarity, e.caption.c_str(), e.asset.string().c_str());
    }
    return kExitOk;
}

// ---- optimize ----

struct OptimizeArgs {
    fs::path config;
    fs::path output;
    std::optional<std::uint64_t> seed;
    bool resume = false;
    bool dry_run = false;
    bool json = false;
};

int cmd_optimize(const OptimizeArgs& a) {
    RunConfig cfg = load_run_config(a.config);
    if (a.seed) cfg.train.seed = *a.seed;
    if (!a.output.empty()) cfg.output = a.output;
    cfg.run.directory = cfg.output;
    cfg.run.resume = a.resume;
    cfg.catalog = catalog_or_env(cfg.catalog);
    if (cfg.prompt.empty()) throw ConfigError("config: prompt must not be empty");
    cfg.validate();

    fs::create_directories(cfg.output);
    std::ofstream(cfg.output / "config.resolved.json") << resolved_config_json(cfg);

    const Catalog catalog = load_catalog(cfg.catalog);
    const RetrievalResult retrieval = retrieve(cfg.prompt, catalog);
    write_retrieval_json(cfg.output / "retrieval.json", cfg.prompt, catalog, retrieval);
    const ReferenceAsset asset = load_reference_asset(retrieval.entry->asset, retrieval.entry->caption);

    if (a.dry_run) {
        const Trainer trainer(asset, cfg.prompt, cfg.train);
        write_png_rgb(cfg.output / "dry_run.png",
                      turntable_strip(trainer.state().scene, cfg.train.guidance, cfg.run.frame_views));
        std::printf("config ok; asset %s; %zu initial gaussians; wrote %s\n", retrieval.entry->asset.string().c_str(),
                    trainer.state().scene.size(), (cfg.output / "dry_run.png").string().c_str());
        return kExitOk;
    }

    Trainer trainer(asset, cfg.prompt, cfg.train);
    const RunSummary run = train_to_directory(trainer, cfg.run);
    const ReportSummary report = metrics_report(cfg.output / "metrics.jsonl", &trainer.state().scene, &asset,
                                                cfg.output / "report", cfg.report);
    if (a.json) {
        std::cout << read_file(cfg.output / "report" / "report.json");
    } else {
        std::printf("steps %lld..%lld, %zu gaussians, final scene %s\n", static_cast<long long>(run.first_step),
                    static_cast<long long>(run.final_step), trainer.state().scene.size(),
                    run.final_scene.string().c_str());
        if (report.iou && report.iou->mean) std::printf("silhouette iou %.4f\n", *report.iou->mean);
        if (report.janus)
            std::printf("janus ratio %.4f thin %.3f %s\n", report.janus->ratio, report.janus->thin_score,
                        report.janus->inconsistent ? "inconsistent" : "consistent");
    }
    return kExitOk;
}

// ---- render ----

struct RenderArgs {
    fs::path scene;
    fs::path out;
    double azimuth = 0.0;
    double elevation = 15.0;
    double radius = 3.0;
    double fov = 40.0;
    int width = 256;
    int height = 256;
    std::vector<double> background{0.0, 0.0, 0.0};
    int turntable = 0;
    bool depth = false;
};

std::string turntable_name(int v, double azimuth_deg) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "turntable_%02d_az%06.2f.png", v, azimuth_deg);
    return buf;
}

int cmd_render(const RenderArgs& a) {
    if (a.background.size() != 3) throw ConfigError("--background needs three values");
    const GaussianScene scene = load_gaussian_scene(a.scene);
    CameraIntrinsics in;
    in.width = a.width;
    in.height = a.height;
    in.fov_y = a.fov * kDeg;
    const Eigen::Vector3d bg(a.background[0], a.background[1], a.background[2]);
    fs::create_directories(a.out);

    std::vector<std::pair<std::string, double>> views;
    if (a.turntable > 0) {
        for (int v = 0; v < a.turntable; ++v) {
            const double az = a.azimuth + 360.0 * v / a.turntable;
            views.emplace_back(turntable_name(v, az), az);
        }
    } else {
        views.emplace_back("view.png", a.azimuth);
    }
    Json cams = Json::array();
    for (const auto& [name, az] : views) {
        const CameraPose cam = orbit_camera(az * kDeg, a.elevation * kDeg, a.radius, in);
        cam.validate();
        const RenderedImage r = render(scene, cam, bg);
        write_png_rgb(a.out / name, r.rgb);
        if (a.depth) write_depth_png16(a.out / (fs::path(name).stem().string() + "_depth.png"), r.depth, in.near, in.far);
        cams.push_back({{"file", name}, {"azimuth_deg", az}, {"elevation_deg", a.elevation}, {"radius", a.radius}});
        std::printf("%s\n", (a.out / name).string().c_str());
    }
    std::ofstream(a.out / "cameras.json") << cams.dump(2) << '\n';
    return kExitOk;
}

// ---- eval ----

struct EvalArgs {
    fs::path scene;
    fs::path asset;
    fs::path out;
    fs::path config;
    fs::path log;
    int views = 0;
    bool json = false;
};

int cmd_eval(const EvalArgs& a) {
    ReportConfig rc;
    if (!a.config.empty()) rc = load_run_config(a.config).report;
    if (a.views > 0) rc.janus.sweep.views = a.views;
    const GaussianScene scene = load_gaussian_scene(a.scene);
    // The reference may itself be a Gaussian scene, recognized by its opacity column.
    const PlyData reference = read_ply(a.asset);
    const PlyElement* vertex = reference.find("vertex");
    if (vertex && vertex->has("opacity")) {
        const GaussianScene other = gaussian_scene_from_ply(reference);
        metrics_report(a.log, &scene, &other, a.out, rc);
    } else {
        const ReferenceAsset asset = load_reference_asset(a.asset);
        metrics_report(a.log, &scene, &asset, a.out, rc);
    }
    std::cout << read_file(a.out / (a.json ? "report.json" : "report.txt"));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-to-3D Gaussian splatting with geometric moment guidance"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

    RetrieveArgs ra;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank catalog assets against a prompt");
    retrieve_cmd->add_option("prompt", ra.prompt, "Text prompt")->required();
    retrieve_cmd->add_option("--catalog", ra.catalog, "Catalog file (default: $MT3D_CATALOG)");
    retrieve_cmd->add_option("--top", ra.top, "Matches to print (0 = all)");
    retrieve_cmd->add_flag("--json", ra.json, "Print JSON");

    OptimizeArgs oa;
    std::uint64_t seed = 0;
    auto* optimize_cmd = app.add_subcommand("optimize", "Run the two-stage optimization");
    optimize_cmd->add_option("--config", oa.config, "Run config (JSON)")->required();
    auto* seed_opt = optimize_cmd->add_option("--seed", seed, "Override the config seed");
    optimize_cmd->add_option("--output", oa.output, "Override the output directory");
    optimize_cmd->add_flag("--resume", oa.resume, "Continue from <output>/checkpoint when present");
    optimize_cmd->add_flag("--dry-run", oa.dry_run, "Validate, render one frame and exit");
    optimize_cmd->add_flag("--json", oa.json, "Print the final report as JSON");

    RenderArgs rn;
    auto* render_cmd = app.add_subcommand("render", "Render a Gaussian scene PLY");
    render_cmd->add_option("scene", rn.scene, "Scene PLY")->required();
    render_cmd->add_option("--out", rn.out, "Output directory")->required();
    render_cmd->add_option("--azimuth", rn.azimuth, "Degrees (start angle for --turntable)");
    render_cmd->add_option("--elevation", rn.elevation, "Degrees");
    render_cmd->add_option("--radius", rn.radius, "Camera distance from the origin");
    render_cmd->add_option("--fov", rn.fov, "Vertical field of view in degrees");
    render_cmd->add_option("--width", rn.width)->check(CLI::PositiveNumber);
    render_cmd->add_option("--height", rn.height)->check(CLI::PositiveNumber);
    render_cmd->add_option("--background", rn.background, "r g b in [0,1]")->expected(3);
    render_cmd->add_option("--turntable", rn.turntable, "Render N evenly spaced azimuths")->check(CLI::NonNegativeNumber);
    render_cmd->add_flag("--depth", rn.depth, "Also write 16-bit depth PNGs");

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Compare a scene with a reference asset");
    eval_cmd->add_option("scene", ea.scene, "Scene PLY")->required();
    eval_cmd->add_option("asset", ea.asset, "Reference asset PLY")->required();
    eval_cmd->add_option("--out", ea.out, "Output directory")->required();
    eval_cmd->add_option("--config", ea.config, "Run config whose eval section sets the sweep");
    eval_cmd->add_option("--log", ea.log, "metrics.jsonl of the run");
    eval_cmd->add_option("--views", ea.views, "Override the sweep view count")->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--json", ea.json, "Print report.json instead of report.txt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (threads > 0) set_thread_count(threads);
        if (*retrieve_cmd) return cmd_retrieve(ra);
        if (*optimize_cmd) {
            if (*seed_opt) oa.seed = seed;
            return cmd_optimize(oa);
        }
        if (*render_cmd) return cmd_render(rn);
        if (*eval_cmd) return cmd_eval(ea);
    } catch (const NumericalAbort& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return kExitNumerical;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitInternal;
}
