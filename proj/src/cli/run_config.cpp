#include "mt3d/cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mt3d/core/errors.hpp"

namespace mt3d {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kDeg = M_PI / 180.0;

/// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config: " + where() + " must be an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config: " + name(key) + " has the wrong type");
        }
    }

    void read_degrees(const char* key, double& radians) {
        double deg = radians / kDeg;
        read(key, deg);
        if (j_.contains(key)) radians = deg * kDeg;
    }

    void read_degree_range(const char* key, Range& range) {
        std::vector<double> v{range.lo / kDeg, range.hi / kDeg};
        read_pair(key, v);
        if (j_.contains(key)) range = {v[0] * kDeg, v[1] * kDeg};
    }

    void read_range(const char* key, Range& range) {
        std::vector<double> v{range.lo, range.hi};
        read_pair(key, v);
        range = {v[0], v[1]};
    }

    void read_vector3(const char* key, Eigen::Vector3d& out) {
        std::vector<double> v{out[0], out[1], out[2]};
        read(key, v);
        if (v.size() != 3) throw ConfigError("config: " + name(key) + " needs three values");
        out = Eigen::Vector3d(v[0], v[1], v[2]);
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    Section child(const char* key) {
        seen_.insert(key);
        return Section(j_.at(key), name(key));
    }

    /// Throws for the first key that was never read.
    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError("config: unknown key " + name(item.key()));
    }

private:
    void read_pair(const char* key, std::vector<double>& v) {
        read(key, v);
        if (v.size() != 2) throw ConfigError("config: " + name(key) + " needs two values [lo, hi]");
    }
    std::string where() const { return path_.empty() ? "the top level" : path_; }
    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_stage(Section s, StageConfig& c) {
    s.read("geometry_steps", c.geometry_steps);
    s.read("texture_steps", c.texture_steps);
    if (s.has("lr")) {
        Section lr = s.child("lr");
        lr.read("mean", c.lr.mean);
        lr.read("mean_final", c.lr.mean_final);
        lr.read("scale", c.lr.scale);
        lr.read("rotation", c.lr.rotation);
        lr.read("opacity", c.lr.opacity);
        lr.read("color", c.lr.color);
        lr.finish();
    }
    s.read("densify_interval", c.densify_interval);
    s.read("densify_threshold", c.densify_threshold);
    s.read("compact_interval", c.compact_interval);
    s.read("compact_neighbors", c.compact_neighbors);
    s.read("prune_interval", c.prune_interval);
    s.read("prune_opacity", c.prune_opacity);
    s.read("prune_radius", c.prune_radius);
    s.read("prune_min_survivors", c.prune_min_survivors);
    s.read("split_scale_divisor", c.split_scale_divisor);
    s.read("lambda_p", c.lambda_p);
    s.read("lambda_m", c.lambda_m);
    s.finish();
}

void read_guidance(Section s, GuidanceConfig& c) {
    s.read("guidance_scale", c.guidance_scale);
    s.read("lora_max", c.lora_max);
    s.read("lora_ramp_steps", c.lora_ramp_steps);
    s.read("surrogate_lr", c.surrogate_lr);
    s.read_degree_range("elevation_deg", c.elevation);
    s.read_degree_range("azimuth_deg", c.azimuth);
    s.read_range("radius", c.radius);
    s.read("width", c.intrinsics.width);
    s.read("height", c.intrinsics.height);
    s.read_degrees("fov_deg", c.intrinsics.fov_y);
    s.read("near", c.intrinsics.near);
    s.read("far", c.intrinsics.far);
    s.read_vector3("background", c.background);
    s.read("initial_gaussians", c.initial_gaussians);
    s.read("loss_ema", c.loss_ema);
    if (s.has("schedule")) {
        Section n = s.child("schedule");
        n.read("max_timestep", c.schedule.max_timestep);
        n.read("cosine_offset", c.schedule.cosine_offset);
        n.read("t_min", c.schedule.t_min);
        n.read("t_max", c.schedule.t_max);
        std::string w = weighting_name(c.schedule.weighting), pw = weighting_name(c.schedule.prior_weighting);
        n.read("weighting", w);
        n.read("prior_weighting", pw);
        c.schedule.weighting = parse_weighting(w);
        c.schedule.prior_weighting = parse_weighting(pw);
        n.finish();
    }
    if (s.has("dgm")) {
        Section d = s.child("dgm");
        d.read("levels", c.dgm.levels);
        d.read("order", c.dgm.order);
        d.read("grid", c.dgm.grid);
        d.read("degenerate_mass", c.dgm.degenerate_mass);
        d.finish();
    }
    if (s.has("render")) {
        Section r = s.child("render");
        r.read("alpha_max", c.render.alpha_max);
        r.read("truncation_sigma", c.render.truncation_sigma);
        r.read("cov2d_floor", c.render.cov2d_floor);
        r.read("depth_alpha_threshold", c.render.depth_alpha_threshold);
        r.read("min_transmittance", c.render.min_transmittance);
        r.finish();
    }
    s.finish();
}

void read_eval(Section s, ReportConfig& c) {
    SweepConfig& w = c.janus.sweep;
    s.read("views", w.views);
    s.read_degrees("elevation_deg", w.elevation);
    s.read_degrees("start_azimuth_deg", w.start_azimuth);
    s.read("radius", w.radius);
    s.read("width", w.intrinsics.width);
    s.read("height", w.intrinsics.height);
    s.read_degrees("fov_deg", w.intrinsics.fov_y);
    s.read_vector3("background", w.background);
    s.read("silhouette_alpha", w.silhouette_alpha);
    s.read("ratio_threshold", c.janus.ratio_threshold);
    s.read("thin_threshold", c.janus.thin_threshold);
    s.read("thin_area_fraction", c.janus.thin_area_fraction);
    s.read("max_curve_points", c.max_curve_points);
    s.finish();
}

Json degree_range(const Range& r) { return Json::array({r.lo / kDeg, r.hi / kDeg}); }
Json vec3(const Eigen::Vector3d& v) { return Json::array({v[0], v[1], v[2]}); }

}  // namespace

void RunConfig::validate() const {
    train.validate();
    report.validate();
    if (run.frame_interval < 0 || run.checkpoint_interval < 0 || run.frame_views < 1)
        throw ConfigError("config: run.frame_interval and run.checkpoint_interval must be >= 0, frame_views >= 1");
    if (oracle != "reference") throw ConfigError("config: unknown oracle '" + oracle + "' (expected 'reference')");
    if (output.empty()) throw ConfigError("config: output must not be empty");
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
    const Json j = Json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: not valid JSON");
    RunConfig c;
    Section top(j, "");
    std::string catalog, output = c.output.string();
    top.read("prompt", c.prompt);
    top.read("catalog", catalog);
    top.read("output", output);
    top.read("seed", c.train.seed);
    top.read("oracle", c.oracle);
    if (top.has("stage")) read_stage(top.child("stage"), c.train.stage);
    if (top.has("guidance")) read_guidance(top.child("guidance"), c.train.guidance);
    if (top.has("run")) {
        Section r = top.child("run");
        r.read("frame_interval", c.run.frame_interval);
        r.read("frame_views", c.run.frame_views);
        r.read("checkpoint_interval", c.run.checkpoint_interval);
        r.finish();
    }
    if (top.has("eval")) read_eval(top.child("eval"), c.report);
    top.finish();

    auto resolve = [&](const std::string& p) -> fs::path {
        if (p.empty()) return {};
        const fs::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    c.catalog = resolve(catalog);
    c.output = resolve(output);
    c.run.directory = c.output;
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_run_config(ss.str(), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string resolved_config_json(const RunConfig& c) {
    const StageConfig& s = c.train.stage;
    const GuidanceConfig& g = c.train.guidance;
    const SweepConfig& w = c.report.janus.sweep;
    Json j;
    j["prompt"] = c.prompt;
    j["catalog"] = c.catalog.string();
    j["output"] = c.output.string();
    j["seed"] = c.train.seed;
    j["oracle"] = c.oracle;
    j["stage"] = {
        {"geometry_steps", s.geometry_steps},
        {"texture_steps", s.texture_steps},
        {"lr",
         {{"mean", s.lr.mean},
          {"mean_final", s.lr.mean_final},
          {"scale", s.lr.scale},
          {"rotation", s.lr.rotation},
          {"opacity", s.lr.opacity},
          {"color", s.lr.color}}},
        {"densify_interval", s.densify_interval},
        {"densify_threshold", s.densify_threshold},
        {"compact_interval", s.compact_interval},
        {"compact_neighbors", s.compact_neighbors},
        {"prune_interval", s.prune_interval},
        {"prune_opacity", s.prune_opacity},
        {"prune_radius", s.prune_radius},
        {"prune_min_survivors", s.prune_min_survivors},
        {"split_scale_divisor", s.split_scale_divisor},
        {"lambda_p", s.lambda_p},
        {"lambda_m", s.lambda_m},
    };
    j["guidance"] = {
        {"guidance_scale", g.guidance_scale},
        {"lora_max", g.lora_max},
        {"lora_ramp_steps", g.lora_ramp_steps},
        {"surrogate_lr", g.surrogate_lr},
        {"elevation_deg", degree_range(g.elevation)},
        {"azimuth_deg", degree_range(g.azimuth)},
        {"radius", Json::array({g.radius.lo, g.radius.hi})},
        {"width", g.intrinsics.width},
        {"height", g.intrinsics.height},
        {"fov_deg", g.intrinsics.fov_y / kDeg},
        {"near", g.intrinsics.near},
        {"far", g.intrinsics.far},
        {"background", vec3(g.background)},
        {"initial_gaussians", g.initial_gaussians},
        {"loss_ema", g.loss_ema},
        {"schedule",
         {{"max_timestep", g.schedule.max_timestep},
          {"cosine_offset", g.schedule.cosine_offset},
          {"t_min", g.schedule.t_min},
          {"t_max", g.schedule.t_max},
          {"weighting", weighting_name(g.schedule.weighting)},
          {"prior_weighting", weighting_name(g.schedule.prior_weighting)}}},
        {"dgm",
         {{"levels", g.dgm.levels},
          {"order", g.dgm.order},
          {"grid", g.dgm.grid},
          {"degenerate_mass", g.dgm.degenerate_mass}}},
        {"render",
         {{"alpha_max", g.render.alpha_max},
          {"truncation_sigma", g.render.truncation_sigma},
          {"cov2d_floor", g.render.cov2d_floor},
          {"depth_alpha_threshold", g.render.depth_alpha_threshold},
          {"min_transmittance", g.render.min_transmittance}}},
    };
    j["run"] = {{"frame_interval", c.run.frame_interval},
                {"frame_views", c.run.frame_views},
                {"checkpoint_interval", c.run.checkpoint_interval}};
    j["eval"] = {
        {"views", w.views},
        {"elevation_deg", w.elevation / kDeg},
        {"start_azimuth_deg", w.start_azimuth / kDeg},
        {"radius", w.radius},
        {"width", w.intrinsics.width},
        {"height", w.intrinsics.height},
        {"fov_deg", w.intrinsics.fov_y / kDeg},
        {"background", vec3(w.background)},
        {"silhouette_alpha", w.silhouette_alpha},
        {"ratio_threshold", c.report.janus.ratio_threshold},
        {"thin_threshold", c.report.janus.thin_threshold},
        {"thin_area_fraction", c.report.janus.thin_area_fraction},
        {"max_curve_points", c.report.max_curve_points},
    };
    return j.dump(2) + "\n";
}

}  // namespace mt3d
