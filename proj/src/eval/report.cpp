#include "mt3d/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/render/png_io.hpp"

namespace mt3d {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

MetricsSeries read_metrics_log(const fs::path& path) {
    MetricsSeries s;
    std::ifstream in(path);
    if (!in) return s;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        try {
            if (j.is_discarded()) throw std::runtime_error("not JSON");
            s.step.push_back(j.at("step").get<std::int64_t>());
            s.control.push_back(j.at("control").get<double>());
            s.moment.push_back(j.at("moment").get<double>());
            s.total.push_back(j.at("total").get<double>());
            s.control_ema.push_back(j.at("control_ema").get<double>());
            s.moment_ema.push_back(j.at("moment_ema").get<double>());
            s.total_ema.push_back(j.at("total_ema").get<double>());
            s.lora_lambda.push_back(j.at("lora_lambda").get<double>());
            s.gaussians.push_back(j.at("gaussians").get<double>());
        } catch (const std::exception& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(number) + ": bad metrics record: " + e.what());
        }
    }
    return s;
}

void ReportConfig::validate() const {
    janus.validate();
    if (max_curve_points < 2) throw ConfigError("report: max_curve_points must be >= 2");
}

namespace {

std::vector<std::size_t> curve_indices(std::size_t n, int max_points) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    const std::size_t stride = (n + max_points - 2) / static_cast<std::size_t>(max_points - 1);
    for (std::size_t i = 0; i < n; i += std::max<std::size_t>(stride, 1)) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

Json curve(const std::vector<double>& values, const std::vector<std::size_t>& idx) {
    Json out = Json::array();
    for (std::size_t i : idx) out.push_back(values[i]);
    return out;
}

Json hu_json(const std::vector<HuVector>& hu) {
    Json out = Json::array();
    for (const auto& h : hu) out.push_back(Json(std::vector<double>(h.begin(), h.end())));
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

namespace {

/// Scene and reference sweeps are given together or not at all.
ReportSummary write_report(const fs::path& log, const ViewSweep* scene_sweep, const ViewSweep* asset_sweep,
                           const fs::path& out_dir, const ReportConfig& config) {
    config.validate();
    fs::create_directories(out_dir);
    ReportSummary summary;
    Json report;
    std::ostringstream text;

    const MetricsSeries series = read_metrics_log(log);
    summary.metrics_present = !series.empty();
    if (series.empty()) {
        report["metrics"] = nullptr;
        text << "metrics: absent\n";
    } else {
        const auto idx = curve_indices(series.size(), config.max_curve_points);
        std::vector<double> steps(series.step.begin(), series.step.end());
        Json m;
        m["records"] = series.size();
        m["first_step"] = series.step.front();
        m["last_step"] = series.step.back();
        m["lora_lambda_first"] = series.lora_lambda.front();
        m["lora_lambda_last"] = series.lora_lambda.back();
        m["final_control_ema"] = series.control_ema.back();
        m["final_moment_ema"] = series.moment_ema.back();
        m["final_total_ema"] = series.total_ema.back();
        m["final_gaussians"] = series.gaussians.back();
        Json c;
        c["step"] = curve(steps, idx);
        c["control"] = curve(series.control, idx);
        c["moment"] = curve(series.moment, idx);
        c["total"] = curve(series.total, idx);
        c["control_ema"] = curve(series.control_ema, idx);
        c["moment_ema"] = curve(series.moment_ema, idx);
        c["total_ema"] = curve(series.total_ema, idx);
        c["gaussians"] = curve(series.gaussians, idx);
        c["lora_lambda"] = curve(series.lora_lambda, idx);
        m["curves"] = c;
        report["metrics"] = m;
        summary.first_lora_lambda = series.lora_lambda.front();
        summary.last_lora_lambda = series.lora_lambda.back();
        text << "metrics: " << series.size() << " records, steps " << series.step.front() << ".."
             << series.step.back() << "\n"
             << "lora_lambda: " << fmt(series.lora_lambda.front()) << " -> " << fmt(series.lora_lambda.back()) << "\n"
             << "control_ema: " << fmt(series.control_ema.front()) << " -> " << fmt(series.control_ema.back()) << "\n"
             << "moment_ema: " << fmt(series.moment_ema.front()) << " -> " << fmt(series.moment_ema.back()) << "\n"
             << "total_ema: " << fmt(series.total_ema.front()) << " -> " << fmt(series.total_ema.back()) << "\n"
             << "gaussians: " << fmt(series.gaussians.front()) << " -> " << fmt(series.gaussians.back()) << "\n";
    }

    if (scene_sweep && asset_sweep) {
        summary.iou = silhouette_iou(scene_sweep->silhouettes, asset_sweep->silhouettes);
        Json iou;
        Json per_view = Json::array();
        for (const auto& v : summary.iou->per_view) per_view.push_back(v ? Json(*v) : Json(nullptr));
        iou["per_view"] = per_view;
        iou["excluded_views"] = summary.iou->excluded_views;
        iou["mean"] = summary.iou->mean ? Json(*summary.iou->mean) : Json(nullptr);
        report["iou"] = iou;
        text << "iou_mean: " << (summary.iou->mean ? fmt(*summary.iou->mean) : std::string("n/a")) << "\n";

        try {
            summary.janus = janus_from_sweeps(scene_sweep->silhouettes, asset_sweep->silhouettes, config.janus);
            const JanusReport& j = *summary.janus;
            Json jr;
            jr["dispersion"] = j.dispersion;
            jr["reference_dispersion"] = j.reference_dispersion;
            jr["ratio"] = j.ratio;
            jr["thin_score"] = j.thin_score;
            jr["inconsistent"] = j.inconsistent;
            jr["areas"] = j.areas;
            jr["hu"] = hu_json(j.hu);
            jr["reference_hu"] = hu_json(j.reference_hu);
            report["janus"] = jr;
            text << "janus_ratio: " << fmt(j.ratio) << "\n"
                 << "janus_thin_score: " << fmt(j.thin_score) << "\n"
                 << "janus_inconsistent: " << (j.inconsistent ? "yes" : "no") << "\n";
        } catch (const DegenerateInput& e) {
            summary.janus_error = e.what();
            report["janus"] = {{"error", summary.janus_error}};
            text << "janus: " << summary.janus_error << "\n";
        }

        std::vector<Image> frames;
        for (const auto& r : scene_sweep->renders) frames.push_back(r.rgb);
        write_png_rgb(out_dir / "turntable.png", hstack(frames));
        report["turntable"] = "turntable.png";
    } else {
        report["iou"] = nullptr;
        report["janus"] = nullptr;
        text << "scene metrics: absent\n";
    }

    std::ofstream(out_dir / "report.json") << report.dump(2) << '\n';
    std::ofstream(out_dir / "report.txt") << text.str();
    return summary;
}

}  // namespace

ReportSummary metrics_report(const fs::path& log, const GaussianScene* scene, const ReferenceAsset* asset,
                             const fs::path& out_dir, const ReportConfig& config) {
    config.validate();
    if (!(scene && asset)) return write_report(log, nullptr, nullptr, out_dir, config);
    const ViewSweep a = sweep_scene(*scene, config.janus.sweep);
    const ViewSweep b = sweep_asset(*asset, config.janus.sweep);
    return write_report(log, &a, &b, out_dir, config);
}

ReportSummary metrics_report(const fs::path& log, const GaussianScene* scene, const GaussianScene* reference,
                             const fs::path& out_dir, const ReportConfig& config) {
    config.validate();
    if (!(scene && reference)) return write_report(log, nullptr, nullptr, out_dir, config);
    const ViewSweep a = sweep_scene(*scene, config.janus.sweep);
    const ViewSweep b = sweep_scene(*reference, config.janus.sweep);
    return write_report(log, &a, &b, out_dir, config);
}

}  // namespace mt3d
