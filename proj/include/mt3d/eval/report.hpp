#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mt3d/eval/janus.hpp"

namespace mt3d {

/// Per-step series read back from a metrics log.
struct MetricsSeries {
    std::vector<std::int64_t> step;
    std::vector<double> control;
    std::vector<double> moment;
    std::vector<double> total;
    std::vector<double> control_ema;
    std::vector<double> moment_ema;
    std::vector<double> total_ema;
    std::vector<double> lora_lambda;
    std::vector<double> gaussians;

    std::size_t size() const { return step.size(); }
    bool empty() const { return step.empty(); }
};

/// A missing or empty file gives an empty series; a malformed line throws InvalidInput.
MetricsSeries read_metrics_log(const std::filesystem::path& path);

struct ReportConfig {
    JanusConfig janus;
    /// Curves are thinned to at most this many points, always keeping the last one.
    int max_curve_points = 1000;

    void validate() const;
};

struct ReportSummary {
    bool metrics_present = false;
    std::optional<double> first_lora_lambda;
    std::optional<double> last_lora_lambda;
    std::optional<IouReport> iou;
    std::optional<JanusReport> janus;
    /// Set when the Janus proxy could not be computed (blank scene).
    std::string janus_error;
};

/// Writes report.json, report.txt and turntable.png into out_dir. Scene
/// metrics are computed only when both scene and asset are given.
ReportSummary metrics_report(const std::filesystem::path& log, const GaussianScene* scene,
                             const ReferenceAsset* asset, const std::filesystem::path& out_dir,
                             const ReportConfig& config = {});
/// Same report with another Gaussian scene as the reference.
ReportSummary metrics_report(const std::filesystem::path& log, const GaussianScene* scene,
                             const GaussianScene* reference, const std::filesystem::path& out_dir,
                             const ReportConfig& config = {});

}  // namespace mt3d
