#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mt3d/eval/report.hpp"
#include "mt3d/optim/pipeline.hpp"

namespace mt3d {

/// Everything a reproducible run needs. Every field has a default; angles are
/// given in degrees in the file and stored in radians here.
struct RunConfig {
    std::string prompt;
    /// Empty means "use the MT3D_CATALOG environment variable".
    std::filesystem::path catalog;
    std::filesystem::path output = "run";
    TrainConfig train;
    /// Frame and checkpoint cadence; its directory mirrors output.
    RunOutputConfig run;
    ReportConfig report;
    /// Score oracle used for guidance; "reference" is the only one built in.
    std::string oracle = "reference";

    /// Throws ConfigError for any invalid field.
    void validate() const;
};

/// Parses JSON text. Unknown keys and wrongly typed values throw ConfigError
/// naming the key. Relative catalog and output paths are resolved against base_dir.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// The fully resolved configuration as pretty-printed JSON, in the same schema
/// parse_run_config accepts.
std::string resolved_config_json(const RunConfig& config);

}  // namespace mt3d
