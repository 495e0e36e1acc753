#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

#include "mt3d/optim/trainer.hpp"
#include "mt3d/retrieval/catalog.hpp"

namespace mt3d {

/// Appends lines to a file from a background thread, in submission order.
class MetricsLogger {
public:
    /// Truncates the file unless append is set.
    explicit MetricsLogger(const std::filesystem::path& path, bool append = false);
    ~MetricsLogger();
    MetricsLogger(const MetricsLogger&) = delete;
    MetricsLogger& operator=(const MetricsLogger&) = delete;

    void push(std::string line);
    /// Blocks until every pushed line is written and flushed.
    void flush();

private:
    void run();

    std::ofstream out_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable drained_;
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool stop_ = false;
    std::thread worker_;
};

/// One metrics record as a single JSON line.
std::string metrics_record(const StepReport& report);

/// Where and how often training writes artifacts.
struct RunOutputConfig {
    std::filesystem::path directory;
    /// Turntable frame every this many steps (0 disables).
    int frame_interval = 500;
    int frame_views = 4;
    /// Checkpoint every this many steps (0 keeps only the final one).
    int checkpoint_interval = 1000;
    /// Continue from directory/checkpoint when it exists.
    bool resume = false;
    /// Stop after this step with a checkpoint but no final scene (0 runs to completion).
    std::int64_t stop_at_step = 0;
};

struct RunSummary {
    std::int64_t first_step = 0;  // step the run started from (non-zero after resume)
    std::int64_t final_step = 0;
    StepReport last;
    /// Empty when the run stopped early.
    std::filesystem::path final_scene;
};

/// Trains to completion, writing metrics.jsonl, frames/step_NNNNNN.png,
/// checkpoint/ and final.ply under the output directory. On a numerical
/// abort the pre-step state is saved to abort/ and the error is rethrown.
RunSummary train_to_directory(Trainer& trainer, const RunOutputConfig& output);

/// Four views (or frame_views) around the scene at the training resolution, side by side.
Image turntable_strip(const GaussianScene& scene, const GuidanceConfig& guidance, int views);

struct PipelineConfig {
    std::string prompt;
    std::filesystem::path catalog;
    RunOutputConfig output;
    TrainConfig train;
};

struct PipelineResult {
    RetrievalResult retrieval;
    Catalog catalog;
    RunSummary run;
};

/// Writes the prompt, the chosen asset and the full similarity ranking as JSON.
void write_retrieval_json(const std::filesystem::path& path, const std::string& prompt, const Catalog& catalog,
                          const RetrievalResult& result);

/// Retrieves the asset for the prompt, then trains and writes retrieval.json
/// next to the run artifacts.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace mt3d
