#include "mt3d/optim/pipeline.hpp"

#include <cstdio>

#include "json.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/render/png_io.hpp"

namespace mt3d {

namespace fs = std::filesystem;

MetricsLogger::MetricsLogger(const fs::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw ConfigError("metrics: cannot open " + path.string());
    worker_ = std::thread([this] { run(); });
}

MetricsLogger::~MetricsLogger() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    worker_.join();
}

void MetricsLogger::push(std::string line) {
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(line));
    }
    wake_.notify_one();
}

void MetricsLogger::flush() {
    std::unique_lock lock(mutex_);
    drained_.wait(lock, [this] { return queue_.empty() && !writing_; });
}

void MetricsLogger::run() {
    std::unique_lock lock(mutex_);
    while (true) {
        wake_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) break;
        std::deque<std::string> batch;
        batch.swap(queue_);
        writing_ = true;
        lock.unlock();
        for (const auto& line : batch) out_ << line << '\n';
        out_.flush();
        lock.lock();
        writing_ = false;
        drained_.notify_all();
    }
}

std::string metrics_record(const StepReport& r) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["stage"] = std::string(stage_name(r.stage));
    j["t"] = r.t;
    j["lora_lambda"] = r.lora_lambda;
    j["control"] = r.control_loss;
    j["moment"] = r.moment_loss;
    j["total"] = r.total_loss;
    j["control_ema"] = r.control_ema;
    j["moment_ema"] = r.moment_ema;
    j["total_ema"] = r.total_ema;
    j["surrogate"] = r.surrogate_loss;
    j["gaussians"] = r.gaussians;
    j["split"] = r.split;
    j["compacted"] = r.compacted;
    j["pruned"] = r.pruned;
    return j.dump();
}

Image turntable_strip(const GaussianScene& scene, const GuidanceConfig& guidance, int views) {
    std::vector<Image> frames;
    const double radius = 0.5 * (guidance.radius.lo + guidance.radius.hi);
    for (int v = 0; v < views; ++v) {
        const CameraPose cam = orbit_camera(2.0 * M_PI * v / views, 0.2617993877991494, radius, guidance.intrinsics);
        frames.push_back(render(scene, cam, guidance.background, guidance.render).rgb);
    }
    return hstack(frames);
}

namespace {

std::string step_name(std::int64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06lld", static_cast<long long>(step));
    return buf;
}

/// Writes the checkpoint next to its final place, then swaps it in.
void write_checkpoint(const Trainer& trainer, const fs::path& dir) {
    const fs::path tmp = dir.string() + ".tmp";
    fs::remove_all(tmp);
    trainer.save_checkpoint(tmp);
    fs::remove_all(dir);
    fs::rename(tmp, dir);
}

/// Keeps the metrics lines of steps up to and including last_step.
void truncate_metrics(const fs::path& path, std::int64_t last_step) {
    std::ifstream in(path);
    if (!in) return;
    std::vector<std::string> keep;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("step")) continue;
        if (j["step"].get<std::int64_t>() <= last_step) keep.push_back(line);
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    for (const auto& l : keep) out << l << '\n';
}

}  // namespace

RunSummary train_to_directory(Trainer& trainer, const RunOutputConfig& output) {
    if (output.frame_interval < 0 || output.checkpoint_interval < 0 || output.frame_views < 1)
        throw ConfigError("output: intervals must be >= 0 and frame_views >= 1");
    const fs::path dir = output.directory;
    fs::create_directories(dir / "frames");
    const fs::path metrics = dir / "metrics.jsonl";
    const fs::path checkpoint = dir / "checkpoint";

    bool append = false;
    if (output.resume && fs::exists(checkpoint / "optimizer.bin")) {
        trainer.load_checkpoint(checkpoint);
        truncate_metrics(metrics, trainer.state().step);
        append = true;
    }
    RunSummary summary;
    summary.first_step = trainer.state().step;
    MetricsLogger log(metrics, append);
    const auto stopped = [&] { return output.stop_at_step > 0 && trainer.state().step >= output.stop_at_step; };
    while (!trainer.done() && !stopped()) {
        StepReport rep;
        try {
            rep = trainer.step();
        } catch (const NumericalAbort&) {
            log.flush();
            trainer.save_checkpoint(dir / "abort");
            throw;
        }
        log.push(metrics_record(rep));
        summary.last = rep;
        if (output.frame_interval > 0 && rep.step % output.frame_interval == 0)
            write_png_rgb(dir / "frames" / (step_name(rep.step) + ".png"),
                          turntable_strip(trainer.state().scene, trainer.config().guidance, output.frame_views));
        if (output.checkpoint_interval > 0 && rep.step % output.checkpoint_interval == 0 && !trainer.done()) {
            log.flush();
            write_checkpoint(trainer, checkpoint);
        }
    }
    log.flush();
    write_checkpoint(trainer, checkpoint);
    summary.final_step = trainer.state().step;
    if (!trainer.done()) return summary;
    summary.final_scene = dir / "final.ply";
    save_gaussian_scene(summary.final_scene, trainer.state().scene);
    return summary;
}

void write_retrieval_json(const fs::path& path, const std::string& prompt, const Catalog& catalog,
                          const RetrievalResult& result) {
    nlohmann::ordered_json j;
    j["prompt"] = prompt;
    j["index"] = result.index;
    j["asset"] = catalog.entries[result.index].asset.string();
    j["caption"] = catalog.entries[result.index].caption;
    nlohmann::ordered_json ranking = nlohmann::ordered_json::array();
    for (const auto& r : result.ranking)
        ranking.push_back({{"index", r.index}, {"similarity", r.similarity}, {"caption", catalog.entries[r.index].caption},
                           {"asset", catalog.entries[r.index].asset.string()}});
    j["ranking"] = ranking;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.train.validate();
    PipelineResult result;
    result.catalog = load_catalog(config.catalog);
    result.retrieval = retrieve(config.prompt, result.catalog);
    const CatalogEntry& entry = *result.retrieval.entry;

    fs::create_directories(config.output.directory);
    write_retrieval_json(config.output.directory / "retrieval.json", config.prompt, result.catalog, result.retrieval);

    Trainer trainer(load_reference_asset(entry.asset, entry.caption), config.prompt, config.train);
    result.run = train_to_directory(trainer, config.output);
    result.retrieval.entry = &result.catalog.entries[result.retrieval.index];
    return result;
}

}  // namespace mt3d
