#ifndef VSUM_PIPELINE_HPP
#define VSUM_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsum/clients.hpp"
#include "vsum/io.hpp"
#include "vsum/rubric.hpp"

namespace vsum::pipeline {

// Per-video stages in execution order. Each reads its inputs from the run directory and writes one file.
inline const std::vector<std::string> kVideoStages = {"segment", "refine", "caption", "score",
                                                      "frames",  "select", "eval"};

std::string stage_file(const std::string& stage);

/// Names of the per-stage plot files written by emit_plot_data.
inline const std::vector<std::string> kPlotFiles = {"boundaries_initial.csv", "boundaries_refined.csv",
                                                    "scene_scores.csv", "smoothed.csv", "frame_scores.csv"};

struct RunRecord {
    std::string run_id;
    std::string video_id;
    nlohmann::json doc;
};

class Runner {
public:
    Runner(io::RunConfig config, io::DatasetManifest manifest, std::filesystem::path out_dir);

    const io::RunConfig& config() const noexcept { return config_; }
    const io::DatasetManifest& manifest() const noexcept { return manifest_; }
    std::filesystem::path video_dir(const std::string& video_id) const;

    void run_stage(const std::string& stage, const std::string& video_id);

    void segment(const std::string& video_id);
    void refine(const std::string& video_id);
    void caption(const std::string& video_id);
    void score(const std::string& video_id);
    void frames(const std::string& video_id);
    void select(const std::string& video_id);
    void evaluate(const std::string& video_id);

    // dataset-level stages
    void pseudolabel();
    void mine_reasons();
    nlohmann::json eval_summary();

    /// All per-video stages, then the record.
    RunRecord run_video(const std::string& video_id);
    /// Pseudo-label and rubric mining (when enabled), every video, then the dataset summary.
    nlohmann::json run_all(const std::vector<std::string>& video_ids);

    RunRecord write_record(const std::string& video_id);

    /// Rubric used for scoring: mined rubric, configured file, or the built-in one.
    Rubric scoring_rubric() const;

private:
    const io::VideoEntry& entry(const std::string& video_id) const;
    nlohmann::json read_stage(const std::string& video_id, const std::string& stage) const;
    void write_stage(const std::string& video_id, const std::string& stage, const nlohmann::json& doc);
    void note_time(const std::string& video_id, const std::string& stage, double ms);
    Rubric base_rubric() const;
    std::unique_ptr<CaptionClient> caption_client(const io::VideoEntry& v) const;
    std::unique_ptr<LlmClient> llm_client(const io::VideoEntry& v) const;
    FrameEmbeddings embeddings_for(const io::VideoEntry& v, const char* stage) const;

    io::RunConfig config_;
    io::DatasetManifest manifest_;
    std::filesystem::path out_dir_;
    std::unique_ptr<DiskCache> cache_;
};

/// Derives the run id from the config snapshot, the manifest entry and the seed.
std::string run_id(const nlohmann::json& config_snapshot, const nlohmann::json& video_entry, std::uint64_t seed);

RunRecord load_record(const std::filesystem::path& video_dir);

/// Re-reads every stage file named by the record and checks digests and invariants.
/// Returns the list of problems (empty when the record verifies).
std::vector<std::string> verify_record(const std::filesystem::path& video_dir);

/// Writes the five stage CSVs under out_dir. Throws StageMissing if a needed stage is absent.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& video_dir,
                                                  const std::filesystem::path& out_dir);

}  // namespace vsum::pipeline

#endif  // VSUM_PIPELINE_HPP
