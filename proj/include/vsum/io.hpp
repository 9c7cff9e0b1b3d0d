#ifndef VSUM_IO_HPP
#define VSUM_IO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsum/frame_scoring.hpp"
#include "vsum/scene_division.hpp"
#include "vsum/segmentation.hpp"
#include "vsum/summary_eval.hpp"

namespace vsum::io {

// ---- embeddings: "VSEM1" | u16 version | u32 n_frames | u32 dim | n*dim f32, little-endian, row-major

inline constexpr char kEmbeddingMagic[5] = {'V', 'S', 'E', 'M', '1'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;

std::string encode_embeddings(const FrameEmbeddings& emb);
FrameEmbeddings decode_embeddings(const std::string& bytes, const std::string& origin = "<memory>");
void save_embeddings(const std::filesystem::path& path, const FrameEmbeddings& emb);
FrameEmbeddings load_embeddings(const std::filesystem::path& path);

// ---- raw frames: "VSFR1" | u16 version | u32 n_frames | u32 width | u32 height | n*w*h*3 u8 RGB

std::string encode_frames(const std::vector<scene::RgbImage>& frames);
std::vector<scene::RgbImage> decode_frames(const std::string& bytes, const std::string& origin = "<memory>");
void save_frames(const std::filesystem::path& path, const std::vector<scene::RgbImage>& frames);
std::vector<scene::RgbImage> load_frames(const std::filesystem::path& path);

// ---- manifest

struct UserAnnotation {
    std::string user;
    std::vector<double> scores;        // per-frame, [0,1]
    std::vector<std::uint8_t> mask;    // per-frame keyshot mask (SumMe style)

    bool is_mask() const noexcept { return !mask.empty(); }
};

struct VideoEntry {
    std::string id;
    double fps = 0.0;
    std::size_t n_frames = 0;
    std::vector<UserAnnotation> annotations;
    std::optional<SceneSegmentation> segments;        // externally supplied selection segments
    std::optional<std::vector<std::size_t>> oracle_shots;  // QFVS
    std::optional<std::string> query;
    std::optional<std::filesystem::path> frames;
    std::optional<std::string> frame_images;          // printf-style pattern for encoded frame images
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> captions;
    std::optional<std::filesystem::path> mock_features;

    double duration_seconds() const { return static_cast<double>(n_frames) / fps; }
};

struct DatasetManifest {
    eval::Dataset dataset = eval::Dataset::TVSum;
    std::string dataset_tag = "tvsum";
    std::vector<VideoEntry> videos;
    std::filesystem::path base_dir;

    const VideoEntry& video(const std::string& id) const;
    std::vector<std::string> video_ids() const;
};

DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const DatasetManifest& m);

// ---- run configuration

struct RunConfig {
    std::string caption_backend = "mock";
    std::string llm_backend = "mock";
    std::string model = "mock";
    double temperature = 0.0;
    std::optional<std::filesystem::path> rubric_path;
    std::optional<frames::NormalizationMode> normalization;  // default chosen per dataset
    double budget = eval::kDefaultBudgetFraction;
    scene::ThresholdGrid grid;
    bool refine = true;
    std::size_t min_scene_frames = scene::kDefaultMinSceneFrames;
    std::optional<double> min_scene_seconds;
    double short_threshold_seconds = frames::kShortVideoSeconds;
    std::optional<double> sigma_override;
    std::optional<double> window_override;
    bool frame_weighting = true;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
    std::optional<std::filesystem::path> cache_dir;
    std::size_t batch_size = 60;
    std::size_t n_splits = 5;
    double pseudo_label_ratio = 0.10;
    bool use_pseudo_labels = true;
    bool use_context = true;
    int retry_attempts = 3;
    std::int64_t retry_base_delay_ms = 1000;
    std::string caption_endpoint;
    std::string caption_api_key;
    std::string llm_endpoint;
    std::string llm_api_key;

    frames::NormalizationMode normalization_for(eval::Dataset d) const;
    nlohmann::json snapshot() const;  // excludes secrets
};

/// Parses a config document; relative paths resolve against base_dir and must exist.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Reads VSUM_* environment variables over the config.
void apply_environment(RunConfig& cfg);

// ---- helpers for stage documents

nlohmann::json segmentation_to_json(const SceneSegmentation& seg);
SceneSegmentation segmentation_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace vsum::io

#endif  // VSUM_IO_HPP
