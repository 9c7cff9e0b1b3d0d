#ifndef VSUM_SYNTHETIC_HPP
#define VSUM_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsum/io.hpp"
#include "vsum/scene_division.hpp"
#include "vsum/segmentation.hpp"

namespace vsum::synth {

// Tiny videos with known scene cuts. Each scene is a still mosaic of coloured tiles with a small
// per-frame brightness jitter; consecutive scenes are resampled until their hashes differ by at
// least `min_cut_distance`.
struct VideoSpec {
    std::string id;
    double fps = 10.0;
    std::vector<std::size_t> scene_lengths;
    std::size_t width = 48;
    std::size_t height = 36;
    std::size_t dim = 16;
    std::size_t n_users = 3;
    bool mask_annotations = false;
    std::uint64_t seed = 0;
    double min_cut_distance = 0.65;
    double shot_seconds = 2.0;  // selection segments written to the manifest; 0 leaves them out
};

struct SyntheticVideo {
    VideoSpec spec;
    std::vector<scene::RgbImage> frames;
    FrameEmbeddings embeddings;
    std::vector<double> scene_importance;  // hidden per-scene importance in [0,1]
    std::vector<std::vector<double>> user_scores;

    std::size_t n_frames() const noexcept { return frames.size(); }
    /// Last frame index of every scene but the final one.
    std::vector<std::size_t> true_boundaries() const;
    SceneSegmentation true_segmentation() const;
    /// Scenes cut into shots of about shot_seconds, never crossing a scene cut.
    SceneSegmentation shots() const;
};

SyntheticVideo make_video(const VideoSpec& spec);

/// Writes frames, embeddings, mock scoring fixtures and manifest.json under dir.
io::DatasetManifest write_dataset(const std::filesystem::path& dir, const std::string& dataset_tag,
                                  const std::vector<VideoSpec>& specs);

/// Three short videos used by the demo and the end-to-end checks.
std::vector<VideoSpec> demo_specs(std::uint64_t seed);

}  // namespace vsum::synth

#endif  // VSUM_SYNTHETIC_HPP
