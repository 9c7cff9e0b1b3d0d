#ifndef VSUM_CAPTION_HPP
#define VSUM_CAPTION_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "vsum/clients.hpp"
#include "vsum/segmentation.hpp"
#include "vsum/util.hpp"

namespace vsum::caption {

/// One sampled frame per whole second: the middle frame of that second.
struct FrameSamplingPlan {
    double fps = 0.0;
    std::vector<std::size_t> indices;
};

struct CaptionBatch {
    std::size_t batch_index = 0;
    std::vector<std::size_t> frame_indices;
    std::string text;
    bool is_first = false;
    bool is_last = false;
};

struct SceneCaption {
    std::size_t scene_index = 0;
    std::string text;
};

inline constexpr std::size_t kDefaultBatchSize = 60;

FrameSamplingPlan sample_middle_frames(double fps, std::size_t n_frames);

std::vector<CaptionBatch> batch_frames(const FrameSamplingPlan& plan, std::size_t batch_size);

/// Rewrites batch openings/endings so stitched batches read as one narrative.
std::string normalize_batch_text(const std::string& text, bool is_first, bool is_last);

std::string stitch(const std::vector<CaptionBatch>& batches);

struct CaptionOptions {
    double fps = 30.0;
    std::size_t batch_size = kDefaultBatchSize;
    RetryPolicy retry;
    const DiskCache* cache = nullptr;
    std::string video_id;
};

/// sample -> batch -> caption each batch -> normalize -> stitch, for frames [scene.start, scene.end).
/// Throws CaptionError carrying scene_index after retries are exhausted.
SceneCaption describe_scene(CaptionClient& client, std::size_t scene_index, Interval scene, const CaptionOptions& opt);

/// Captions every scene with at most `max_in_flight` concurrent requests; results in scene order.
std::vector<SceneCaption> describe_scenes(CaptionClient& client, const SceneSegmentation& seg,
                                          const CaptionOptions& opt, std::size_t max_in_flight = 4);

/// Whole-video description built with the same batching rules.
std::string describe_video(CaptionClient& client, std::size_t n_frames, const CaptionOptions& opt);

}  // namespace vsum::caption

#endif  // VSUM_CAPTION_HPP
