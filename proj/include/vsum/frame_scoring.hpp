#ifndef VSUM_FRAME_SCORING_HPP
#define VSUM_FRAME_SCORING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vsum/kmeans.hpp"
#include "vsum/segmentation.hpp"

namespace vsum::frames {

enum class NormKind { MinMax, Exponential };

struct NormalizationMode {
    NormKind kind = NormKind::MinMax;
    double exp_alpha = 1.0;
};

/// MinMax to [0,1] (all-equal -> 0.5). Exponential applies (e^{a u} - 1)/(e^a - 1) to the MinMax value u.
std::vector<double> normalize(std::span<const double> scene_scores, NormalizationMode mode);

enum class Stage { Inherited, Smoothed, Weighted };

struct FrameScoreCurve {
    std::vector<double> values;
    Stage stage = Stage::Inherited;
};

FrameScoreCurve inherit(std::span<const double> scene_values, const SceneSegmentation& seg);

/// (1 - cos(pi (t - lo)/(hi - lo))) / 2, computed so that lo, the centre and hi give 0, 0.5 and 1 exactly.
double cosine_alpha(double t, double lo, double hi);

/// Blends consecutive scene values between their midpoints; frames outside the first and last
/// midpoints keep their inherited value.
FrameScoreCurve cosine_smooth(const FrameScoreCurve& inherited, const SceneSegmentation& seg);

/// Fraction of the window taken by its most frequent label.
double consistency(std::span<const std::size_t> window_labels);

/// Mean L2 distance of the window rows from their mean.
double uniqueness(const FrameEmbeddings& window);

double segment_weight(double consistency_value, double uniqueness_value, double sigma);

struct WeightSchedule {
    double sigma = 0.3;
    double window_seconds = 3.0;
    double short_threshold_seconds = 100.0;
};

inline constexpr double kShortVideoSeconds = 100.0;

WeightSchedule schedule(double video_seconds, double short_threshold_seconds = kShortVideoSeconds);

struct WeightOptions {
    std::uint64_t seed = 0;
    cluster::Backend backend = cluster::Backend::Parallel;
};

/// Per scene: K-means with elbow K, then one shared weight per window of round(W * fps) frames.
/// Scenes with fewer than 3 frames get weight 1.
std::vector<double> frame_weights(const FrameEmbeddings& emb, const SceneSegmentation& seg, double fps,
                                  const WeightSchedule& sched, const WeightOptions& opt = {});

/// Elementwise product, then MinMax over the video (all-equal -> 0.5).
FrameScoreCurve combine(const FrameScoreCurve& smoothed, std::span<const double> weights);

}  // namespace vsum::frames

#endif  // VSUM_FRAME_SCORING_HPP
