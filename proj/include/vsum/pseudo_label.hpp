#ifndef VSUM_PSEUDO_LABEL_HPP
#define VSUM_PSEUDO_LABEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsum/caption.hpp"
#include "vsum/segmentation.hpp"

namespace vsum::pseudo {

/// Per-frame ground-truth importance in [0,1].
struct FrameAnnotations {
    std::vector<double> scores;

    explicit FrameAnnotations(std::vector<double> s);
    std::size_t n_frames() const noexcept { return scores.size(); }
};

/// Mean over annotators of (raw - lo) / (hi - lo); TVSum uses lo=1, hi=5.
FrameAnnotations normalize_raw_annotations(const std::vector<std::vector<double>>& per_user_raw, double lo, double hi);

/// Mean over annotators of already-normalized scores.
FrameAnnotations mean_annotations(const std::vector<std::vector<double>>& per_user);

std::vector<double> segment_scores(const FrameAnnotations& g, const SceneSegmentation& seg);

struct Exemplar {
    std::size_t segment_index = 0;
    std::string caption;
    double score = 0.0;
};

struct ExemplarSet {
    std::vector<Exemplar> high;  // highest first
    std::vector<Exemplar> low;   // lowest first
    std::size_t k = 0;
    std::optional<std::string> warning;
};

inline constexpr std::size_t kDefaultExemplars = 3;

/// Top-k and bottom-k segments; ties prefer the lower index. k shrinks to n/2 when n < 2k.
ExemplarSet select_exemplars(std::span<const double> scores, const std::vector<caption::SceneCaption>& captions,
                             std::size_t k = kDefaultExemplars);

struct ReasonTriple {
    std::string reason_positive;
    std::string reason_negative;
    std::string reason_difference;
};

std::string build_reason_prompt(const ExemplarSet& ex);

/// Parses the first JSON object in `text`; throws MalformedReason.
ReasonTriple parse_reason_json(const std::string& text);

std::string build_rubric_prompt(const std::vector<ReasonTriple>& reasons, const std::string& dataset_tag);

/// ceil(ratio * n) ids by seeded sampling without replacement, in sampled order.
std::vector<std::string> sample_pseudo_videos(const std::vector<std::string>& video_ids, double ratio,
                                              std::uint64_t seed);

std::vector<int> qfvs_shot_annotations(std::span<const std::size_t> oracle_shots, std::size_t n_shots);

/// Uniform shots of `shot_seconds` (the final shot may be shorter).
SceneSegmentation uniform_shots(std::size_t n_frames, double fps, double shot_seconds = 5.0);

}  // namespace vsum::pseudo

#endif  // VSUM_PSEUDO_LABEL_HPP
