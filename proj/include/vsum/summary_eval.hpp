#ifndef VSUM_SUMMARY_EVAL_HPP
#define VSUM_SUMMARY_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsum/segmentation.hpp"

namespace vsum::eval {

/// Exactly one of fraction (of total frames) or absolute frames/shots.
class SelectionBudget {
public:
    static SelectionBudget fraction_of(double fraction);
    static SelectionBudget absolute(std::size_t units);

    std::size_t capacity(std::size_t total_units) const;
    std::optional<double> fraction() const noexcept { return fraction_; }
    std::optional<std::size_t> absolute_units() const noexcept { return absolute_; }

private:
    std::optional<double> fraction_;
    std::optional<std::size_t> absolute_;
};

inline constexpr double kDefaultBudgetFraction = 0.15;

/// Per-frame (or per-shot) selection mask.
struct Summary {
    std::vector<std::uint8_t> selected;

    std::size_t count() const;
};

struct EvalResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Exact 0/1 knapsack by dynamic programming. Among optimal sets (values equal within 1e-9) the one
/// that takes the earliest indices wins. Returns ascending indices.
std::vector<std::size_t> knapsack_select(std::span<const double> values, std::span<const std::size_t> lengths,
                                         std::size_t capacity);

/// Top `budget` shots by score, ties to the lower index. Returns ascending indices.
std::vector<std::size_t> greedy_shot_select(std::span<const double> shot_scores, std::size_t budget);

std::vector<double> shot_scores_from_frames(std::span<const double> frame_scores, const SceneSegmentation& shots);

Summary mask_from_segments(const SceneSegmentation& seg, std::span<const std::size_t> chosen);

/// Knapsack over segments with value = mean frame score x length, expanded to a frame mask.
Summary select_keyshots(std::span<const double> frame_scores, const SceneSegmentation& seg,
                        const SelectionBudget& budget);

/// Ground-truth frame scores converted to a reference summary the same way.
Summary gt_to_keyshots(std::span<const double> frame_annotations, const SceneSegmentation& seg,
                       const SelectionBudget& budget);

EvalResult precision_recall_f1(const Summary& generated, const Summary& reference);

enum class Dataset { SumMe, TVSum, QFVS };

Dataset parse_dataset(const std::string& tag);
std::string to_string(Dataset d);

/// SumMe reports the best-matching user, TVSum (and QFVS) the mean over users.
double aggregate_users(std::span<const double> per_user_f1, Dataset dataset);

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t n_splits = 5;
    std::vector<std::vector<std::string>> test_ids;
};

/// Seeded permutation of the evaluation ids cut into n_splits folds; `excluded` ids never appear.
SplitSpec make_splits(const std::vector<std::string>& video_ids, std::size_t n_splits, std::uint64_t seed,
                      const std::vector<std::string>& excluded = {});

/// Mean of per-split mean F1. per_split[i] holds the video F1 values of split i.
double split_average(const std::vector<std::vector<double>>& per_split, const SplitSpec& spec);

}  // namespace vsum::eval

#endif  // VSUM_SUMMARY_EVAL_HPP
