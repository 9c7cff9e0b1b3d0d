#include "vsum/summary_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vsum/error.hpp"

namespace vsum::eval {

SelectionBudget SelectionBudget::fraction_of(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidInput("budget fraction must be in (0,1]");
    }
    SelectionBudget b;
    b.fraction_ = fraction;
    return b;
}

SelectionBudget SelectionBudget::absolute(std::size_t units) {
    SelectionBudget b;
    b.absolute_ = units;
    return b;
}

std::size_t SelectionBudget::capacity(std::size_t total_units) const {
    if (absolute_) {
        return std::min(*absolute_, total_units);
    }
    return static_cast<std::size_t>(std::floor(*fraction_ * static_cast<double>(total_units) + 1e-9));
}

std::size_t Summary::count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), std::uint8_t{1}));
}

std::vector<std::size_t> knapsack_select(std::span<const double> values, std::span<const std::size_t> lengths,
                                         std::size_t capacity) {
    if (values.size() != lengths.size()) {
        throw InvalidInput("knapsack_select: values and lengths differ in size");
    }
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (lengths[i] == 0) {
            throw InvalidInput("knapsack_select: segment " + std::to_string(i) + " has zero length");
        }
    }
    // best[c] over items i..n-1 with rolling rows; take[i][c] records that including item i is optimal.
    // Memory: two rows of (capacity+1) doubles plus n*(capacity+1) bytes of decisions.
    const std::size_t width = capacity + 1;
    std::vector<double> next(width, 0.0), cur(width, 0.0);
    std::vector<std::uint8_t> take(n * width, 0);
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t c = 0; c < width; ++c) {
            double best = next[c];
            if (lengths[i] <= c) {
                const double with = values[i] + next[c - lengths[i]];
                const double tol = 1e-9 * std::max({1.0, std::abs(with), std::abs(best)});
                if (with >= best - tol) {
                    take[i * width + c] = 1;
                    best = std::max(best, with);
                }
            }
            cur[c] = best;
        }
        std::swap(cur, next);
    }
    std::vector<std::size_t> chosen;
    std::size_t c = capacity;
    for (std::size_t i = 0; i < n; ++i) {
        if (take[i * width + c]) {
            chosen.push_back(i);
            c -= lengths[i];
        }
    }
    return chosen;
}

std::vector<std::size_t> greedy_shot_select(std::span<const double> shot_scores, std::size_t budget) {
    if (budget > shot_scores.size()) {
        throw InvalidInput("greedy_shot_select: budget " + std::to_string(budget) + " exceeds " +
                           std::to_string(shot_scores.size()) + " shots");
    }
    std::vector<std::size_t> order(shot_scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return shot_scores[a] > shot_scores[b]; });
    order.resize(budget);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<double> shot_scores_from_frames(std::span<const double> frame_scores, const SceneSegmentation& shots) {
    if (frame_scores.size() != shots.n_frames()) {
        throw InvalidInput("shot_scores_from_frames: shots cover " + std::to_string(shots.n_frames()) +
                           " frames, scores " + std::to_string(frame_scores.size()));
    }
    std::vector<double> out;
    out.reserve(shots.size());
    for (const auto& iv : shots.intervals()) {
        double sum = 0.0;
        for (std::size_t t = iv.start; t < iv.end; ++t) {
            sum += frame_scores[t];
        }
        out.push_back(sum / static_cast<double>(iv.length()));
    }
    return out;
}

Summary mask_from_segments(const SceneSegmentation& seg, std::span<const std::size_t> chosen) {
    Summary s{std::vector<std::uint8_t>(seg.n_frames(), 0)};
    for (auto i : chosen) {
        if (i >= seg.size()) {
            throw InvalidInput("mask_from_segments: segment " + std::to_string(i) + " out of range");
        }
        std::fill(s.selected.begin() + static_cast<std::ptrdiff_t>(seg[i].start),
                  s.selected.begin() + static_cast<std::ptrdiff_t>(seg[i].end), std::uint8_t{1});
    }
    return s;
}

Summary select_keyshots(std::span<const double> frame_scores, const SceneSegmentation& seg,
                        const SelectionBudget& budget) {
    const auto means = shot_scores_from_frames(frame_scores, seg);
    std::vector<double> values(seg.size());
    std::vector<std::size_t> lengths(seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) {
        lengths[i] = seg[i].length();
        values[i] = means[i] * static_cast<double>(lengths[i]);
    }
    return mask_from_segments(seg, knapsack_select(values, lengths, budget.capacity(seg.n_frames())));
}

Summary gt_to_keyshots(std::span<const double> frame_annotations, const SceneSegmentation& seg,
                       const SelectionBudget& budget) {
    return select_keyshots(frame_annotations, seg, budget);
}

EvalResult precision_recall_f1(const Summary& generated, const Summary& reference) {
    if (generated.selected.size() != reference.selected.size()) {
        throw InvalidInput("precision_recall_f1: mask lengths differ (" + std::to_string(generated.selected.size()) +
                           " vs " + std::to_string(reference.selected.size()) + ")");
    }
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t t = 0; t < generated.selected.size(); ++t) {
        const bool in_a = generated.selected[t] != 0;
        const bool in_b = reference.selected[t] != 0;
        a += in_a;
        b += in_b;
        both += in_a && in_b;
    }
    EvalResult r;
    r.precision = a == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(a);
    r.recall = b == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(b);
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

Dataset parse_dataset(const std::string& tag) {
    if (tag == "summe") {
        return Dataset::SumMe;
    }
    if (tag == "tvsum") {
        return Dataset::TVSum;
    }
    if (tag == "qfvs") {
        return Dataset::QFVS;
    }
    throw InvalidInput("unknown dataset tag '" + tag + "' (expected summe, tvsum or qfvs)");
}

std::string to_string(Dataset d) {
    switch (d) {
        case Dataset::SumMe:
            return "summe";
        case Dataset::TVSum:
            return "tvsum";
        case Dataset::QFVS:
            return "qfvs";
    }
    return "unknown";
}

double aggregate_users(std::span<const double> per_user_f1, Dataset dataset) {
    if (per_user_f1.empty()) {
        throw InvalidInput("aggregate_users: no users");
    }
    if (dataset == Dataset::SumMe) {
        return *std::max_element(per_user_f1.begin(), per_user_f1.end());
    }
    return std::accumulate(per_user_f1.begin(), per_user_f1.end(), 0.0) / static_cast<double>(per_user_f1.size());
}

SplitSpec make_splits(const std::vector<std::string>& video_ids, std::size_t n_splits, std::uint64_t seed,
                      const std::vector<std::string>& excluded) {
    std::vector<std::string> pool;
    for (const auto& id : video_ids) {
        if (std::find(excluded.begin(), excluded.end(), id) == excluded.end()) {
            pool.push_back(id);
        }
    }
    if (n_splits == 0 || pool.size() < n_splits) {
        throw InvalidInput("make_splits: " + std::to_string(pool.size()) + " evaluation videos cannot fill " +
                           std::to_string(n_splits) + " splits");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i) {
        std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng() % i)]);
    }
    SplitSpec spec{seed, n_splits, std::vector<std::vector<std::string>>(n_splits)};
    for (std::size_t i = 0; i < pool.size(); ++i) {
        spec.test_ids[i % n_splits].push_back(pool[i]);
    }
    return spec;
}

double split_average(const std::vector<std::vector<double>>& per_split, const SplitSpec& spec) {
    if (per_split.size() != spec.n_splits) {
        throw InvalidInput("split_average: expected " + std::to_string(spec.n_splits) + " splits, got " +
                           std::to_string(per_split.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < per_split.size(); ++i) {
        if (per_split[i].empty()) {
            throw InvalidInput("split_average: split " + std::to_string(i) + " has no results");
        }
        total += std::accumulate(per_split[i].begin(), per_split[i].end(), 0.0) /
                 static_cast<double>(per_split[i].size());
    }
    return total / static_cast<double>(per_split.size());
}

}  // namespace vsum::eval
