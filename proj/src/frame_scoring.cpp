#include "vsum/frame_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "vsum/error.hpp"

namespace vsum::frames {

namespace {

std::vector<double> min_max(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    if (*hi == *lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = (v[i] - *lo) / range;
    }
    return out;
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t scene) {
    return seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(scene) + 1));
}

void weigh_scene(const FrameEmbeddings& emb, Interval scene, std::size_t scene_index, std::size_t window,
                 const WeightSchedule& sched, std::uint64_t seed, cluster::Backend backend,
                 std::vector<double>& weights) {
    if (scene.length() < 3) {
        std::fill(weights.begin() + static_cast<std::ptrdiff_t>(scene.start),
                  weights.begin() + static_cast<std::ptrdiff_t>(scene.end), 1.0);
        return;
    }
    const auto rows = emb.slice(scene.start, scene.end);
    const std::size_t k_max = std::min(cluster::kMaxElbowK, scene.length());
    const auto path = cluster::fit_kmeans_path(rows, k_max, scene_seed(seed, scene_index), backend);
    std::vector<double> wcss;
    for (const auto& m : path) {
        wcss.push_back(m.wcss);
    }
    const auto& labels = path[cluster::elbow_k(wcss) - 1].labels;

    for (std::size_t s = 0; s < scene.length(); s += window) {
        const std::size_t e = std::min(s + window, scene.length());
        const double c = consistency(std::span(labels).subspan(s, e - s));
        const double u = uniqueness(rows.slice(s, e));
        const double w = segment_weight(c, u, sched.sigma);
        std::fill(weights.begin() + static_cast<std::ptrdiff_t>(scene.start + s),
                  weights.begin() + static_cast<std::ptrdiff_t>(scene.start + e), w);
    }
}

}  // namespace

std::vector<double> normalize(std::span<const double> scene_scores, NormalizationMode mode) {
    if (scene_scores.empty()) {
        throw InvalidInput("normalize: no scores");
    }
    auto u = min_max(scene_scores);
    if (mode.kind == NormKind::MinMax) {
        return u;
    }
    if (!(mode.exp_alpha > 0.0) || !std::isfinite(mode.exp_alpha)) {
        throw InvalidInput("normalize: exponential alpha must be positive");
    }
    const double denom = std::expm1(mode.exp_alpha);
    for (double& x : u) {
        x = std::expm1(mode.exp_alpha * x) / denom;
    }
    return u;
}

FrameScoreCurve inherit(std::span<const double> scene_values, const SceneSegmentation& seg) {
    if (scene_values.size() != seg.size()) {
        throw InvalidInput("inherit: " + std::to_string(scene_values.size()) + " scores for " +
                           std::to_string(seg.size()) + " scenes");
    }
    FrameScoreCurve z{std::vector<double>(seg.n_frames()), Stage::Inherited};
    for (std::size_t i = 0; i < seg.size(); ++i) {
        std::fill(z.values.begin() + static_cast<std::ptrdiff_t>(seg[i].start),
                  z.values.begin() + static_cast<std::ptrdiff_t>(seg[i].end), scene_values[i]);
    }
    return z;
}

double cosine_alpha(double t, double lo, double hi) {
    const double r = (t - lo) / (hi - lo);
    // cos(pi r) == sin(pi (1/2 - r)); this form is exact at r = 0, 1/2 and 1.
    return (1.0 - std::sin(std::numbers::pi * (0.5 - r))) / 2.0;
}

FrameScoreCurve cosine_smooth(const FrameScoreCurve& inherited, const SceneSegmentation& seg) {
    if (inherited.values.size() != seg.n_frames()) {
        throw InvalidInput("cosine_smooth: curve length does not match segmentation");
    }
    FrameScoreCurve z{inherited.values, Stage::Smoothed};
    for (std::size_t i = 0; i + 1 < seg.size(); ++i) {
        const double lo = seg[i].midpoint();
        const double hi = seg[i + 1].midpoint();
        const double a = inherited.values[seg[i].start];
        const double b = inherited.values[seg[i + 1].start];
        const auto first = static_cast<std::size_t>(std::ceil(lo));
        for (auto t = first; static_cast<double>(t) <= hi && t < seg.n_frames(); ++t) {
            if (static_cast<double>(t) == hi) {
                continue;  // a midpoint keeps its own scene value
            }
            const double alpha = cosine_alpha(static_cast<double>(t), lo, hi);
            z.values[t] = std::clamp(a + alpha * (b - a), std::min(a, b), std::max(a, b));
        }
    }
    return z;
}

double consistency(std::span<const std::size_t> window_labels) {
    if (window_labels.empty()) {
        throw InvalidInput("consistency: empty window");
    }
    std::map<std::size_t, std::size_t> counts;
    std::size_t best = 0;
    for (auto l : window_labels) {
        best = std::max(best, ++counts[l]);
    }
    return static_cast<double>(best) / static_cast<double>(window_labels.size());
}

double uniqueness(const FrameEmbeddings& window) {
    if (window.n_frames() == 0) {
        throw InvalidInput("uniqueness: empty window");
    }
    const auto mean = window.mean(0, window.n_frames());
    double total = 0.0;
    for (std::size_t i = 0; i < window.n_frames(); ++i) {
        const auto r = window.row(i);
        double s = 0.0;
        for (std::size_t d = 0; d < window.dim(); ++d) {
            const double diff = r[d] - mean[d];
            s += diff * diff;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(window.n_frames());
}

double segment_weight(double consistency_value, double uniqueness_value, double sigma) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) {
        throw InvalidInput("segment_weight: sigma must be in [0,1]");
    }
    return sigma * consistency_value + (1.0 - sigma) * uniqueness_value;
}

WeightSchedule schedule(double video_seconds, double short_threshold_seconds) {
    if (!(video_seconds > 0.0)) {
        throw InvalidInput("schedule: video length must be positive");
    }
    const double s = short_threshold_seconds;
    if (video_seconds > 5.0 * s) {
        return {0.1, 1.0, s};
    }
    if (video_seconds > s) {
        return {1.0, 1.0, s};
    }
    return {0.3, 3.0, s};
}

std::vector<double> frame_weights(const FrameEmbeddings& emb, const SceneSegmentation& seg, double fps,
                                  const WeightSchedule& sched, const WeightOptions& opt) {
    if (emb.n_frames() != seg.n_frames()) {
        throw InvalidInput("frame_weights: embeddings cover " + std::to_string(emb.n_frames()) +
                           " frames, segmentation " + std::to_string(seg.n_frames()));
    }
    if (!(fps > 0.0)) {
        throw InvalidInput("frame_weights: fps must be positive");
    }
    const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sched.window_seconds * fps)));
    std::vector<double> weights(seg.n_frames(), 1.0);
    const auto n_scenes = static_cast<std::ptrdiff_t>(seg.size());
    if (opt.backend == cluster::Backend::Parallel) {
        // Scenes write disjoint ranges; each scene's clustering runs serially inside its thread.
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n_scenes; ++i) {
            const auto k = static_cast<std::size_t>(i);
            weigh_scene(emb, seg[k], k, window, sched, opt.seed, cluster::Backend::Serial, weights);
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n_scenes; ++i) {
            const auto k = static_cast<std::size_t>(i);
            weigh_scene(emb, seg[k], k, window, sched, opt.seed, cluster::Backend::Serial, weights);
        }
    }
    return weights;
}

FrameScoreCurve combine(const FrameScoreCurve& smoothed, std::span<const double> weights) {
    if (smoothed.values.size() != weights.size()) {
        throw InvalidInput("combine: curve has " + std::to_string(smoothed.values.size()) + " frames, weights " +
                           std::to_string(weights.size()));
    }
    if (weights.empty()) {
        throw InvalidInput("combine: empty curve");
    }
    std::vector<double> product(weights.size());
    for (std::size_t t = 0; t < weights.size(); ++t) {
        product[t] = smoothed.values[t] * weights[t];
    }
    return {min_max(product), Stage::Weighted};
}

}  // namespace vsum::frames
