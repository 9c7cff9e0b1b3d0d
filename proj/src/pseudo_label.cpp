#include "vsum/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vsum/error.hpp"

namespace vsum::pseudo {

FrameAnnotations::FrameAnnotations(std::vector<double> s) : scores(std::move(s)) {
    for (std::size_t t = 0; t < scores.size(); ++t) {
        if (!(scores[t] >= 0.0 && scores[t] <= 1.0)) {
            throw InvalidInput("annotation at frame " + std::to_string(t) + " outside [0,1]");
        }
    }
}

FrameAnnotations normalize_raw_annotations(const std::vector<std::vector<double>>& per_user_raw, double lo, double hi) {
    if (!(hi > lo)) {
        throw InvalidInput("annotation scale: hi must exceed lo");
    }
    std::vector<std::vector<double>> scaled = per_user_raw;
    for (auto& user : scaled) {
        for (double& v : user) {
            v = (v - lo) / (hi - lo);
        }
    }
    return mean_annotations(scaled);
}

FrameAnnotations mean_annotations(const std::vector<std::vector<double>>& per_user) {
    if (per_user.empty()) {
        throw InvalidInput("annotations: no users");
    }
    const std::size_t n = per_user.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& user : per_user) {
        if (user.size() != n) {
            throw InvalidInput("annotations: users disagree on frame count");
        }
        for (std::size_t t = 0; t < n; ++t) {
            mean[t] += user[t];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(per_user.size());
    }
    return FrameAnnotations(std::move(mean));
}

std::vector<double> segment_scores(const FrameAnnotations& g, const SceneSegmentation& seg) {
    if (g.n_frames() != seg.n_frames()) {
        throw InvalidInput("segment_scores: annotations cover " + std::to_string(g.n_frames()) +
                           " frames, segmentation " + std::to_string(seg.n_frames()));
    }
    std::vector<double> out;
    out.reserve(seg.size());
    for (const auto& iv : seg.intervals()) {
        double sum = 0.0;
        for (std::size_t t = iv.start; t < iv.end; ++t) {
            sum += g.scores[t];
        }
        out.push_back(sum / static_cast<double>(iv.length()));
    }
    return out;
}

ExemplarSet select_exemplars(std::span<const double> scores, const std::vector<caption::SceneCaption>& captions,
                             std::size_t k) {
    if (captions.size() != scores.size()) {
        throw InvalidInput("select_exemplars: " + std::to_string(scores.size()) + " scores but " +
                           std::to_string(captions.size()) + " captions");
    }
    ExemplarSet out;
    const std::size_t n = scores.size();
    if (n < 2 * k) {
        out.warning = "only " + std::to_string(n) + " segments; exemplar count reduced from " + std::to_string(k) +
                      " to " + std::to_string(n / 2);
        k = n / 2;
    }
    out.k = k;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t r = 0; r < k; ++r) {
        const auto hi = order[r];
        out.high.push_back({hi, captions[hi].text, scores[hi]});
        const auto lo = order[n - 1 - r];
        out.low.push_back({lo, captions[lo].text, scores[lo]});
    }
    return out;
}

std::string build_reason_prompt(const ExemplarSet& ex) {
    if (ex.high.empty() || ex.low.empty()) {
        throw InvalidInput("build_reason_prompt: empty exemplar set");
    }
    std::ostringstream out;
    out << "Below are scene descriptions from one video together with their human importance scores in [0,1].\n\n";
    auto list = [&out](const char* title, const std::vector<Exemplar>& items) {
        out << title << "\n";
        for (const auto& e : items) {
            char score[32];
            std::snprintf(score, sizeof score, "%.4f", e.score);
            out << "- [segment " << e.segment_index << ", score " << score << "] " << e.caption << "\n";
        }
        out << "\n";
    };
    list("HIGH-score segments:", ex.high);
    list("LOW-score segments:", ex.low);
    out << "You will write THREE concrete reasons for this video and return STRICT JSON with the keys:\n"
           "- \"reason_positive\": one succinct but specific reason why the HIGH-score segments are key.\n"
           "- \"reason_negative\": one succinct but specific reason why the LOW-score segments are not key.\n"
           "- \"reason_difference\": one succinct but specific reason explaining their essential difference.\n"
           "Ground every reason in observable visual elements and actions. Return only the JSON object.\n";
    return out.str();
}

ReasonTriple parse_reason_json(const std::string& text) {
    const auto doc = first_json_object(text);
    if (!doc) {
        throw MalformedReason("no JSON object in response");
    }
    ReasonTriple r;
    const std::pair<const char*, std::string*> keys[] = {{"reason_positive", &r.reason_positive},
                                                         {"reason_negative", &r.reason_negative},
                                                         {"reason_difference", &r.reason_difference}};
    for (const auto& [key, dst] : keys) {
        if (!doc->contains(key) || !(*doc)[key].is_string()) {
            throw MalformedReason(std::string("reason JSON lacks string key '") + key + "'");
        }
        *dst = trim((*doc)[key].get<std::string>());
        if (dst->empty()) {
            throw MalformedReason(std::string("reason JSON has empty '") + key + "'");
        }
    }
    return r;
}

std::string build_rubric_prompt(const std::vector<ReasonTriple>& reasons, const std::string& dataset_tag) {
    if (reasons.empty()) {
        throw InvalidInput("build_rubric_prompt: no reasons");
    }
    std::ostringstream out;
    out << "Dataset: " << dataset_tag << "\n"
        << "You are given reasons mined from " << reasons.size()
        << " videos explaining why high-importance scenes matter, why low-importance scenes do not, and what "
           "separates them.\n\n";
    for (std::size_t i = 0; i < reasons.size(); ++i) {
        out << "Video " << i + 1 << ":\n"
            << "  positive: " << reasons[i].reason_positive << "\n"
            << "  negative: " << reasons[i].reason_negative << "\n"
            << "  difference: " << reasons[i].reason_difference << "\n";
    }
    out << "\nConsolidate these reasons into a scoring rubric for the " << dataset_tag << " dataset:\n"
        << "(i) Cluster recurring positive, negative and difference cues across videos.\n"
        << "(ii) Elevate the clusters into weighted evaluation dimensions with explicit constraints and penalties.\n"
        << "(iii) Add category-specific checklists capturing dataset idiosyncrasies.\n"
        << "(iv) Formalize a calibration ladder and the exact output rule: output exactly one integer in [0,100].\n"
        << "Return the rubric as a JSON object with fields name, weights (key, name, weight, description), "
           "penalties (name, value, trigger), calibration and output_rule.\n";
    return out.str();
}

std::vector<std::string> sample_pseudo_videos(const std::vector<std::string>& video_ids, double ratio,
                                              std::uint64_t seed) {
    if (video_ids.empty()) {
        throw InvalidInput("sample_pseudo_videos: no videos");
    }
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidInput("sample_pseudo_videos: ratio must be in (0,1]");
    }
    const auto n = video_ids.size();
    const auto want = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9)));
    // Partial Fisher-Yates with explicit index arithmetic so the draw does not depend on the standard library.
    std::vector<std::string> pool = video_ids;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(want);
    return pool;
}

std::vector<int> qfvs_shot_annotations(std::span<const std::size_t> oracle_shots, std::size_t n_shots) {
    std::vector<int> labels(n_shots, 0);
    for (auto s : oracle_shots) {
        if (s >= n_shots) {
            throw InvalidInput("qfvs_shot_annotations: shot " + std::to_string(s) + " out of range (n=" +
                               std::to_string(n_shots) + ")");
        }
        labels[s] = 1;
    }
    return labels;
}

SceneSegmentation uniform_shots(std::size_t n_frames, double fps, double shot_seconds) {
    if (!(fps > 0.0) || !(shot_seconds > 0.0)) {
        throw InvalidInput("uniform_shots: fps and shot length must be positive");
    }
    const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fps * shot_seconds)));
    std::vector<Interval> shots;
    for (std::size_t s = 0; s < n_frames; s += len) {
        shots.push_back({s, std::min(s + len, n_frames)});
    }
    return SceneSegmentation(std::move(shots), n_frames);
}

}  // namespace vsum::pseudo
