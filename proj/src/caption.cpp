#include "vsum/caption.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <string_view>

#include "vsum/error.hpp"

namespace vsum::caption {

namespace {

constexpr std::string_view kContinue = "The video continues";
constexpr std::string_view kSceneEnd = "The scene concludes";
constexpr std::array<std::string_view, 2> kBeginPhrases{"The video begins", "The video starts"};
constexpr std::array<std::string_view, 2> kEndPhrases{"The video ends", "The video concludes"};

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    return text.size() >= prefix.size() && to_lower(text.substr(0, prefix.size())) == to_lower(prefix);
}

// Start offset of the final sentence (after the last terminator that is followed by more text).
std::size_t final_sentence_start(std::string_view text) {
    std::size_t end = text.size();
    while (end > 0 && (text[end - 1] == '.' || text[end - 1] == '!' || text[end - 1] == '?' ||
                       std::isspace(static_cast<unsigned char>(text[end - 1])))) {
        --end;
    }
    for (std::size_t i = end; i > 0; --i) {
        const char c = text[i - 1];
        if (c == '.' || c == '!' || c == '?') {
            std::size_t s = i;
            while (s < text.size() && std::isspace(static_cast<unsigned char>(text[s]))) {
                ++s;
            }
            return s;
        }
    }
    return 0;
}

}  // namespace

FrameSamplingPlan sample_middle_frames(double fps, std::size_t n_frames) {
    if (!(fps > 0.0) || !std::isfinite(fps)) {
        throw InvalidInput("sample_middle_frames: fps must be positive");
    }
    if (n_frames == 0) {
        throw InvalidInput("sample_middle_frames: n_frames must be positive");
    }
    FrameSamplingPlan plan{fps, {}};
    for (std::size_t k = 0; static_cast<double>(k) * fps < static_cast<double>(n_frames); ++k) {
        auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(k) * fps + fps / 2.0));
        idx = std::min(idx, n_frames - 1);
        if (plan.indices.empty() || idx > plan.indices.back()) {
            plan.indices.push_back(idx);
        }
    }
    return plan;
}

std::vector<CaptionBatch> batch_frames(const FrameSamplingPlan& plan, std::size_t batch_size) {
    if (batch_size == 0) {
        throw InvalidInput("batch_frames: batch_size must be at least 1");
    }
    std::vector<CaptionBatch> out;
    for (std::size_t i = 0; i < plan.indices.size(); i += batch_size) {
        CaptionBatch b;
        b.batch_index = out.size();
        const std::size_t end = std::min(i + batch_size, plan.indices.size());
        b.frame_indices.assign(plan.indices.begin() + static_cast<std::ptrdiff_t>(i),
                               plan.indices.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(b));
    }
    if (!out.empty()) {
        out.front().is_first = true;
        out.back().is_last = true;
    }
    return out;
}

std::string normalize_batch_text(const std::string& text, bool is_first, bool is_last) {
    std::string out = trim(text);
    if (!is_first) {
        bool replaced = false;
        for (auto phrase : kBeginPhrases) {
            if (starts_with_ci(out, phrase)) {
                out.replace(0, phrase.size(), kContinue);
                replaced = true;
                break;
            }
        }
        if (!replaced && !starts_with_ci(out, kContinue)) {
            out = std::string(kContinue) + ". " + out;
        }
    }
    if (!is_last) {
        const std::size_t s = final_sentence_start(out);
        for (auto phrase : kEndPhrases) {
            if (starts_with_ci(std::string_view(out).substr(s), phrase)) {
                out.replace(s, phrase.size(), kSceneEnd);
                break;
            }
        }
    }
    return out;
}

std::string stitch(const std::vector<CaptionBatch>& batches) {
    if (batches.empty()) {
        throw InvalidInput("stitch: no batches");
    }
    std::string out;
    for (const auto& b : batches) {
        if (!out.empty()) {
            out += ' ';
        }
        out += normalize_batch_text(b.text, b.is_first, b.is_last);
    }
    return out;
}

SceneCaption describe_scene(CaptionClient& client, std::size_t scene_index, Interval scene, const CaptionOptions& opt) {
    if (scene.length() == 0) {
        throw CaptionError(scene_index, "empty scene");
    }
    auto plan = sample_middle_frames(opt.fps, scene.length());
    for (auto& idx : plan.indices) {
        idx += scene.start;
    }
    auto batches = batch_frames(plan, opt.batch_size);

    for (auto& batch : batches) {
        std::string key = "caption|" + client.backend_id() + "|" + opt.video_id + "|" + std::to_string(scene.start) +
                          "-" + std::to_string(scene.end) + "|" + std::to_string(opt.batch_size) + "|" +
                          std::to_string(batch.batch_index);
        if (opt.cache != nullptr) {
            if (auto hit = opt.cache->get(key)) {
                batch.text = *hit;
                continue;
            }
        }
        CaptionRequest req{opt.video_id, scene_index, batch.batch_index, batch.frame_indices, kCaptionPrompt};
        for (int attempt = 1;; ++attempt) {
            try {
                batch.text = trim(client.caption(req));
                if (batch.text.empty()) {
                    throw BackendError("empty caption");
                }
                break;
            } catch (const BackendError& e) {
                if (!e.transient() || attempt >= opt.retry.attempts) {
                    throw CaptionError(scene_index, "caption backend failed after " + std::to_string(attempt) +
                                                        " attempt(s): " + e.what(), true);
                }
                opt.retry.wait_before_retry(attempt);
            }
        }
        if (opt.cache != nullptr) {
            opt.cache->put(key, batch.text);
        }
    }
    return {scene_index, stitch(batches)};
}

std::vector<SceneCaption> describe_scenes(CaptionClient& client, const SceneSegmentation& seg,
                                          const CaptionOptions& opt, std::size_t max_in_flight) {
    return bounded_map<SceneCaption>(seg.size(), max_in_flight,
                                     [&](std::size_t i) { return describe_scene(client, i, seg[i], opt); });
}

std::string describe_video(CaptionClient& client, std::size_t n_frames, const CaptionOptions& opt) {
    return describe_scene(client, 0, Interval{0, n_frames}, opt).text;
}

}  // namespace vsum::caption
