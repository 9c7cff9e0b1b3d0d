#ifndef VSUM_SCORING_HPP
#define VSUM_SCORING_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsum/clients.hpp"
#include "vsum/rubric.hpp"
#include "vsum/util.hpp"

namespace vsum::scoring {

enum class Mode { Boundary, Contextual };

const char* to_string(Mode m);

struct ScoringRequest {
    std::size_t scene_index = 0;
    std::size_t n_scenes = 1;
    std::string target_caption;
    std::string global_caption;
    std::optional<std::string> prev_caption;
    std::optional<std::string> next_caption;
    std::optional<std::string> preference;
    const Rubric* rubric = nullptr;
    Mode mode = Mode::Boundary;
};

struct SceneScore {
    std::size_t scene_index = 0;
    int value = 0;
    Mode mode = Mode::Boundary;
    int attempt_count = 0;
};

std::string build_boundary_prompt(const ScoringRequest& req);
std::string build_context_prompt(const ScoringRequest& req);

/// Strict: the trimmed text is one integer in [0,100]. Fallback: exactly one integer token anywhere.
int parse_score(const std::string& text);

struct ScoringOptions {
    std::string model = "mock";
    double temperature = 0.0;
    int attempts = 3;
    RetryPolicy retry;
    const DiskCache* cache = nullptr;
    std::size_t max_in_flight = 4;
    std::optional<std::string> preference;
    bool use_context = true;  // false: every scene is scored in Boundary mode
};

/// First and last scenes are scored from their own description; the rest see their neighbours as context.
std::vector<SceneScore> score_scenes(LlmClient& client, const std::vector<std::string>& captions,
                                     const std::string& global_caption, const Rubric& rubric,
                                     const ScoringOptions& opt);

enum class Novelty { New, Duplicated, Mixed };

/// Offline stand-in for what an LLM would judge about one scene.
struct MockSceneFeatures {
    std::map<std::string, int> dimension_scores;  // rubric key -> [0,100]
    std::vector<std::string> penalties;           // rubric penalty names
    Novelty novelty = Novelty::Mixed;
    int preference_match = 0;                     // [-5, +5]

    void validate() const;
    nlohmann::json to_json() const;
    static MockSceneFeatures from_json(const nlohmann::json& j);
};

/// clamp(round_half_up(sum w_k dim_k + penalties + PrefAdj + context), 0, 100).
int mock_rubric_score(const MockSceneFeatures& features, const Rubric& rubric, bool is_contextual);

/// Deterministic LLM backend for scoring, reason mining and rubric synthesis prompts.
class MockLlmClient final : public LlmClient {
public:
    MockLlmClient(std::uint64_t seed, Rubric rubric, std::map<std::size_t, MockSceneFeatures> fixtures = {});

    std::string complete(const LlmRequest& request) override;
    std::string backend_id() const override { return "mock-llm:" + std::to_string(seed_); }

    /// Features used when no fixture exists for a scene: a pure function of (seed, caption).
    MockSceneFeatures derived_features(const std::string& target_caption) const;

private:
    std::uint64_t seed_;
    Rubric rubric_;
    std::map<std::size_t, MockSceneFeatures> fixtures_;
};

}  // namespace vsum::scoring

#endif  // VSUM_SCORING_HPP
