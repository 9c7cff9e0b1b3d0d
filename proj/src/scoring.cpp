#include "vsum/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "vsum/error.hpp"

namespace vsum::scoring {

namespace {

constexpr const char* kTargetIndex = "Target scene index: ";
constexpr const char* kTargetText = "Target scene description:\n";
constexpr const char* kPrevLabel = "Previous scene (context only):\n";
constexpr const char* kNextLabel = "Next scene (context only):\n";
constexpr const char* kPreference = "User preference:\n";
constexpr const char* kReasonMarker = "return STRICT JSON with the keys";
constexpr const char* kRubricMarker = "Consolidate these reasons into a scoring rubric";

const Rubric& rubric_of(const ScoringRequest& req) {
    if (req.rubric == nullptr) {
        throw InvalidInput("scoring request for scene " + std::to_string(req.scene_index) + " has no rubric");
    }
    return *req.rubric;
}

void append_common_inputs(std::ostringstream& out, const ScoringRequest& req) {
    out << "Global video description:\n" << req.global_caption << "\n\n";
    out << kTargetIndex << req.scene_index << " (of " << req.n_scenes << ")\n";
    out << kTargetText << req.target_caption << "\n\n";
}

std::string section(const std::string& prompt, const std::string& label) {
    const auto at = prompt.find(label);
    if (at == std::string::npos) {
        return {};
    }
    const auto begin = at + label.size();
    const auto end = prompt.find("\n\n", begin);
    return prompt.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::Boundary ? "boundary" : "contextual"; }

std::string build_boundary_prompt(const ScoringRequest& req) {
    if (req.mode != Mode::Boundary || req.prev_caption || req.next_caption) {
        throw InvalidInput("build_boundary_prompt: request for scene " + std::to_string(req.scene_index) +
                           " is not a boundary request");
    }
    const Rubric& rubric = rubric_of(req);
    std::ostringstream out;
    out << "Rubric (" << rubric.name << "):\n" << rubric.render() << "\n";
    out << "Instructions:\n"
        << "1) Use the dataset-specific rubric (" << rubric.name << ").\n"
        << "2) Inputs: (a) Global video description; (b) Target scene description.\n"
        << "3) No local context: ignore previous/next scenes entirely.\n"
        << "4) Score ONLY the target scene per rubric dimensions and penalties.\n";
    int rule = 5;
    if (req.preference) {
        out << rule++ << ") A user preference is provided: apply a small modifier to the Relevance dimension only "
            << "(at most +/-" << rubric.preference_adjustment_bound << ").\n";
    }
    out << rule << ") Output EXACTLY ONE integer in 0--100 (no words, no units).\n\n";
    append_common_inputs(out, req);
    if (req.preference) {
        out << kPreference << *req.preference << "\n\n";
    }
    return out.str();
}

std::string build_context_prompt(const ScoringRequest& req) {
    if (req.mode != Mode::Contextual || !req.prev_caption || !req.next_caption) {
        throw InvalidInput("build_context_prompt: request for scene " + std::to_string(req.scene_index) +
                           " is not a contextual request");
    }
    const Rubric& rubric = rubric_of(req);
    std::ostringstream out;
    out << "Rubric (" << rubric.name << "):\n" << rubric.render() << "\n";
    out << "Instructions:\n"
        << "1) Use the dataset-specific rubric (" << rubric.name << ").\n"
        << "2) Inputs: (a) Target scene (score this); (b) Global video description; (c) Previous scene (context "
           "only); (d) Next scene (context only).\n"
        << "3) Internally refine Previous and Next into 1-2 short notes each: who/what action, stage "
           "(setup/key/aftermath), new vs. repeated info, visibility; do NOT reveal these notes.\n"
        << "4) Base score comes PRIMARILY from the Target + Global per rubric; neighbors are only for a small "
           "adjustment.\n"
        << "5) Apply a conservative context adjustment (+/-5): +5 if the Target clearly adds NEW "
           "information/progression vs. both neighbors; -5 if largely DUPLICATED vs. both; 0 if unclear/mixed.\n";
    int rule = 6;
    if (req.preference) {
        out << rule++ << ") A user preference is provided: apply ONLY a subtle modifier to Relevance (at most +/-"
            << rubric.preference_adjustment_bound << "); do not alter other dimensions.\n";
    }
    out << rule << ") Always SCORE ONLY THE TARGET; neighbors are reference signals, not items to be scored.\n";
    out << rule + 1 << ") Output EXACTLY ONE integer in 0--100 (no words, no units).\n\n";
    append_common_inputs(out, req);
    out << kPrevLabel << *req.prev_caption << "\n\n";
    out << kNextLabel << *req.next_caption << "\n\n";
    if (req.preference) {
        out << kPreference << *req.preference << "\n\n";
    }
    return out.str();
}

int parse_score(const std::string& text) {
    // A strictly formatted reply ("73") is the one-token case of the lenient scan, so a single
    // pass serves both: count integer tokens, keeping a leading minus sign.
    std::vector<long long> tokens;
    for (std::size_t i = 0; i < text.size();) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        const long long magnitude = j - i > 6 ? 1000000 : std::stoll(text.substr(i, j - i));
        tokens.push_back(i > 0 && text[i - 1] == '-' ? -magnitude : magnitude);
        i = j;
    }
    if (tokens.size() != 1) {
        throw MalformedScore("expected exactly one integer, found " + std::to_string(tokens.size()) + " in '" +
                             trim(text) + "'");
    }
    if (tokens.front() < 0 || tokens.front() > 100) {
        throw MalformedScore("score " + std::to_string(tokens.front()) + " outside [0,100]");
    }
    return static_cast<int>(tokens.front());
}

std::vector<SceneScore> score_scenes(LlmClient& client, const std::vector<std::string>& captions,
                                     const std::string& global_caption, const Rubric& rubric,
                                     const ScoringOptions& opt) {
    if (captions.empty()) {
        throw InvalidInput("score_scenes: no scenes");
    }
    const std::size_t n = captions.size();
    auto score_one = [&](std::size_t i) -> SceneScore {
        ScoringRequest req;
        req.scene_index = i;
        req.n_scenes = n;
        req.target_caption = captions[i];
        req.global_caption = global_caption;
        req.preference = opt.preference;
        req.rubric = &rubric;
        req.mode = (!opt.use_context || i == 0 || i + 1 == n) ? Mode::Boundary : Mode::Contextual;
        if (req.mode == Mode::Contextual) {
            req.prev_caption = captions[i - 1];
            req.next_caption = captions[i + 1];
        }
        const std::string prompt =
            req.mode == Mode::Boundary ? build_boundary_prompt(req) : build_context_prompt(req);
        const std::string key = "score|" + client.backend_id() + "|" + opt.model + "|" + prompt;
        if (opt.cache != nullptr) {
            if (auto hit = opt.cache->get(key)) {
                try {
                    return {i, parse_score(*hit), req.mode, 0};
                } catch (const MalformedScore&) {
                    // stale entry; fall through to a fresh request
                }
            }
        }
        std::string last_error;
        for (int attempt = 1; attempt <= opt.attempts; ++attempt) {
            std::string reply;
            try {
                reply = client.complete({prompt, opt.model, opt.temperature});
            } catch (const BackendError& e) {
                last_error = e.what();
                if (!e.transient() || attempt == opt.attempts) {
                    throw ScoringError(i, "LLM backend failed after " + std::to_string(attempt) +
                                              " attempt(s): " + last_error, true);
                }
                opt.retry.wait_before_retry(attempt);
                continue;
            }
            try {
                const int value = parse_score(reply);
                if (opt.cache != nullptr) {
                    opt.cache->put(key, reply);
                }
                return {i, value, req.mode, attempt};
            } catch (const MalformedScore& e) {
                last_error = e.what();
            }
        }
        throw ScoringError(i, "no valid score after " + std::to_string(opt.attempts) + " attempts: " + last_error);
    };
    return bounded_map<SceneScore>(n, opt.max_in_flight, score_one);
}

void MockSceneFeatures::validate() const {
    for (const auto& [key, v] : dimension_scores) {
        if (v < 0 || v > 100) {
            throw InvalidInput("mock features: dimension '" + key + "' score " + std::to_string(v) +
                               " outside [0,100]");
        }
    }
    if (preference_match < -5 || preference_match > 5) {
        throw InvalidInput("mock features: preference_match outside [-5,5]");
    }
}

nlohmann::json MockSceneFeatures::to_json() const {
    const char* nov = novelty == Novelty::New ? "new" : novelty == Novelty::Duplicated ? "duplicated" : "mixed";
    return {{"dimensions", dimension_scores}, {"penalties", penalties}, {"novelty", nov},
            {"preference_match", preference_match}};
}

MockSceneFeatures MockSceneFeatures::from_json(const nlohmann::json& j) {
    MockSceneFeatures f;
    try {
        f.dimension_scores = j.at("dimensions").get<std::map<std::string, int>>();
        f.penalties = j.value("penalties", std::vector<std::string>{});
        const auto nov = j.value("novelty", std::string("mixed"));
        if (nov == "new") {
            f.novelty = Novelty::New;
        } else if (nov == "duplicated") {
            f.novelty = Novelty::Duplicated;
        } else if (nov == "mixed") {
            f.novelty = Novelty::Mixed;
        } else {
            throw InvalidInput("mock features: unknown novelty '" + nov + "'");
        }
        f.preference_match = j.value("preference_match", 0);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("mock features: ") + e.what());
    }
    f.validate();
    return f;
}

int mock_rubric_score(const MockSceneFeatures& features, const Rubric& rubric, bool is_contextual) {
    features.validate();
    double total = 0.0;
    for (const auto& dim : rubric.dimensions) {
        const auto it = features.dimension_scores.find(dim.key);
        if (it == features.dimension_scores.end()) {
            throw InvalidInput("mock features lack rubric dimension '" + dim.key + "'");
        }
        total += dim.weight * it->second;
    }
    for (const auto& name : features.penalties) {
        const auto* p = rubric.find_penalty(name);
        if (p == nullptr) {
            throw InvalidInput("mock features name unknown penalty '" + name + "'");
        }
        total += p->value;
    }
    const int bound = rubric.preference_adjustment_bound;
    total += std::clamp(features.preference_match, -bound, bound);
    if (is_contextual) {
        total += features.novelty == Novelty::New ? 5 : features.novelty == Novelty::Duplicated ? -5 : 0;
    }
    // Half-up rounding; the epsilon absorbs weight representation error (0.35 * 50 -> 17.4999...).
    const auto rounded = static_cast<long long>(std::floor(total + 0.5 + 1e-9));
    return static_cast<int>(std::clamp<long long>(rounded, 0, 100));
}

MockLlmClient::MockLlmClient(std::uint64_t seed, Rubric rubric, std::map<std::size_t, MockSceneFeatures> fixtures)
    : seed_(seed), rubric_(std::move(rubric)), fixtures_(std::move(fixtures)) {
    rubric_.validate();
}

MockSceneFeatures MockLlmClient::derived_features(const std::string& target_caption) const {
    std::mt19937_64 rng(fnv1a64(target_caption) ^ seed_);
    MockSceneFeatures f;
    for (const auto& dim : rubric_.dimensions) {
        f.dimension_scores[dim.key] = static_cast<int>(rng() % 101);
    }
    if (!rubric_.penalties.empty() && rng() % 5 == 0) {
        f.penalties.push_back(rubric_.penalties[rng() % rubric_.penalties.size()].name);
    }
    const auto nov = rng() % 3;
    f.novelty = nov == 0 ? Novelty::New : nov == 1 ? Novelty::Duplicated : Novelty::Mixed;
    f.preference_match = static_cast<int>(rng() % 11) - 5;
    return f;
}

std::string MockLlmClient::complete(const LlmRequest& request) {
    const std::string& prompt = request.prompt;
    std::mt19937_64 rng(fnv1a64(prompt) ^ seed_);
    if (prompt.find(kReasonMarker) != std::string::npos) {
        static constexpr const char* cues[] = {"hands-on steps", "clear close-ups", "visible progress",
                                               "interaction between people", "the main subject in motion"};
        static constexpr const char* lacks[] = {"static shots", "title cards", "repeated views",
                                                "off-topic surroundings", "poor visibility"};
        const nlohmann::json reply{
            {"reason_positive", std::string("High-score segments show ") + cues[rng() % 5] + "."},
            {"reason_negative", std::string("Low-score segments are dominated by ") + lacks[rng() % 5] + "."},
            {"reason_difference", "High-score segments advance the activity while low-score ones do not."}};
        return reply.dump();
    }
    if (prompt.find(kRubricMarker) != std::string::npos) {
        auto doc = rubric_.to_json();
        doc["calibration"] = "90-100 decisive key step; 60-89 clear progress; 30-59 context; 0-29 filler.";
        return "Here is the rubric:\n" + doc.dump(2);
    }

    const auto index_line = section(prompt, kTargetIndex);
    if (index_line.empty()) {
        throw BackendError("mock LLM: unrecognized prompt", false);
    }
    const std::size_t scene = std::stoul(index_line);
    const auto fixture = fixtures_.find(scene);
    MockSceneFeatures features =
        fixture != fixtures_.end() ? fixture->second : derived_features(section(prompt, kTargetText));
    if (prompt.find(kPreference) == std::string::npos) {
        features.preference_match = 0;
    }
    const bool contextual = prompt.find(kPrevLabel) != std::string::npos;
    return std::to_string(mock_rubric_score(features, rubric_, contextual));
}

}  // namespace vsum::scoring
