#ifndef VSUM_RUBRIC_HPP
#define VSUM_RUBRIC_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vsum {

struct RubricDimension {
    std::string key;  // short symbol used in the score formula, e.g. "R"
    std::string name;
    double weight = 0.0;
    std::string description;
};

struct RubricPenalty {
    std::string name;
    int value = 0;  // <= 0
    std::string trigger;
};

/// Weighted scoring dimensions on [0,100], additive penalties, and a bounded preference modifier.
struct Rubric {
    std::string name;
    std::vector<RubricDimension> dimensions;
    std::vector<RubricPenalty> penalties;
    int preference_adjustment_bound = 5;
    std::string calibration_notes;
    std::string output_rule = "Output exactly one integer in [0,100].";

    /// Throws InvalidRubric if weights do not sum to 1 or a penalty is positive.
    void validate() const;

    /// Text block embedded in scoring prompts.
    std::string render() const;

    const RubricPenalty* find_penalty(const std::string& name) const;

    nlohmann::json to_json() const;

    /// Built-in TVSum rubric.
    static Rubric tvsum();
};

Rubric load_rubric(const nlohmann::json& doc);
Rubric load_rubric_file(const std::filesystem::path& path);
/// Rubric from an LLM reply that embeds the JSON document in free text.
Rubric parse_rubric_reply(const std::string& text);

}  // namespace vsum

#endif  // VSUM_RUBRIC_HPP
