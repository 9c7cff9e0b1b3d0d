#include "vsum/rubric.hpp"

#include <cmath>
#include <sstream>

#include "vsum/error.hpp"
#include "vsum/util.hpp"

namespace vsum {

void Rubric::validate() const {
    if (dimensions.empty()) {
        throw InvalidRubric("rubric '" + name + "': no dimensions");
    }
    double sum = 0.0;
    for (const auto& d : dimensions) {
        if (!(d.weight > 0.0 && d.weight < 1.0) && !(dimensions.size() == 1 && d.weight == 1.0)) {
            throw InvalidRubric("rubric '" + name + "': weight of '" + d.name + "' outside (0,1)");
        }
        if (d.key.empty()) {
            throw InvalidRubric("rubric '" + name + "': dimension '" + d.name + "' has no key");
        }
        sum += d.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "rubric '" << name << "': weights sum to " << sum << ", expected 1";
        throw InvalidRubric(msg.str());
    }
    for (const auto& p : penalties) {
        if (p.value > 0) {
            throw InvalidRubric("rubric '" + name + "': penalty '" + p.name + "' is positive (" +
                                std::to_string(p.value) + ")");
        }
    }
    if (preference_adjustment_bound < 0) {
        throw InvalidRubric("rubric '" + name + "': negative preference adjustment bound");
    }
}

std::string Rubric::render() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < dimensions.size(); ++i) {
        const auto& d = dimensions[i];
        out << i + 1 << ") " << d.name << " (0-" << std::lround(d.weight * 100.0) << ")\n";
        std::istringstream lines(d.description);
        for (std::string line; std::getline(lines, line);) {
            if (!trim(line).empty()) {
                out << "   - " << trim(line) << "\n";
            }
        }
    }
    if (!penalties.empty()) {
        out << "Penalties: ";
        for (std::size_t i = 0; i < penalties.size(); ++i) {
            out << (i ? ", " : "") << penalties[i].name << " (" << penalties[i].value << ")";
        }
        out << ".\n";
    }
    out << "Final score = round(";
    for (std::size_t i = 0; i < dimensions.size(); ++i) {
        char w[16];
        std::snprintf(w, sizeof w, "%.2f", dimensions[i].weight);
        out << (i ? " + " : "") << w << dimensions[i].key;
    }
    out << " + PrefAdj), clamp [0,100].\n";
    if (!calibration_notes.empty()) {
        out << "Calibration: " << calibration_notes << "\n";
    }
    out << output_rule << "\n";
    return out.str();
}

const RubricPenalty* Rubric::find_penalty(const std::string& penalty_name) const {
    for (const auto& p : penalties) {
        if (p.name == penalty_name) {
            return &p;
        }
    }
    return nullptr;
}

nlohmann::json Rubric::to_json() const {
    nlohmann::json doc;
    doc["name"] = name;
    auto& w = doc["weights"] = nlohmann::json::array();
    for (const auto& d : dimensions) {
        w.push_back({{"key", d.key}, {"name", d.name}, {"weight", d.weight}, {"description", d.description}});
    }
    auto& p = doc["penalties"] = nlohmann::json::array();
    for (const auto& pen : penalties) {
        p.push_back({{"name", pen.name}, {"value", pen.value}, {"trigger", pen.trigger}});
    }
    doc["preference_adjustment_bound"] = preference_adjustment_bound;
    doc["calibration"] = calibration_notes;
    doc["output_rule"] = output_rule;
    return doc;
}

Rubric Rubric::tvsum() {
    Rubric r;
    r.name = "tvsum";
    r.dimensions = {
        {"R", "Task/Thematic Relevance", 0.35,
         "Advances the core activity (hands-on steps: grooming/feeding/repair/cooking; riders in motion; "
         "performers/floats).\nLow if generic or unrelated."},
        {"A", "Action/Interaction & Skill", 0.20,
         "Concrete interactions (human-animal, human-tool, performer-crowd, rider-bike), visible skill/risk."},
        {"D", "Detail & Visibility", 0.15,
         "Close-ups of hands/tools/animals/ingredients/parts; clarity to learn the step; hygiene/safety cues add "
         "credibility."},
        {"U", "Informational Uniqueness", 0.15, "New step/angle/outcome vs. adjacent scenes; penalize near-duplicates."},
        {"N", "Narrative Progression", 0.15,
         "Bridges setup->action->result or marks a turning point/outcome verification."},
    };
    r.penalties = {
        {"title/logo/blank", -15, "title cards, logos, blank or black frames"},
        {"off-topic", -10, "content unrelated to the video's theme"},
        {"static", -8, "little or no motion or change"},
        {"low visibility", -6, "dark, blurred or occluded view"},
        {"redundancy", -6, "repeats information already shown"},
    };
    r.preference_adjustment_bound = 5;
    r.output_rule = "Output exactly one integer in [0,100].";
    return r;
}

Rubric load_rubric(const nlohmann::json& doc) {
    Rubric r;
    try {
        r.name = doc.value("name", std::string("unnamed"));
        for (const auto& w : doc.at("weights")) {
            r.dimensions.push_back({w.at("key").get<std::string>(), w.at("name").get<std::string>(),
                                    w.at("weight").get<double>(), w.value("description", std::string())});
        }
        for (const auto& p : doc.value("penalties", nlohmann::json::array())) {
            r.penalties.push_back(
                {p.at("name").get<std::string>(), p.at("value").get<int>(), p.value("trigger", std::string())});
        }
        r.preference_adjustment_bound = doc.value("preference_adjustment_bound", 5);
        r.calibration_notes = doc.value("calibration", std::string());
        r.output_rule = doc.value("output_rule", r.output_rule);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidRubric(std::string("rubric document: ") + e.what());
    }
    r.validate();
    return r;
}

Rubric load_rubric_file(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidRubric("rubric '" + path.string() + "': " + e.what());
    }
    return load_rubric(doc);
}

Rubric parse_rubric_reply(const std::string& text) {
    const auto doc = first_json_object(text);
    if (!doc) {
        throw InvalidRubric("rubric reply contains no JSON object");
    }
    return load_rubric(*doc);
}

}  // namespace vsum
