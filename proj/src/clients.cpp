#include "vsum/clients.hpp"

#include <array>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "vsum/error.hpp"

namespace vsum {

namespace {

constexpr std::array kSubjects{"A man", "A woman", "A child", "A group of people", "A dog", "A cyclist",
                               "A chef", "A mechanic", "A crowd", "A performer"};
constexpr std::array kActions{"walks along", "works on", "points at", "prepares", "rides past",
                              "inspects", "cleans", "demonstrates", "waves toward", "carries"};
constexpr std::array kObjects{"a street", "a bicycle wheel", "a kitchen counter", "a parade float",
                              "a small boat", "a tire", "a sandwich", "a tunnel entrance", "the camera",
                              "a wooden table"};
constexpr std::array kSettings{"in bright daylight", "indoors", "near a river", "on a busy road",
                               "in a garage", "at a festival", "under an overcast sky", "in a park"};

struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw BackendError("endpoint '" + url + "' has no scheme", false);
    }
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string MockCaptionClient::caption(const CaptionRequest& request) {
    std::string key = request.video_id;
    for (auto i : request.frame_indices) {
        key += ":" + std::to_string(i);
    }
    std::mt19937_64 rng(fnv1a64(key, 0xcbf29ce484222325ULL ^ seed_));
    auto pick = [&rng](const auto& arr) { return arr[rng() % arr.size()]; };

    std::string text;
    const std::size_t sentences = 1 + rng() % 2;
    for (std::size_t s = 0; s < sentences; ++s) {
        if (!text.empty()) {
            text += ' ';
        }
        text += std::string(pick(kSubjects)) + " " + pick(kActions) + " " + pick(kObjects) + " " + pick(kSettings) + ".";
    }
    return text;
}

std::string base64_encode(std::string_view bytes) {
    return httplib::detail::base64_encode(std::string(bytes));
}

std::string post_json_for_text(const HttpEndpoint& endpoint, const std::string& body) {
    const auto [base, path] = split_url(endpoint.url);
    httplib::Client cli(base);
    cli.set_connection_timeout(endpoint.timeout_seconds, 0);
    cli.set_read_timeout(endpoint.timeout_seconds, 0);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
        throw BackendError("request to " + endpoint.url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        const bool transient = res->status == 429 || res->status >= 500;
        throw BackendError("request to " + endpoint.url + " returned HTTP " + std::to_string(res->status), transient);
    }
    try {
        const auto reply = nlohmann::json::parse(res->body);
        return reply.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("reply from " + endpoint.url + " is not {\"text\": ...}: " + e.what(), false);
    }
}

HttpCaptionClient::HttpCaptionClient(HttpEndpoint endpoint, FrameBytesSource frames)
    : endpoint_(std::move(endpoint)), frames_(std::move(frames)) {
    if (!frames_) {
        throw InvalidInput("http caption backend needs a frame image source");
    }
}

std::string HttpCaptionClient::caption(const CaptionRequest& request) {
    nlohmann::json body;
    body["prompt"] = request.prompt;
    auto frames = nlohmann::json::array();
    for (auto idx : request.frame_indices) {
        frames.push_back(base64_encode(frames_(idx)));
    }
    body["frames"] = std::move(frames);
    return post_json_for_text(endpoint_, body.dump());
}

std::string HttpLlmClient::complete(const LlmRequest& request) {
    const nlohmann::json body{{"model", request.model}, {"temperature", request.temperature}, {"prompt", request.prompt}};
    return post_json_for_text(endpoint_, body.dump());
}

}  // namespace vsum
