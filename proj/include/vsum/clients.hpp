#ifndef VSUM_CLIENTS_HPP
#define VSUM_CLIENTS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vsum/util.hpp"

namespace vsum {

inline constexpr const char* kCaptionPrompt = "Describe this video in detail";

struct CaptionRequest {
    std::string video_id;
    std::size_t scene_index = 0;
    std::size_t batch_index = 0;
    std::vector<std::size_t> frame_indices;
    std::string prompt = kCaptionPrompt;
};

class CaptionClient {
public:
    virtual ~CaptionClient() = default;
    /// May throw BackendError; transient errors are retried by the caller.
    virtual std::string caption(const CaptionRequest& request) = 0;
    virtual std::string backend_id() const = 0;
};

struct LlmRequest {
    std::string prompt;
    std::string model = "mock";
    double temperature = 0.0;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const LlmRequest& request) = 0;
    virtual std::string backend_id() const = 0;
};

/// Offline caption backend; text is a pure function of (seed, video id, frame indices).
class MockCaptionClient final : public CaptionClient {
public:
    explicit MockCaptionClient(std::uint64_t seed) : seed_(seed) {}
    std::string caption(const CaptionRequest& request) override;
    std::string backend_id() const override { return "mock:" + std::to_string(seed_); }

private:
    std::uint64_t seed_;
};

/// Returns encoded image bytes (JPEG) for a frame index.
using FrameBytesSource = std::function<std::string(std::size_t frame_index)>;

struct HttpEndpoint {
    std::string url;  // http://host[:port]/path
    std::string api_key;
    int timeout_seconds = 120;
};

/// JSON-over-HTTP caption backend: POST {frames: [base64 JPEG], prompt} -> {text}.
class HttpCaptionClient final : public CaptionClient {
public:
    HttpCaptionClient(HttpEndpoint endpoint, FrameBytesSource frames);
    std::string caption(const CaptionRequest& request) override;
    std::string backend_id() const override { return "http:" + endpoint_.url; }

private:
    HttpEndpoint endpoint_;
    FrameBytesSource frames_;
};

/// JSON-over-HTTP LLM backend: POST {model, temperature, prompt} -> {text}.
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string complete(const LlmRequest& request) override;
    std::string backend_id() const override { return "http:" + endpoint_.url; }

private:
    HttpEndpoint endpoint_;
};

/// POSTs a JSON body and returns the "text" field of the JSON reply. Throws BackendError.
std::string post_json_for_text(const HttpEndpoint& endpoint, const std::string& body);

std::string base64_encode(std::string_view bytes);

}  // namespace vsum

#endif  // VSUM_CLIENTS_HPP
