#ifndef VSUM_ERROR_HPP
#define VSUM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace vsum {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Raised by a remote or mock backend when a request cannot be served.
class BackendError : public Error {
public:
    BackendError(const std::string& what, bool transient = true)
        : Error(what), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

class CaptionError : public Error {
public:
    CaptionError(std::size_t scene_index, const std::string& what, bool backend_failure = false)
        : Error("scene " + std::to_string(scene_index) + ": " + what),
          scene_index_(scene_index),
          backend_failure_(backend_failure) {}
    std::size_t scene_index() const noexcept { return scene_index_; }
    /// True when the remote backend, not the response content, caused the failure.
    bool backend_failure() const noexcept { return backend_failure_; }

private:
    std::size_t scene_index_;
    bool backend_failure_;
};

class ScoringError : public Error {
public:
    ScoringError(std::size_t scene_index, const std::string& what, bool backend_failure = false)
        : Error("scene " + std::to_string(scene_index) + ": " + what),
          scene_index_(scene_index),
          backend_failure_(backend_failure) {}
    std::size_t scene_index() const noexcept { return scene_index_; }
    /// True when the remote backend, not the response content, caused the failure.
    bool backend_failure() const noexcept { return backend_failure_; }

private:
    std::size_t scene_index_;
    bool backend_failure_;
};

class MalformedScore : public Error {
public:
    using Error::Error;
};

class MalformedReason : public Error {
public:
    using Error::Error;
};

class InvalidRubric : public Error {
public:
    using Error::Error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class StageMissing : public Error {
public:
    using Error::Error;
};

/// Wraps a failure inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, bool remote = false)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)), remote_(remote) {}
    const std::string& stage() const noexcept { return stage_; }
    bool remote() const noexcept { return remote_; }

private:
    std::string stage_;
    bool remote_;
};

}  // namespace vsum

#endif  // VSUM_ERROR_HPP
