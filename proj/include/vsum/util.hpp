#ifndef VSUM_UTIL_HPP
#define VSUM_UTIL_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vsum {

/// 64-bit FNV-1a; stable across platforms, used for cache keys and mock seeding.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Runs fn(i) for i in [0, n) with at most `limit` calls in flight. Results keep index order.
/// The first exception (lowest index) is rethrown after all workers finish.
template <typename T>
std::vector<T> bounded_map(std::size_t n, std::size_t limit, const std::function<T(std::size_t)>& fn);

void bounded_for(std::size_t n, std::size_t limit, const std::function<void(std::size_t)>& fn);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    /// Injected so tests can run without sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;

    void wait_before_retry(int failed_attempt) const;
};

/// Content-addressed text cache on disk. Concurrent readers, serialized writers.
class DiskCache {
public:
    DiskCache() = default;  // disabled
    explicit DiskCache(std::filesystem::path dir);

    bool enabled() const noexcept { return !dir_.empty(); }
    std::optional<std::string> get(std::string_view key) const;
    void put(std::string_view key, const std::string& value) const;

private:
    std::filesystem::path path_for(std::string_view key) const;

    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
};

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// ---- template implementation

template <typename T>
std::vector<T> bounded_map(std::size_t n, std::size_t limit, const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(n);
    bounded_for(n, limit, [&](std::size_t i) { slots[i].emplace(fn(i)); });
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

/// First balanced {...} in free text that parses as a JSON object.
std::optional<nlohmann::json> first_json_object(const std::string& text);

}  // namespace vsum

#endif  // VSUM_UTIL_HPP
