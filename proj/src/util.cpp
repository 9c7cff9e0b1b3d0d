#include "vsum/util.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "vsum/error.hpp"

namespace vsum {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

void bounded_for(std::size_t n, std::size_t limit, const std::function<void(std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(limit, 1, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

void RetryPolicy::wait_before_retry(int failed_attempt) const {
    const auto delay = base_delay * (1LL << std::min(failed_attempt - 1, 16));
    if (sleep) {
        sleep(delay);
    } else {
        std::this_thread::sleep_for(delay);
    }
}

namespace {

std::string flatten_key(std::string_view key) {
    std::string flat(key);
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    return flat;
}

}  // namespace

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path DiskCache::path_for(std::string_view key) const {
    return dir_ / (hex64(fnv1a64(key)) + ".txt");
}

std::optional<std::string> DiskCache::get(std::string_view key) const {
    if (!enabled()) {
        return std::nullopt;
    }
    std::shared_lock lock(mutex_);
    const auto p = path_for(key);
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    // First line stores the full key so hash collisions read as misses.
    std::string stored_key;
    std::getline(in, stored_key);
    if (stored_key != flatten_key(key)) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void DiskCache::put(std::string_view key, const std::string& value) const {
    if (!enabled()) {
        return;
    }
    std::unique_lock lock(mutex_);
    write_file(path_for(key), flatten_key(key) + "\n" + value);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InvalidInput("cannot write '" + path.string() + "'");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::optional<nlohmann::json> first_json_object(const std::string& text) {
    // first balanced {...} that parses as an object
    for (std::size_t open = text.find('{'); open != std::string::npos; open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                auto doc = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
                if (!doc.is_discarded() && doc.is_object()) {
                    return doc;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

}  // namespace vsum
