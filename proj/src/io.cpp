#include "vsum/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>

#include "vsum/error.hpp"
#include "vsum/util.hpp"

namespace vsum::io {

namespace {

constexpr char kFramesMagic[5] = {'V', 'S', 'F', 'R', '1'};
constexpr std::uint16_t kFramesVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    Reader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(origin_ + ": truncated " + what + " (need " + std::to_string(n) + " bytes at offset " +
                              std::to_string(pos_) + ", have " + std::to_string(bytes_.size() - pos_) + ")");
        }
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes_[pos_++]); }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = u8();
        v |= static_cast<std::uint16_t>(u8() << 8);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        }
        return v;
    }
    void magic(const char (&expected)[5]) {
        need(5, "magic");
        if (std::memcmp(bytes_.data() + pos_, expected, 5) != 0) {
            throw FormatError(origin_ + ": bad magic (expected " + std::string(expected, 5) + ")");
        }
        pos_ += 5;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t pos() const { return pos_; }
    const std::string& origin() const { return origin_; }
    const std::string& bytes() const { return bytes_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const std::string& bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) {
        throw FormatError(std::string(what) + " exceeds 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw ManifestError(where + "." + key + ": missing field");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(where + "." + key + ": " + e.what());
    }
}

}  // namespace

std::string encode_embeddings(const FrameEmbeddings& emb) {
    std::string out(kEmbeddingMagic, 5);
    put_u16(out, kEmbeddingVersion);
    put_u32(out, checked_u32(emb.n_frames(), "n_frames"));
    put_u32(out, checked_u32(emb.dim(), "dim"));
    out.reserve(out.size() + emb.values().size() * 4);
    for (float v : emb.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

FrameEmbeddings decode_embeddings(const std::string& bytes, const std::string& origin) {
    Reader r(bytes, origin);
    r.magic(kEmbeddingMagic);
    const auto version = r.u16("version");
    if (version != kEmbeddingVersion) {
        throw FormatError(origin + ": unsupported embedding version " + std::to_string(version));
    }
    const std::size_t n = r.u32("n_frames");
    const std::size_t dim = r.u32("dim");
    const std::size_t payload = n * dim * 4;
    if (r.remaining() < payload) {
        throw FormatError(origin + ": truncated payload (declared " + std::to_string(n) + "x" + std::to_string(dim) +
                          " needs " + std::to_string(payload) + " bytes, have " + std::to_string(r.remaining()) + ")");
    }
    if (r.remaining() > payload) {
        throw FormatError(origin + ": " + std::to_string(r.remaining() - payload) + " trailing bytes");
    }
    std::vector<float> values(n * dim);
    for (auto& v : values) {
        v = std::bit_cast<float>(r.u32("payload"));
    }
    try {
        return FrameEmbeddings(n, dim, std::move(values));
    } catch (const InvalidInput& e) {
        throw FormatError(origin + ": " + e.what());
    }
}

void save_embeddings(const std::filesystem::path& path, const FrameEmbeddings& emb) {
    write_file(path, encode_embeddings(emb));
}

FrameEmbeddings load_embeddings(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("embedding file '" + path.string() + "' does not exist");
    }
    return decode_embeddings(read_file(path), path.string());
}

std::string encode_frames(const std::vector<scene::RgbImage>& frames) {
    std::string out(kFramesMagic, 5);
    put_u16(out, kFramesVersion);
    const std::size_t w = frames.empty() ? 0 : frames.front().width;
    const std::size_t h = frames.empty() ? 0 : frames.front().height;
    put_u32(out, checked_u32(frames.size(), "n_frames"));
    put_u32(out, checked_u32(w, "width"));
    put_u32(out, checked_u32(h, "height"));
    for (const auto& f : frames) {
        if (f.width != w || f.height != h || f.pixels.size() != w * h * 3) {
            throw FormatError("frames: all frames must share one size");
        }
        out.append(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
    }
    return out;
}

std::vector<scene::RgbImage> decode_frames(const std::string& bytes, const std::string& origin) {
    Reader r(bytes, origin);
    r.magic(kFramesMagic);
    const auto version = r.u16("version");
    if (version != kFramesVersion) {
        throw FormatError(origin + ": unsupported frames version " + std::to_string(version));
    }
    const std::size_t n = r.u32("n_frames");
    const std::size_t w = r.u32("width");
    const std::size_t h = r.u32("height");
    const std::size_t frame_bytes = w * h * 3;
    if (r.remaining() != n * frame_bytes) {
        throw FormatError(origin + ": payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(n * frame_bytes));
    }
    std::vector<scene::RgbImage> frames(n);
    for (auto& f : frames) {
        f.width = w;
        f.height = h;
        const auto* begin = reinterpret_cast<const std::uint8_t*>(r.bytes().data() + r.pos());
        f.pixels.assign(begin, begin + frame_bytes);
        r.skip(frame_bytes);
    }
    return frames;
}

void save_frames(const std::filesystem::path& path, const std::vector<scene::RgbImage>& frames) {
    write_file(path, encode_frames(frames));
}

std::vector<scene::RgbImage> load_frames(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("frames file '" + path.string() + "' does not exist");
    }
    return decode_frames(read_file(path), path.string());
}

const VideoEntry& DatasetManifest::video(const std::string& id) const {
    for (const auto& v : videos) {
        if (v.id == id) {
            return v;
        }
    }
    throw ManifestError("manifest has no video '" + id + "'");
}

std::vector<std::string> DatasetManifest::video_ids() const {
    std::vector<std::string> ids;
    for (const auto& v : videos) {
        ids.push_back(v.id);
    }
    return ids;
}

DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    DatasetManifest m;
    m.base_dir = base_dir;
    m.dataset_tag = field<std::string>(doc, "dataset", "manifest");
    try {
        m.dataset = eval::parse_dataset(m.dataset_tag);
    } catch (const InvalidInput& e) {
        throw ManifestError(std::string("manifest.dataset: ") + e.what());
    }
    if (!doc.contains("videos") || !doc["videos"].is_array()) {
        throw ManifestError("manifest.videos: missing or not an array");
    }
    const auto& videos = doc["videos"];
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
        const auto& jv = videos[vi];
        const std::string where = "videos[" + std::to_string(vi) + "]";
        VideoEntry v;
        v.id = field<std::string>(jv, "id", where);
        const std::string vwhere = where + " (video '" + v.id + "')";
        v.fps = field<double>(jv, "fps", vwhere);
        if (!(v.fps > 0.0)) {
            throw ManifestError(vwhere + ".fps: must be positive, got " + std::to_string(v.fps));
        }
        v.n_frames = field<std::size_t>(jv, "n_frames", vwhere);
        if (v.n_frames == 0) {
            throw ManifestError(vwhere + ".n_frames: must be positive");
        }
        std::optional<std::pair<double, double>> scale;
        if (jv.contains("annotation_scale")) {
            const auto s = field<std::vector<double>>(jv, "annotation_scale", vwhere);
            if (s.size() != 2 || !(s[1] > s[0])) {
                throw ManifestError(vwhere + ".annotation_scale: expected [lo, hi] with hi > lo");
            }
            scale = std::pair{s[0], s[1]};
        }
        if (jv.contains("annotations")) {
            const auto& ja = jv["annotations"];
            for (std::size_t ai = 0; ai < ja.size(); ++ai) {
                const std::string awhere = vwhere + ".annotations[" + std::to_string(ai) + "]";
                UserAnnotation ua;
                ua.user = ja[ai].value("user", "user" + std::to_string(ai));
                if (ja[ai].contains("scores")) {
                    ua.scores = field<std::vector<double>>(ja[ai], "scores", awhere);
                    if (ua.scores.size() != v.n_frames) {
                        throw ManifestError(awhere + ".scores: length " + std::to_string(ua.scores.size()) +
                                            " != n_frames " + std::to_string(v.n_frames));
                    }
                    for (double& s : ua.scores) {
                        if (scale) {
                            s = (s - scale->first) / (scale->second - scale->first);
                        }
                        if (!(s >= 0.0 && s <= 1.0)) {
                            throw ManifestError(awhere + ".scores: value outside [0,1] after normalization");
                        }
                    }
                } else if (ja[ai].contains("mask")) {
                    const auto raw = field<std::vector<int>>(ja[ai], "mask", awhere);
                    if (raw.size() != v.n_frames) {
                        throw ManifestError(awhere + ".mask: length " + std::to_string(raw.size()) +
                                            " != n_frames " + std::to_string(v.n_frames));
                    }
                    for (int b : raw) {
                        if (b != 0 && b != 1) {
                            throw ManifestError(awhere + ".mask: values must be 0 or 1");
                        }
                        ua.mask.push_back(static_cast<std::uint8_t>(b));
                    }
                } else {
                    throw ManifestError(awhere + ": needs 'scores' or 'mask'");
                }
                v.annotations.push_back(std::move(ua));
            }
        }
        if (jv.contains("segments")) {
            std::vector<Interval> ivs;
            for (const auto& s : jv["segments"]) {
                ivs.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
            }
            try {
                v.segments = SceneSegmentation(std::move(ivs), v.n_frames);
            } catch (const InvalidInput& e) {
                throw ManifestError(vwhere + ".segments: " + e.what());
            }
        }
        if (jv.contains("oracle_shots")) {
            v.oracle_shots = field<std::vector<std::size_t>>(jv, "oracle_shots", vwhere);
        }
        if (jv.contains("query")) {
            v.query = field<std::string>(jv, "query", vwhere);
        }
        auto path_field = [&](const char* key, std::optional<std::filesystem::path>& dst) {
            if (jv.contains(key)) {
                dst = resolve(base_dir, field<std::string>(jv, key, vwhere));
            }
        };
        path_field("frames", v.frames);
        path_field("embeddings", v.embeddings);
        path_field("captions", v.captions);
        path_field("mock_features", v.mock_features);
        if (jv.contains("frame_images")) {
            v.frame_images = resolve(base_dir, field<std::string>(jv, "frame_images", vwhere)).string();
        }
        for (const auto& other : m.videos) {
            if (other.id == v.id) {
                throw ManifestError(vwhere + ".id: duplicate video id");
            }
        }
        m.videos.push_back(std::move(v));
    }
    if (m.videos.empty()) {
        throw ManifestError("manifest.videos: empty");
    }
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("manifest '" + path.string() + "': " + e.what());
    } catch (const InvalidInput& e) {
        throw ManifestError(std::string("manifest: ") + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json doc;
    doc["dataset"] = m.dataset_tag;
    auto& videos = doc["videos"] = nlohmann::json::array();
    auto rel = [&m](const std::filesystem::path& p) {
        return m.base_dir.empty() ? p.string() : std::filesystem::relative(p, m.base_dir).string();
    };
    for (const auto& v : m.videos) {
        nlohmann::json jv{{"id", v.id}, {"fps", v.fps}, {"n_frames", v.n_frames}};
        auto& ann = jv["annotations"] = nlohmann::json::array();
        for (const auto& a : v.annotations) {
            nlohmann::json ja{{"user", a.user}};
            if (a.is_mask()) {
                ja["mask"] = a.mask;
            } else {
                ja["scores"] = a.scores;
            }
            ann.push_back(std::move(ja));
        }
        if (v.segments) {
            auto& segs = jv["segments"] = nlohmann::json::array();
            for (const auto& iv : v.segments->intervals()) {
                segs.push_back({iv.start, iv.end});
            }
        }
        if (v.oracle_shots) {
            jv["oracle_shots"] = *v.oracle_shots;
        }
        if (v.query) {
            jv["query"] = *v.query;
        }
        if (v.frames) {
            jv["frames"] = rel(*v.frames);
        }
        if (v.frame_images) {
            jv["frame_images"] = rel(*v.frame_images);
        }
        if (v.embeddings) {
            jv["embeddings"] = rel(*v.embeddings);
        }
        if (v.captions) {
            jv["captions"] = rel(*v.captions);
        }
        if (v.mock_features) {
            jv["mock_features"] = rel(*v.mock_features);
        }
        videos.push_back(std::move(jv));
    }
    return doc;
}

frames::NormalizationMode RunConfig::normalization_for(eval::Dataset d) const {
    if (normalization) {
        return *normalization;
    }
    if (d == eval::Dataset::TVSum) {
        return {frames::NormKind::Exponential, 1.0};
    }
    return {frames::NormKind::MinMax, 1.0};
}

nlohmann::json RunConfig::snapshot() const {
    nlohmann::json j;
    j["caption_backend"] = caption_backend;
    j["llm_backend"] = llm_backend;
    j["model"] = model;
    j["temperature"] = temperature;
    j["rubric"] = rubric_path ? rubric_path->filename().string() : std::string("builtin:tvsum");
    if (normalization) {
        j["normalization"] = {{"kind", normalization->kind == frames::NormKind::MinMax ? "minmax" : "exponential"},
                              {"alpha", normalization->exp_alpha}};
    } else {
        j["normalization"] = "per-dataset";
    }
    j["budget"] = budget;
    j["threshold_grid"] = {{"tau_min", grid.tau_min()}, {"tau_max", grid.tau_max()}, {"delta_tau", grid.delta_tau()}};
    j["refine"] = refine;
    j["min_scene_frames"] = min_scene_frames;
    if (min_scene_seconds) {
        j["min_scene_seconds"] = *min_scene_seconds;
    }
    j["short_threshold_seconds"] = short_threshold_seconds;
    if (sigma_override) {
        j["sigma"] = *sigma_override;
    }
    if (window_override) {
        j["window_seconds"] = *window_override;
    }
    j["frame_weighting"] = frame_weighting;
    j["seed"] = seed;
    j["batch_size"] = batch_size;
    j["n_splits"] = n_splits;
    j["pseudo_label_ratio"] = pseudo_label_ratio;
    j["use_pseudo_labels"] = use_pseudo_labels;
    j["use_context"] = use_context;
    j["retry_attempts"] = retry_attempts;
    return j;
}

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    RunConfig c;
    try {
        c.caption_backend = doc.value("caption_backend", c.caption_backend);
        c.llm_backend = doc.value("llm_backend", c.llm_backend);
        for (const auto& b : {c.caption_backend, c.llm_backend}) {
            if (b != "mock" && b != "http") {
                throw ConfigError("config: backend '" + b + "' is not 'mock' or 'http'");
            }
        }
        c.model = doc.value("model", c.model);
        c.temperature = doc.value("temperature", c.temperature);
        if (doc.contains("rubric")) {
            c.rubric_path = resolve(base_dir, doc["rubric"].get<std::string>());
        }
        if (doc.contains("normalization")) {
            const auto& n = doc["normalization"];
            const auto kind = n.value("kind", std::string("minmax"));
            if (kind != "minmax" && kind != "exponential") {
                throw ConfigError("config.normalization.kind: '" + kind + "' is not minmax or exponential");
            }
            c.normalization = frames::NormalizationMode{
                kind == "minmax" ? frames::NormKind::MinMax : frames::NormKind::Exponential, n.value("alpha", 1.0)};
            if (!(c.normalization->exp_alpha > 0.0)) {
                throw ConfigError("config.normalization.alpha: must be positive");
            }
        }
        c.budget = doc.value("budget", c.budget);
        if (!(c.budget > 0.0 && c.budget <= 1.0)) {
            throw ConfigError("config.budget: must be in (0,1]");
        }
        if (doc.contains("threshold_grid")) {
            const auto& g = doc["threshold_grid"];
            try {
                c.grid = scene::ThresholdGrid(g.value("tau_min", 0.05), g.value("tau_max", 0.60),
                                              g.value("delta_tau", 0.05));
            } catch (const InvalidInput& e) {
                throw ConfigError(std::string("config.threshold_grid: ") + e.what());
            }
        }
        c.refine = doc.value("refine", c.refine);
        c.min_scene_frames = doc.value("min_scene_frames", c.min_scene_frames);
        if (doc.contains("min_scene_seconds")) {
            c.min_scene_seconds = doc["min_scene_seconds"].get<double>();
        }
        c.short_threshold_seconds = doc.value("short_threshold_seconds", c.short_threshold_seconds);
        if (doc.contains("sigma")) {
            c.sigma_override = doc["sigma"].get<double>();
            if (!(*c.sigma_override >= 0.0 && *c.sigma_override <= 1.0)) {
                throw ConfigError("config.sigma: must be in [0,1]");
            }
        }
        if (doc.contains("window_seconds")) {
            c.window_override = doc["window_seconds"].get<double>();
            if (!(*c.window_override > 0.0)) {
                throw ConfigError("config.window_seconds: must be positive");
            }
        }
        c.frame_weighting = doc.value("frame_weighting", c.frame_weighting);
        c.seed = doc.value("seed", c.seed);
        c.concurrency = std::max<std::size_t>(1, doc.value("concurrency", c.concurrency));
        if (doc.contains("cache_dir")) {
            c.cache_dir = resolve(base_dir, doc["cache_dir"].get<std::string>());
        }
        c.batch_size = doc.value("batch_size", c.batch_size);
        if (c.batch_size == 0) {
            throw ConfigError("config.batch_size: must be at least 1");
        }
        c.n_splits = doc.value("n_splits", c.n_splits);
        c.pseudo_label_ratio = doc.value("pseudo_label_ratio", c.pseudo_label_ratio);
        if (!(c.pseudo_label_ratio > 0.0 && c.pseudo_label_ratio <= 1.0)) {
            throw ConfigError("config.pseudo_label_ratio: must be in (0,1]");
        }
        c.use_pseudo_labels = doc.value("use_pseudo_labels", c.use_pseudo_labels);
        c.use_context = doc.value("use_context", c.use_context);
        c.retry_attempts = doc.value("retry_attempts", c.retry_attempts);
        if (c.retry_attempts < 1) {
            throw ConfigError("config.retry_attempts: must be at least 1");
        }
        c.retry_base_delay_ms = doc.value("retry_base_delay_ms", c.retry_base_delay_ms);
        c.caption_endpoint = doc.value("caption_endpoint", c.caption_endpoint);
        c.llm_endpoint = doc.value("llm_endpoint", c.llm_endpoint);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.rubric_path && !std::filesystem::exists(*c.rubric_path)) {
        throw ConfigError("config.rubric: '" + c.rubric_path->string() + "' does not exist");
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc, path.parent_path());
}

void apply_environment(RunConfig& cfg) {
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') {
            return std::nullopt;
        }
        return std::string(v);
    };
    if (auto v = env("VSUM_LLM_ENDPOINT")) {
        cfg.llm_endpoint = *v;
    }
    if (auto v = env("VSUM_LLM_API_KEY")) {
        cfg.llm_api_key = *v;
    }
    if (auto v = env("VSUM_CAPTION_ENDPOINT")) {
        cfg.caption_endpoint = *v;
    }
    if (auto v = env("VSUM_CAPTION_API_KEY")) {
        cfg.caption_api_key = *v;
    }
    if (auto v = env("VSUM_CACHE_DIR")) {
        cfg.cache_dir = *v;
    }
}

nlohmann::json segmentation_to_json(const SceneSegmentation& seg) {
    nlohmann::json j;
    j["n_frames"] = seg.n_frames();
    auto& ivs = j["intervals"] = nlohmann::json::array();
    for (const auto& iv : seg.intervals()) {
        ivs.push_back({iv.start, iv.end});
    }
    return j;
}

SceneSegmentation segmentation_from_json(const nlohmann::json& j) {
    std::vector<Interval> ivs;
    for (const auto& iv : j.at("intervals")) {
        ivs.push_back({iv.at(0).get<std::size_t>(), iv.at(1).get<std::size_t>()});
    }
    return SceneSegmentation(std::move(ivs), j.at("n_frames").get<std::size_t>());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_file(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

}  // namespace vsum::io
