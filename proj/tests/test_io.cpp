#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "vsum/error.hpp"
#include "vsum/io.hpp"
#include "vsum/rubric.hpp"
#include "vsum/util.hpp"

using namespace vsum;
using namespace vsum::io;
namespace fs = std::filesystem;

namespace {

FrameEmbeddings random_embeddings(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<float> g;
    FrameEmbeddings e(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : e.row(i)) {
            x = g(rng);
        }
    }
    return e;
}

// header bytes for a VSEM1 file, written out by hand
std::string vsem_header(std::uint32_t n, std::uint32_t dim) {
    std::string h = "VSEM1";
    h += '\x01';
    h += '\x00';
    for (std::uint32_t v : {n, dim}) {
        for (int b = 0; b < 4; ++b) {
            h += static_cast<char>((v >> (8 * b)) & 0xff);
        }
    }
    return h;
}

nlohmann::json one_video(nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json v{{"id", "clip"}, {"fps", 10.0}, {"n_frames", 4},
                     {"annotations", {{{"user", "a"}, {"scores", {0.1, 0.2, 0.3, 0.4}}}}}};
    v.update(extra);
    return {{"dataset", "tvsum"}, {"videos", {v}}};
}

std::string manifest_error(const nlohmann::json& doc) {
    try {
        parse_manifest(doc);
    } catch (const ManifestError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("vsum_io_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("embedding codec round trip") {
    std::mt19937_64 rng(1);
    for (auto [n, d] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {10, 4}, {37, 512}}) {
        const auto e = random_embeddings(rng, n, d);
        const auto bytes = encode_embeddings(e);
        CHECK(bytes.size() == 15 + 4 * n * d);
        CHECK(bytes.substr(0, 15) == vsem_header(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(d)));
        CHECK(decode_embeddings(bytes) == e);
    }
}

TEST_CASE("embedding payload is little-endian float32") {
    FrameEmbeddings e(1, 2, {1.0f, -2.5f});
    const auto bytes = encode_embeddings(e);
    // 1.0f = 0x3f800000, -2.5f = 0xc0200000
    CHECK(bytes.substr(15) == std::string("\x00\x00\x80\x3f\x00\x00\x20\xc0", 8));
}

TEST_CASE("malformed embedding files") {
    std::mt19937_64 rng(2);
    const auto good = encode_embeddings(random_embeddings(rng, 10, 4));

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_embeddings(bad_magic), FormatError);

    auto bad_version = good;
    bad_version[5] = 9;
    CHECK_THROWS_AS(decode_embeddings(bad_version), FormatError);

    // header says 10 x 4 but only 9 rows follow
    const auto truncated = good.substr(0, good.size() - 16);
    try {
        decode_embeddings(truncated, "clip.emb");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("clip.emb") != std::string::npos);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    CHECK_THROWS_AS(decode_embeddings(good + "x"), FormatError);
    CHECK_THROWS_AS(decode_embeddings("VSE"), FormatError);
    CHECK_THROWS_AS(decode_embeddings(""), FormatError);
}

TEST_CASE("embedding files on disk") {
    const auto dir = scratch("emb");
    std::mt19937_64 rng(3);
    const auto e = random_embeddings(rng, 5, 3);
    save_embeddings(dir / "a.emb", e);
    CHECK(load_embeddings(dir / "a.emb") == e);
    CHECK_THROWS(load_embeddings(dir / "missing.emb"));
    fs::remove_all(dir);
}

TEST_CASE("frame codec") {
    std::vector<scene::RgbImage> frames;
    for (int i = 0; i < 3; ++i) {
        auto img = scene::RgbImage::filled(5, 4, static_cast<std::uint8_t>(i), 7, 200);
        img.pixels[0] = 99;
        frames.push_back(img);
    }
    const auto bytes = encode_frames(frames);
    CHECK(bytes.size() == 5 + 2 + 12 + 3 * 5 * 4 * 3);
    const auto back = decode_frames(bytes);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].width == 5);
        CHECK(back[i].height == 4);
        CHECK(back[i].pixels == frames[i].pixels);
    }
    CHECK_THROWS_AS(decode_frames(bytes.substr(0, bytes.size() - 1)), FormatError);
    auto mixed = frames;
    mixed.push_back(scene::RgbImage::filled(6, 4, 0, 0, 0));
    CHECK_THROWS(encode_frames(mixed));
}

TEST_CASE("manifest parsing") {
    const auto m = parse_manifest(one_video({{"annotation_scale", {0, 1}}}), "/data");
    CHECK(m.dataset == eval::Dataset::TVSum);
    REQUIRE(m.videos.size() == 1);
    CHECK(m.video("clip").n_frames == 4);
    CHECK(m.video("clip").duration_seconds() == 0.4);
    CHECK(m.video_ids() == std::vector<std::string>{"clip"});
    CHECK_THROWS(m.video("other"));

    const auto raw = parse_manifest(one_video({{"annotation_scale", {1, 5}},
                                               {"annotations", {{{"scores", {1, 5, 3, 2}}}}}}));
    CHECK(raw.videos[0].annotations[0].scores == std::vector<double>{0.0, 1.0, 0.5, 0.25});

    const auto paths = parse_manifest(one_video({{"embeddings", "emb/clip.emb"}, {"frames", "/abs/clip.frames"}}),
                                      "/data/set");
    CHECK(*paths.videos[0].embeddings == fs::path("/data/set/emb/clip.emb"));
    CHECK(*paths.videos[0].frames == fs::path("/abs/clip.frames"));

    const auto masked = parse_manifest(one_video({{"annotations", {{{"mask", {0, 1, 1, 0}}}}},
                                                  {"segments", {{0, 2}, {2, 4}}}}));
    CHECK(masked.videos[0].annotations[0].is_mask());
    CHECK(masked.videos[0].segments->size() == 2);

    const auto round = parse_manifest(manifest_to_json(m), "/data");
    CHECK(manifest_to_json(round) == manifest_to_json(m));
}

TEST_CASE("manifest errors name the video and field") {
    auto msg = manifest_error(one_video({{"annotations", {{{"scores", {0.1, 0.2, 0.3}}}}}}));
    CHECK(msg.find("video 'clip'") != std::string::npos);
    CHECK(msg.find("annotations[0].scores") != std::string::npos);
    CHECK(msg.find("3 != n_frames 4") != std::string::npos);

    msg = manifest_error(one_video({{"fps", 0}}));
    CHECK(msg.find("video 'clip'") != std::string::npos);
    CHECK(msg.find("fps") != std::string::npos);
    CHECK(manifest_error(one_video({{"fps", -3}})).find("fps") != std::string::npos);

    CHECK(manifest_error(one_video({{"annotations", {{{"scores", {0.1, 1.2, 0.3, 0.4}}}}}})).find("[0,1]") !=
          std::string::npos);
    CHECK(manifest_error(one_video({{"annotations", {{{"mask", {0, 2, 1, 0}}}}}})).find("0 or 1") !=
          std::string::npos);
    CHECK(manifest_error(one_video({{"segments", {{0, 2}, {3, 4}}}})).find("segments") != std::string::npos);
    CHECK(!manifest_error(one_video({{"n_frames", 0}})).empty());
    CHECK(!manifest_error({{"dataset", "tvsum"}, {"videos", nlohmann::json::array()}}).empty());
    CHECK(!manifest_error({{"dataset", "vimeo"}, {"videos", one_video()["videos"]}}).empty());

    auto dup = one_video();
    dup["videos"].push_back(dup["videos"][0]);
    CHECK(manifest_error(dup).find("clip") != std::string::npos);
}

TEST_CASE("config parsing and validation") {
    const auto dir = scratch("cfg");
    write_file(dir / "my.rubric", Rubric::tvsum().to_json().dump());
    const auto c = parse_config({{"rubric", "my.rubric"}, {"seed", 9}, {"budget", 0.2}, {"sigma", 0.5},
                                 {"normalization", {{"kind", "exponential"}, {"alpha", 2.0}}}},
                                dir);
    CHECK(*c.rubric_path == dir / "my.rubric");
    CHECK(c.seed == 9);
    CHECK(c.budget == 0.2);
    CHECK(*c.sigma_override == 0.5);
    CHECK(c.normalization->kind == frames::NormKind::Exponential);

    const RunConfig defaults;
    CHECK(defaults.normalization_for(eval::Dataset::TVSum).kind == frames::NormKind::Exponential);
    CHECK(defaults.normalization_for(eval::Dataset::SumMe).kind == frames::NormKind::MinMax);
    CHECK(c.normalization_for(eval::Dataset::SumMe).exp_alpha == 2.0);

    CHECK_THROWS_AS(parse_config({{"rubric", "absent.rubric"}}, dir), ConfigError);
    CHECK_THROWS_AS(parse_config({{"budget", 0.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"budget", 1.5}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"sigma", 2.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"llm_backend", "carrier-pigeon"}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"threshold_grid", {{"tau_min", 0.5}, {"tau_max", 0.1}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"batch_size", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"seed", "nine"}}), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "nope.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("environment overrides and secret-free snapshots") {
    RunConfig c = parse_config({{"llm_endpoint", "http://from-config"}});
    ::setenv("VSUM_LLM_ENDPOINT", "http://from-env", 1);
    ::setenv("VSUM_LLM_API_KEY", "sk-secret-value", 1);
    ::setenv("VSUM_CAPTION_API_KEY", "cap-secret-value", 1);
    ::setenv("VSUM_CACHE_DIR", "/tmp/vsum-cache", 1);
    apply_environment(c);
    ::unsetenv("VSUM_LLM_ENDPOINT");
    ::unsetenv("VSUM_LLM_API_KEY");
    ::unsetenv("VSUM_CAPTION_API_KEY");
    ::unsetenv("VSUM_CACHE_DIR");
    CHECK(c.llm_endpoint == "http://from-env");
    CHECK(c.llm_api_key == "sk-secret-value");
    CHECK(*c.cache_dir == fs::path("/tmp/vsum-cache"));
    const auto snap = c.snapshot().dump();
    CHECK(snap.find("sk-secret-value") == std::string::npos);
    CHECK(snap.find("cap-secret-value") == std::string::npos);
    CHECK(snap.find("api_key") == std::string::npos);
    CHECK(c.snapshot() == RunConfig(c).snapshot());
}

TEST_CASE("segmentation JSON") {
    const SceneSegmentation seg({{0, 3}, {3, 10}}, 10);
    const auto j = segmentation_to_json(seg);
    CHECK(j.dump() == R"({"intervals":[[0,3],[3,10]],"n_frames":10})");
    CHECK(segmentation_from_json(j) == seg);

    const auto dir = scratch("json");
    write_json(dir / "s.json", j);
    CHECK(read_file(dir / "s.json").back() == '\n');
    CHECK(read_json(dir / "s.json") == j);
    write_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(read_json(dir / "bad.json"), FormatError);
    fs::remove_all(dir);
}
