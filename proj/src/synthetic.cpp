#include "vsum/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vsum/error.hpp"
#include "vsum/rubric.hpp"
#include "vsum/scoring.hpp"

namespace vsum::synth {

namespace {

constexpr std::size_t kTilesX = 4;
constexpr std::size_t kTilesY = 3;
constexpr int kMaxJitter = 3;

struct Mosaic {
    std::array<std::array<std::uint8_t, 3>, kTilesX * kTilesY> tiles{};
};

Mosaic random_mosaic(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> colour(30, 225);
    Mosaic m;
    for (auto& t : m.tiles) {
        for (auto& c : t) {
            c = static_cast<std::uint8_t>(colour(rng));
        }
    }
    return m;
}

scene::RgbImage render(const Mosaic& m, std::size_t w, std::size_t h, int jitter) {
    scene::RgbImage img = scene::RgbImage::filled(w, h, 0, 0, 0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto& t = m.tiles[(y * kTilesY / h) * kTilesX + (x * kTilesX / w)];
            img.set(x, y, static_cast<std::uint8_t>(t[0] + jitter), static_cast<std::uint8_t>(t[1] + jitter),
                    static_cast<std::uint8_t>(t[2] + jitter));
        }
    }
    return img;
}

std::vector<double> unit_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = n(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) {
        x /= norm;
    }
    return v;
}

}  // namespace

std::vector<std::size_t> SyntheticVideo::true_boundaries() const {
    std::vector<std::size_t> out;
    std::size_t end = 0;
    for (std::size_t i = 0; i + 1 < spec.scene_lengths.size(); ++i) {
        end += spec.scene_lengths[i];
        out.push_back(end - 1);
    }
    return out;
}

SceneSegmentation SyntheticVideo::true_segmentation() const {
    const auto b = true_boundaries();
    return SceneSegmentation::from_boundaries(b, n_frames());
}

SceneSegmentation SyntheticVideo::shots() const {
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.shot_seconds * spec.fps)));
    std::vector<Interval> out;
    std::size_t start = 0;
    for (auto len : spec.scene_lengths) {
        for (std::size_t a = start; a < start + len; a += step) {
            out.push_back({a, std::min(a + step, start + len)});
        }
        start += len;
    }
    return SceneSegmentation(std::move(out), n_frames());
}

SyntheticVideo make_video(const VideoSpec& spec) {
    if (spec.scene_lengths.empty() || !(spec.fps > 0.0) || spec.dim == 0) {
        throw InvalidInput("synthetic video '" + spec.id + "': needs scenes, fps > 0 and dim > 0");
    }
    std::mt19937_64 rng(spec.seed);
    SyntheticVideo v;
    v.spec = spec;
    std::size_t n = 0;
    for (auto len : spec.scene_lengths) {
        if (len == 0) {
            throw InvalidInput("synthetic video '" + spec.id + "': empty scene");
        }
        n += len;
    }
    std::vector<float> emb;
    emb.reserve(n * spec.dim);
    std::uniform_int_distribution<int> jitter(-kMaxJitter, kMaxJitter);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    scene::PHash prev_hash;
    std::vector<double> prev_dir;
    for (std::size_t s = 0; s < spec.scene_lengths.size(); ++s) {
        Mosaic m = random_mosaic(rng);
        auto hash_of = [&](const Mosaic& mm) { return scene::phash(scene::preprocess_frame(render(mm, spec.width, spec.height, 0))); };
        scene::PHash h = hash_of(m);
        for (int tries = 0; s > 0 && scene::hamming_norm(h, prev_hash) < spec.min_cut_distance; ++tries) {
            if (tries > 100000) {
                throw InvalidInput("synthetic video '" + spec.id + "': could not separate consecutive scenes");
            }
            m = random_mosaic(rng);
            h = hash_of(m);
        }
        prev_hash = h;

        auto dir = unit_vector(rng, spec.dim);
        if (s > 0 && spec.scene_lengths[s] < scene::kDefaultMinSceneFrames) {
            // short scenes look like their predecessor so refinement folds them back
            for (std::size_t d = 0; d < spec.dim; ++d) {
                dir[d] = 0.85 * prev_dir[d] + 0.15 * dir[d];
            }
        }
        prev_dir = dir;
        const std::size_t modes = 1 + rng() % 3;
        std::vector<std::vector<double>> offsets;
        for (std::size_t k = 0; k < modes; ++k) {
            offsets.push_back(unit_vector(rng, spec.dim));
        }
        const double importance = unit(rng);
        const bool short_scene = s > 0 && spec.scene_lengths[s] < scene::kDefaultMinSceneFrames;
        v.scene_importance.push_back(short_scene ? v.scene_importance.back() : importance);

        const std::size_t len = spec.scene_lengths[s];
        for (std::size_t t = 0; t < len; ++t) {
            v.frames.push_back(render(m, spec.width, spec.height, jitter(rng)));
            const auto& off = offsets[t * modes / len];
            for (std::size_t d = 0; d < spec.dim; ++d) {
                emb.push_back(static_cast<float>(dir[d] + 0.3 * off[d] + 0.02 * noise(rng)));
            }
        }
    }
    v.embeddings = FrameEmbeddings(n, spec.dim, std::move(emb));

    for (std::size_t u = 0; u < spec.n_users; ++u) {
        std::vector<double> scores;
        scores.reserve(n);
        for (std::size_t s = 0; s < spec.scene_lengths.size(); ++s) {
            for (std::size_t t = 0; t < spec.scene_lengths[s]; ++t) {
                scores.push_back(std::clamp(v.scene_importance[s] + 0.1 * noise(rng), 0.0, 1.0));
            }
        }
        v.user_scores.push_back(std::move(scores));
    }
    return v;
}

io::DatasetManifest write_dataset(const std::filesystem::path& dir, const std::string& dataset_tag,
                                  const std::vector<VideoSpec>& specs) {
    std::filesystem::create_directories(dir);
    const Rubric rubric = Rubric::tvsum();
    nlohmann::json manifest{{"dataset", dataset_tag}, {"videos", nlohmann::json::array()}};
    for (const auto& spec : specs) {
        const auto v = make_video(spec);
        io::save_frames(dir / (spec.id + ".frames"), v.frames);
        io::save_embeddings(dir / (spec.id + ".emb"), v.embeddings);

        std::mt19937_64 rng(spec.seed ^ 0x5bd1e995ULL);
        std::normal_distribution<double> noise(0.0, 8.0);
        nlohmann::json fixtures = nlohmann::json::object();
        // fixtures follow the scenes left after short ones fold into their predecessor
        std::size_t scene_index = 0;
        for (std::size_t s = 0; s < v.scene_importance.size(); ++s) {
            if (s > 0 && spec.scene_lengths[s] < scene::kDefaultMinSceneFrames) {
                continue;
            }
            const double imp = v.scene_importance[s];
            scoring::MockSceneFeatures f;
            for (const auto& d : rubric.dimensions) {
                f.dimension_scores[d.key] = static_cast<int>(std::clamp(std::lround(imp * 100.0 + noise(rng)), 0L, 100L));
            }
            if (imp < 0.15) {
                f.penalties.push_back("static");
            }
            f.novelty = imp > 0.6 ? scoring::Novelty::New : imp < 0.3 ? scoring::Novelty::Duplicated
                                                                       : scoring::Novelty::Mixed;
            fixtures[std::to_string(scene_index++)] = f.to_json();
        }
        io::write_json(dir / (spec.id + ".mock.json"), {{"scenes", fixtures}});

        nlohmann::json annotations = nlohmann::json::array();
        for (std::size_t u = 0; u < v.user_scores.size(); ++u) {
            nlohmann::json a{{"user", "u" + std::to_string(u + 1)}};
            if (spec.mask_annotations) {
                auto sorted = v.user_scores[u];
                std::sort(sorted.begin(), sorted.end());
                const double cut = sorted[sorted.size() * 85 / 100];
                std::vector<int> mask;
                for (double x : v.user_scores[u]) {
                    mask.push_back(x > cut ? 1 : 0);
                }
                a["mask"] = mask;
            } else {
                a["scores"] = v.user_scores[u];
            }
            annotations.push_back(std::move(a));
        }
        nlohmann::json entry{{"id", spec.id},
                             {"fps", spec.fps},
                             {"n_frames", v.n_frames()},
                             {"frames", spec.id + ".frames"},
                             {"embeddings", spec.id + ".emb"},
                             {"mock_features", spec.id + ".mock.json"},
                             {"annotations", annotations}};
        if (spec.shot_seconds > 0.0) {
            auto& segs = entry["segments"] = nlohmann::json::array();
            const auto shots = v.shots();
            for (const auto& iv : shots.intervals()) {
                segs.push_back({iv.start, iv.end});
            }
        }
        manifest["videos"].push_back(std::move(entry));
    }
    io::write_json(dir / "manifest.json", manifest);
    return io::parse_manifest(manifest, dir);
}

std::vector<VideoSpec> demo_specs(std::uint64_t seed) {
    std::vector<VideoSpec> specs(3);
    specs[0].id = "demo_a";
    specs[0].scene_lengths = {180, 240, 160, 300, 200};
    specs[1].id = "demo_b";
    specs[1].scene_lengths = {220, 60, 260, 190, 170, 210};
    specs[2].id = "demo_c";
    specs[2].fps = 15.0;
    specs[2].scene_lengths = {300, 450, 90, 380, 260};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        specs[i].seed = seed * 1000003ULL + i + 1;
    }
    return specs;
}

}  // namespace vsum::synth
