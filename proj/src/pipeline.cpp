#include "vsum/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>

#include "vsum/caption.hpp"
#include "vsum/error.hpp"
#include "vsum/frame_scoring.hpp"
#include "vsum/kernels.hpp"
#include "vsum/pseudo_label.hpp"
#include "vsum/scene_division.hpp"
#include "vsum/scoring.hpp"
#include "vsum/summary_eval.hpp"
#include "vsum/util.hpp"

namespace vsum::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRecordFile = "record.json";
constexpr const char* kTimingsFile = "timings.json";
constexpr const char* kPseudoFile = "pseudolabel.json";
constexpr const char* kReasonsFile = "reasons.json";
constexpr const char* kRubricFile = "rubric.json";
constexpr const char* kEvalSummaryFile = "eval_summary.json";

std::string digest_of(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

template <typename F>
auto guarded(const std::string& stage, const std::string& artifact, F&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const StageMissing&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const CaptionError& e) {
        throw StageError(stage, artifact + ": " + e.what(), e.backend_failure());
    } catch (const ScoringError& e) {
        throw StageError(stage, artifact + ": " + e.what(), e.backend_failure());
    } catch (const BackendError& e) {
        throw StageError(stage, artifact + ": " + e.what(), true);
    } catch (const Error& e) {
        throw StageError(stage, artifact + ": " + e.what());
    } catch (const json::exception& e) {
        throw StageError(stage, artifact + ": " + e.what());
    }
}

json interval_list(const SceneSegmentation& seg) {
    json out = json::array();
    for (const auto& iv : seg.intervals()) {
        out.push_back({iv.start, iv.end});
    }
    return out;
}

std::vector<double> user_mean(const io::VideoEntry& v) {
    if (v.annotations.empty()) {
        return {};
    }
    std::vector<double> mean(v.n_frames, 0.0);
    for (const auto& a : v.annotations) {
        for (std::size_t t = 0; t < v.n_frames; ++t) {
            mean[t] += a.is_mask() ? static_cast<double>(a.mask[t]) : a.scores[t];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(v.annotations.size());
    }
    return mean;
}

json exemplars_to_json(const pseudo::ExemplarSet& ex) {
    auto list = [](const std::vector<pseudo::Exemplar>& items) {
        json out = json::array();
        for (const auto& e : items) {
            out.push_back({{"segment", e.segment_index}, {"score", e.score}, {"caption", e.caption}});
        }
        return out;
    };
    json j{{"k", ex.k}, {"high", list(ex.high)}, {"low", list(ex.low)}};
    j["warning"] = ex.warning ? json(*ex.warning) : json(nullptr);
    return j;
}

pseudo::ExemplarSet exemplars_from_json(const json& j) {
    pseudo::ExemplarSet ex;
    ex.k = j.at("k").get<std::size_t>();
    for (const auto& e : j.at("high")) {
        ex.high.push_back({e.at("segment").get<std::size_t>(), e.at("caption").get<std::string>(),
                           e.at("score").get<double>()});
    }
    for (const auto& e : j.at("low")) {
        ex.low.push_back({e.at("segment").get<std::size_t>(), e.at("caption").get<std::string>(),
                          e.at("score").get<double>()});
    }
    return ex;
}

json norm_to_json(const frames::NormalizationMode& m) {
    return {{"kind", m.kind == frames::NormKind::MinMax ? "minmax" : "exponential"}, {"alpha", m.exp_alpha}};
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Prompt -> validated reply with retries; cached replies are re-validated.
template <typename T>
T ask_llm(LlmClient& client, const std::string& prompt, const io::RunConfig& cfg, const RetryPolicy& retry,
          const DiskCache* cache, const std::function<T(const std::string&)>& parse) {
    const std::string key = "llm|" + client.backend_id() + "|" + cfg.model + "|" + prompt;
    if (cache != nullptr) {
        if (auto hit = cache->get(key)) {
            try {
                return parse(*hit);
            } catch (const Error&) {
            }
        }
    }
    std::string last_error;
    for (int attempt = 1; attempt <= cfg.retry_attempts; ++attempt) {
        std::string reply;
        try {
            reply = client.complete({prompt, cfg.model, cfg.temperature});
        } catch (const BackendError& e) {
            if (!e.transient() || attempt == cfg.retry_attempts) {
                throw BackendError("LLM backend failed after " + std::to_string(attempt) + " attempt(s): " + e.what(),
                                   e.transient());
            }
            retry.wait_before_retry(attempt);
            continue;
        }
        try {
            T value = parse(reply);
            if (cache != nullptr) {
                cache->put(key, reply);
            }
            return value;
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw StageError("llm", "no valid reply after " + std::to_string(cfg.retry_attempts) +
                                " attempts: " + last_error);
}

}  // namespace

std::string stage_file(const std::string& stage) {
    static const std::map<std::string, std::string> files = {
        {"segment", "segment.json"}, {"refine", "refine.json"},   {"caption", "captions.json"},
        {"score", "scores.json"},    {"frames", "frames.json"},   {"select", "summary.json"},
        {"eval", "eval.json"}};
    const auto it = files.find(stage);
    if (it == files.end()) {
        throw InvalidInput("unknown stage '" + stage + "'");
    }
    return it->second;
}

Runner::Runner(io::RunConfig config, io::DatasetManifest manifest, fs::path out_dir)
    : config_(std::move(config)), manifest_(std::move(manifest)), out_dir_(std::move(out_dir)) {
    if (config_.cache_dir) {
        cache_ = std::make_unique<DiskCache>(*config_.cache_dir);
    }
    fs::create_directories(out_dir_);
}

fs::path Runner::video_dir(const std::string& video_id) const { return out_dir_ / video_id; }

const io::VideoEntry& Runner::entry(const std::string& video_id) const { return manifest_.video(video_id); }

json Runner::read_stage(const std::string& video_id, const std::string& stage) const {
    const auto path = video_dir(video_id) / stage_file(stage);
    if (!fs::exists(path)) {
        throw StageMissing("video '" + video_id + "': stage '" + stage + "' has no output (" + path.string() + ")");
    }
    return io::read_json(path);
}

void Runner::write_stage(const std::string& video_id, const std::string& stage, const json& doc) {
    fs::create_directories(video_dir(video_id));
    io::write_json(video_dir(video_id) / stage_file(stage), doc);
}

void Runner::note_time(const std::string& video_id, const std::string& stage, double ms) {
    const auto path = video_dir(video_id) / kTimingsFile;
    json t = fs::exists(path) ? io::read_json(path) : json::object();
    t[stage] = {{"wall_ms", ms}};
    io::write_json(path, t);
}

void Runner::run_stage(const std::string& stage, const std::string& video_id) {
    const auto t0 = std::chrono::steady_clock::now();
    if (stage == "segment") {
        segment(video_id);
    } else if (stage == "refine") {
        refine(video_id);
    } else if (stage == "caption") {
        caption(video_id);
    } else if (stage == "score") {
        score(video_id);
    } else if (stage == "frames") {
        frames(video_id);
    } else if (stage == "select") {
        select(video_id);
    } else if (stage == "eval") {
        evaluate(video_id);
    } else {
        throw InvalidInput("unknown stage '" + stage + "'");
    }
    const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - t0;
    note_time(video_id, stage, ms.count());
}

Rubric Runner::base_rubric() const {
    if (config_.rubric_path) {
        return guarded("score", config_.rubric_path->string(), [&] { return load_rubric_file(*config_.rubric_path); });
    }
    return Rubric::tvsum();
}

Rubric Runner::scoring_rubric() const {
    if (config_.use_pseudo_labels) {
        const auto path = out_dir_ / kRubricFile;
        if (!fs::exists(path)) {
            throw StageMissing("stage 'mine-reasons' has no output (" + path.string() + ")");
        }
        return guarded("score", path.string(), [&] { return load_rubric(io::read_json(path)); });
    }
    return base_rubric();
}

std::unique_ptr<CaptionClient> Runner::caption_client(const io::VideoEntry& v) const {
    if (config_.caption_backend == "mock") {
        return std::make_unique<MockCaptionClient>(config_.seed);
    }
    if (config_.caption_endpoint.empty()) {
        throw ConfigError("caption backend 'http' needs caption_endpoint or VSUM_CAPTION_ENDPOINT");
    }
    if (!v.frame_images) {
        throw StageError("caption", "video '" + v.id + "': http captioning needs 'frame_images' in the manifest");
    }
    const std::string pattern = *v.frame_images;
    FrameBytesSource source = [pattern](std::size_t frame) {
        std::vector<char> buf(pattern.size() + 32);
        std::snprintf(buf.data(), buf.size(), pattern.c_str(), frame);
        return read_file(buf.data());
    };
    return std::make_unique<HttpCaptionClient>(HttpEndpoint{config_.caption_endpoint, config_.caption_api_key},
                                               std::move(source));
}

std::unique_ptr<LlmClient> Runner::llm_client(const io::VideoEntry& v) const {
    if (config_.llm_backend == "mock") {
        std::map<std::size_t, scoring::MockSceneFeatures> fixtures;
        if (v.mock_features) {
            guarded("score", v.mock_features->string(), [&] {
                const auto doc = io::read_json(*v.mock_features);
                for (const auto& [key, value] : doc.at("scenes").items()) {
                    fixtures.emplace(std::stoul(key), scoring::MockSceneFeatures::from_json(value));
                }
                return 0;
            });
        }
        return std::make_unique<scoring::MockLlmClient>(config_.seed, base_rubric(), std::move(fixtures));
    }
    if (config_.llm_endpoint.empty()) {
        throw ConfigError("llm backend 'http' needs llm_endpoint or VSUM_LLM_ENDPOINT");
    }
    return std::make_unique<HttpLlmClient>(HttpEndpoint{config_.llm_endpoint, config_.llm_api_key});
}

FrameEmbeddings Runner::embeddings_for(const io::VideoEntry& v, const char* stage) const {
    if (!v.embeddings) {
        throw StageError(stage, "video '" + v.id + "': manifest has no 'embeddings' path");
    }
    return guarded(stage, v.embeddings->string(), [&] {
        auto emb = io::load_embeddings(*v.embeddings);
        if (emb.n_frames() != v.n_frames) {
            throw FormatError("embedding rows " + std::to_string(emb.n_frames()) + " != n_frames " +
                              std::to_string(v.n_frames));
        }
        return emb;
    });
}

void Runner::segment(const std::string& video_id) {
    const auto& v = entry(video_id);
    if (!v.frames) {
        throw StageError("segment", "video '" + v.id + "': manifest has no 'frames' path");
    }
    const auto frames = guarded("segment", v.frames->string(), [&] {
        auto f = io::load_frames(*v.frames);
        if (f.size() != v.n_frames) {
            throw FormatError("frame count " + std::to_string(f.size()) + " != n_frames " +
                              std::to_string(v.n_frames));
        }
        return f;
    });
    json doc = guarded("segment", v.frames->string(), [&] {
        const auto hashes = kernels::parallel::hash_frames(frames);
        scene::SegmentTrace trace;
        const auto seg = scene::segment(hashes, config_.grid, &trace);
        json hex = json::array();
        for (const auto& h : hashes) {
            hex.push_back(h.hex());
        }
        return json{{"video_id", v.id},
                    {"grid",
                     {{"tau_min", config_.grid.tau_min()},
                      {"tau_max", config_.grid.tau_max()},
                      {"delta_tau", config_.grid.delta_tau()}}},
                    {"scene_counts", trace.scene_counts},
                    {"tau_star", trace.tau_star},
                    {"hashes", hex},
                    {"segmentation", io::segmentation_to_json(seg)}};
    });
    write_stage(video_id, "segment", doc);
}

void Runner::refine(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto initial = guarded("refine", "segment.json",
                                 [&] { return io::segmentation_from_json(read_stage(video_id, "segment").at("segmentation")); });
    const std::size_t min_len =
        config_.min_scene_seconds ? scene::min_len_from_seconds(*config_.min_scene_seconds, v.fps)
                                  : config_.min_scene_frames;
    json doc{{"video_id", v.id}, {"enabled", config_.refine}, {"min_len", min_len}};
    if (config_.refine) {
        const auto emb = embeddings_for(v, "refine");
        const auto refined = guarded("refine", v.embeddings->string(),
                                     [&] { return scene::refine_short_scenes(initial, emb, min_len); });
        doc["segmentation"] = io::segmentation_to_json(refined);
    } else {
        doc["segmentation"] = io::segmentation_to_json(initial);
    }
    write_stage(video_id, "refine", doc);
}

void Runner::caption(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto seg = guarded("caption", "refine.json",
                             [&] { return io::segmentation_from_json(read_stage(video_id, "refine").at("segmentation")); });
    json doc{{"video_id", v.id}};
    if (v.captions) {
        // captions supplied by the extractor must describe exactly these scenes
        guarded("caption", v.captions->string(), [&] {
            const auto given = io::read_json(*v.captions);
            const auto& scenes = given.at("scenes");
            if (scenes.size() != seg.size()) {
                throw FormatError("has " + std::to_string(scenes.size()) + " scenes, refined segmentation has " +
                                  std::to_string(seg.size()));
            }
            json out = json::array();
            for (std::size_t i = 0; i < seg.size(); ++i) {
                const auto& s = scenes[i];
                if (s.at("start").get<std::size_t>() != seg[i].start || s.at("end").get<std::size_t>() != seg[i].end) {
                    throw FormatError("scene " + std::to_string(i) + " bounds differ from the refined segmentation");
                }
                out.push_back({{"index", i}, {"start", seg[i].start}, {"end", seg[i].end},
                               {"text", s.at("text").get<std::string>()}});
            }
            doc["backend"] = "file";
            doc["scenes"] = out;
            doc["global"] = given.at("global").get<std::string>();
            return 0;
        });
    } else {
        auto client = caption_client(v);
        caption::CaptionOptions opt;
        opt.fps = v.fps;
        opt.batch_size = config_.batch_size;
        opt.retry.attempts = config_.retry_attempts;
        opt.retry.base_delay = std::chrono::milliseconds(config_.retry_base_delay_ms);
        opt.cache = cache_.get();
        opt.video_id = v.id;
        const auto captions = guarded("caption", "video '" + v.id + "'", [&] {
            return caption::describe_scenes(*client, seg, opt, config_.concurrency);
        });
        const auto global =
            guarded("caption", "video '" + v.id + "'", [&] { return caption::describe_video(*client, v.n_frames, opt); });
        json out = json::array();
        for (const auto& c : captions) {
            const auto iv = seg[c.scene_index];
            out.push_back({{"index", c.scene_index}, {"start", iv.start}, {"end", iv.end}, {"text", c.text}});
        }
        doc["backend"] = client->backend_id();
        doc["scenes"] = out;
        doc["global"] = global;
    }
    write_stage(video_id, "caption", doc);
}

void Runner::score(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto captions = read_stage(video_id, "caption");
    const Rubric rubric = scoring_rubric();
    auto client = llm_client(v);
    std::vector<std::string> texts;
    for (const auto& s : captions.at("scenes")) {
        texts.push_back(s.at("text").get<std::string>());
    }
    scoring::ScoringOptions opt;
    opt.model = config_.model;
    opt.temperature = config_.temperature;
    opt.attempts = config_.retry_attempts;
    opt.retry.attempts = config_.retry_attempts;
    opt.retry.base_delay = std::chrono::milliseconds(config_.retry_base_delay_ms);
    opt.cache = cache_.get();
    opt.max_in_flight = config_.concurrency;
    opt.preference = v.query;
    opt.use_context = config_.use_context;
    const auto scores = guarded("score", "video '" + v.id + "'", [&] {
        return scoring::score_scenes(*client, texts, captions.at("global").get<std::string>(), rubric, opt);
    });
    json list = json::array();
    for (const auto& s : scores) {
        list.push_back({{"index", s.scene_index}, {"score", s.value}, {"mode", scoring::to_string(s.mode)}});
    }
    write_stage(video_id, "score",
                {{"video_id", v.id},
                 {"backend", client->backend_id()},
                 {"model", config_.model},
                 {"rubric", rubric.name},
                 {"rubric_digest", hex64(fnv1a64(rubric.to_json().dump()))},
                 {"scenes", list}});
}

void Runner::frames(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto seg = guarded("frames", "refine.json",
                             [&] { return io::segmentation_from_json(read_stage(video_id, "refine").at("segmentation")); });
    const auto scores_doc = read_stage(video_id, "score");
    std::vector<double> raw;
    for (const auto& s : scores_doc.at("scenes")) {
        raw.push_back(s.at("score").get<double>());
    }
    if (raw.size() != seg.size()) {
        throw StageError("frames", "scores.json has " + std::to_string(raw.size()) + " scenes, refine.json has " +
                                       std::to_string(seg.size()));
    }
    const auto mode = config_.normalization_for(manifest_.dataset);
    const auto normalized = frames::normalize(raw, mode);
    const auto inherited = frames::inherit(normalized, seg);
    const auto smoothed = frames::cosine_smooth(inherited, seg);
    json doc{{"video_id", v.id},
             {"normalization", norm_to_json(mode)},
             {"normalized_scene_scores", normalized},
             {"inherited", inherited.values},
             {"smoothed", smoothed.values}};
    if (config_.frame_weighting) {
        auto sched = frames::schedule(v.duration_seconds(), config_.short_threshold_seconds);
        if (config_.sigma_override) {
            sched.sigma = *config_.sigma_override;
        }
        if (config_.window_override) {
            sched.window_seconds = *config_.window_override;
        }
        const auto emb = embeddings_for(v, "frames");
        frames::WeightOptions wopt;
        wopt.seed = fnv1a64(v.id) ^ config_.seed;
        const auto weights = guarded("frames", v.embeddings->string(),
                                     [&] { return frames::frame_weights(emb, seg, v.fps, sched, wopt); });
        const auto final_curve = frames::combine(smoothed, weights);
        doc["schedule"] = {{"sigma", sched.sigma},
                           {"window_seconds", sched.window_seconds},
                           {"short_threshold_seconds", sched.short_threshold_seconds}};
        doc["weights"] = weights;
        doc["final"] = final_curve.values;
    } else {
        doc["schedule"] = nullptr;
        doc["weights"] = nullptr;
        doc["final"] = smoothed.values;
    }
    write_stage(video_id, "frames", doc);
}

void Runner::select(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto final_scores = read_stage(video_id, "frames").at("final").get<std::vector<double>>();
    json doc{{"video_id", v.id}};
    if (manifest_.dataset == eval::Dataset::QFVS) {
        const auto shots = pseudo::uniform_shots(v.n_frames, v.fps);
        const auto shot_scores = eval::shot_scores_from_frames(final_scores, shots);
        const std::size_t budget = v.oracle_shots ? v.oracle_shots->size()
                                                  : eval::SelectionBudget::fraction_of(config_.budget).capacity(shots.size());
        const auto chosen = eval::greedy_shot_select(shot_scores, budget);
        doc["unit"] = "shots";
        doc["capacity"] = budget;
        doc["segments"] = interval_list(shots);
        doc["segment_scores"] = shot_scores;
        doc["chosen"] = chosen;
        std::vector<int> mask(shots.size(), 0);
        for (auto c : chosen) {
            mask[c] = 1;
        }
        doc["selected"] = mask;
    } else {
        const SceneSegmentation seg =
            v.segments ? *v.segments
                       : io::segmentation_from_json(read_stage(video_id, "refine").at("segmentation"));
        const auto budget = eval::SelectionBudget::fraction_of(config_.budget);
        const auto summary = guarded("select", "video '" + v.id + "'",
                                     [&] { return eval::select_keyshots(final_scores, seg, budget); });
        std::vector<std::size_t> chosen;
        for (std::size_t i = 0; i < seg.size(); ++i) {
            if (summary.selected[seg[i].start] != 0) {
                chosen.push_back(i);
            }
        }
        doc["unit"] = "frames";
        doc["capacity"] = budget.capacity(v.n_frames);
        doc["segments"] = interval_list(seg);
        doc["segment_source"] = v.segments ? "manifest" : "refined";
        doc["chosen"] = chosen;
        doc["selected"] = summary.selected;
    }
    write_stage(video_id, "select", doc);
}

void Runner::evaluate(const std::string& video_id) {
    const auto& v = entry(video_id);
    const auto summary_doc = read_stage(video_id, "select");
    eval::Summary generated{summary_doc.at("selected").get<std::vector<std::uint8_t>>()};
    json users = json::array();
    std::vector<double> f1s;
    auto add = [&](const std::string& user, const eval::Summary& reference) {
        const auto r = eval::precision_recall_f1(generated, reference);
        users.push_back({{"user", user}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
        f1s.push_back(r.f1);
    };
    guarded("eval", "video '" + v.id + "'", [&] {
        if (manifest_.dataset == eval::Dataset::QFVS) {
            if (v.oracle_shots) {
                const auto labels = pseudo::qfvs_shot_annotations(*v.oracle_shots, generated.selected.size());
                eval::Summary reference;
                for (int b : labels) {
                    reference.selected.push_back(static_cast<std::uint8_t>(b));
                }
                add("oracle", reference);
            }
            return 0;
        }
        std::vector<Interval> ivs;
        for (const auto& s : summary_doc.at("segments")) {
            ivs.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
        }
        const SceneSegmentation seg(std::move(ivs), v.n_frames);
        const auto budget = eval::SelectionBudget::fraction_of(config_.budget);
        for (const auto& a : v.annotations) {
            add(a.user, a.is_mask() ? eval::Summary{a.mask} : eval::gt_to_keyshots(a.scores, seg, budget));
        }
        return 0;
    });
    json doc{{"video_id", v.id}, {"dataset", manifest_.dataset_tag}, {"users", users}};
    const auto mean = user_mean(v);
    doc["user_mean"] = mean.empty() ? json(nullptr) : json(mean);
    doc["f1"] = f1s.empty() ? json(nullptr) : json(eval::aggregate_users(f1s, manifest_.dataset));
    write_stage(video_id, "eval", doc);
}

void Runner::pseudolabel() {
    std::vector<std::string> labelled;
    for (const auto& v : manifest_.videos) {
        const bool usable = manifest_.dataset == eval::Dataset::QFVS ? v.oracle_shots.has_value()
                                                                     : !v.annotations.empty();
        if (usable) {
            labelled.push_back(v.id);
        }
    }
    if (labelled.empty()) {
        throw StageError("pseudolabel", "manifest has no annotated videos");
    }
    const auto chosen = pseudo::sample_pseudo_videos(labelled, config_.pseudo_label_ratio, config_.seed);
    json videos = json::array();
    for (const auto& id : chosen) {
        const auto& v = entry(id);
        json item{{"video_id", id}};
        guarded("pseudolabel", "video '" + id + "'", [&] {
            std::vector<caption::SceneCaption> captions;
            std::vector<double> scores;
            if (manifest_.dataset == eval::Dataset::QFVS) {
                const auto shots = pseudo::uniform_shots(v.n_frames, v.fps);
                auto client = caption_client(v);
                caption::CaptionOptions opt;
                opt.fps = v.fps;
                opt.batch_size = config_.batch_size;
                opt.retry.attempts = config_.retry_attempts;
                opt.retry.base_delay = std::chrono::milliseconds(config_.retry_base_delay_ms);
                opt.cache = cache_.get();
                opt.video_id = v.id;
                captions = caption::describe_scenes(*client, shots, opt, config_.concurrency);
                for (int b : pseudo::qfvs_shot_annotations(*v.oracle_shots, shots.size())) {
                    scores.push_back(b);
                }
            } else {
                for (const auto& stage : {"segment", "refine", "caption"}) {
                    run_stage(stage, id);
                }
                const auto doc = read_stage(id, "caption");
                for (const auto& s : doc.at("scenes")) {
                    captions.push_back({s.at("index").get<std::size_t>(), s.at("text").get<std::string>()});
                }
                const auto seg = io::segmentation_from_json(read_stage(id, "refine").at("segmentation"));
                scores = pseudo::segment_scores(pseudo::FrameAnnotations(user_mean(v)), seg);
            }
            const auto ex = pseudo::select_exemplars(scores, captions);
            item["segment_scores"] = scores;
            item["exemplars"] = exemplars_to_json(ex);
            return 0;
        });
        videos.push_back(std::move(item));
    }
    io::write_json(out_dir_ / kPseudoFile, {{"dataset", manifest_.dataset_tag},
                                            {"ratio", config_.pseudo_label_ratio},
                                            {"seed", config_.seed},
                                            {"videos", videos}});
}

void Runner::mine_reasons() {
    const auto path = out_dir_ / kPseudoFile;
    if (!fs::exists(path)) {
        throw StageMissing("stage 'pseudolabel' has no output (" + path.string() + ")");
    }
    const auto doc = io::read_json(path);
    RetryPolicy retry;
    retry.attempts = config_.retry_attempts;
    retry.base_delay = std::chrono::milliseconds(config_.retry_base_delay_ms);
    std::vector<pseudo::ReasonTriple> reasons;
    json reason_docs = json::array();
    std::unique_ptr<LlmClient> client;
    for (const auto& item : doc.at("videos")) {
        const auto id = item.at("video_id").get<std::string>();
        client = llm_client(entry(id));
        const auto prompt = pseudo::build_reason_prompt(exemplars_from_json(item.at("exemplars")));
        const auto triple = guarded("mine-reasons", "video '" + id + "'", [&] {
            return ask_llm<pseudo::ReasonTriple>(*client, prompt, config_, retry, cache_.get(),
                                                 [](const std::string& r) { return pseudo::parse_reason_json(r); });
        });
        reasons.push_back(triple);
        reason_docs.push_back({{"video_id", id},
                               {"reason_positive", triple.reason_positive},
                               {"reason_negative", triple.reason_negative},
                               {"reason_difference", triple.reason_difference}});
    }
    io::write_json(out_dir_ / kReasonsFile, {{"reasons", reason_docs}});
    if (!client) {
        throw StageError("mine-reasons", path.string() + ": no pseudo-label videos");
    }
    const auto prompt = pseudo::build_rubric_prompt(reasons, manifest_.dataset_tag);
    std::string raw_reply;
    const auto rubric = guarded("mine-reasons", "rubric synthesis", [&] {
        return ask_llm<Rubric>(*client, prompt, config_, retry, cache_.get(), [&](const std::string& r) {
            auto parsed = parse_rubric_reply(r);
            parsed.validate();
            raw_reply = r;
            return parsed;
        });
    });
    write_file(out_dir_ / "rubric_prompt.txt", prompt);
    write_file(out_dir_ / "rubric_response.txt", raw_reply);
    io::write_json(out_dir_ / kRubricFile, rubric.to_json());
}

nlohmann::json Runner::eval_summary() {
    std::vector<std::string> excluded;
    const auto pseudo_path = out_dir_ / kPseudoFile;
    if (config_.use_pseudo_labels && fs::exists(pseudo_path)) {
        const auto doc = io::read_json(pseudo_path);
        for (const auto& item : doc.at("videos")) {
            excluded.push_back(item.at("video_id").get<std::string>());
        }
    }
    std::map<std::string, double> f1;
    for (const auto& v : manifest_.videos) {
        const auto path = video_dir(v.id) / stage_file("eval");
        if (!fs::exists(path)) {
            continue;
        }
        const auto doc = io::read_json(path);
        if (!doc.at("f1").is_null()) {
            f1[v.id] = doc.at("f1").get<double>();
        }
    }
    std::vector<std::string> pool;
    for (const auto& [id, value] : f1) {
        if (std::find(excluded.begin(), excluded.end(), id) == excluded.end()) {
            pool.push_back(id);
        }
    }
    json out{{"dataset", manifest_.dataset_tag}, {"seed", config_.seed}, {"excluded", excluded}};
    if (pool.empty()) {
        out["n_splits"] = 0;
        out["splits"] = json::array();
        out["f1"] = nullptr;
    } else {
        const std::size_t n_splits = std::min(std::max<std::size_t>(config_.n_splits, 1), pool.size());
        const auto spec = eval::make_splits(pool, n_splits, config_.seed);
        std::vector<std::vector<double>> per_split;
        json splits = json::array();
        for (const auto& ids : spec.test_ids) {
            std::vector<double> values;
            for (const auto& id : ids) {
                values.push_back(f1.at(id));
            }
            per_split.push_back(values);
            splits.push_back({{"test_ids", ids}, {"f1", values}});
        }
        out["n_splits"] = n_splits;
        out["n_splits_requested"] = config_.n_splits;
        out["splits"] = splits;
        out["f1"] = eval::split_average(per_split, spec);
    }
    io::write_json(out_dir_ / kEvalSummaryFile, out);
    return out;
}

RunRecord Runner::run_video(const std::string& video_id) {
    entry(video_id);
    fs::remove(video_dir(video_id) / kTimingsFile);
    for (const auto& stage : kVideoStages) {
        run_stage(stage, video_id);
    }
    return write_record(video_id);
}

nlohmann::json Runner::run_all(const std::vector<std::string>& video_ids) {
    if (config_.use_pseudo_labels) {
        pseudolabel();
        mine_reasons();
    }
    bounded_for(video_ids.size(), config_.concurrency, [&](std::size_t i) { run_video(video_ids[i]); });
    return eval_summary();
}

std::string run_id(const json& config_snapshot, const json& video_entry, std::uint64_t seed) {
    const std::string basis = config_snapshot.dump() + "\n" + video_entry.dump() + "\n" + std::to_string(seed);
    return hex64(fnv1a64(basis));
}

RunRecord Runner::write_record(const std::string& video_id) {
    const auto& v = entry(video_id);
    io::DatasetManifest single = manifest_;
    single.videos = {v};
    const json entry_doc = io::manifest_to_json(single).at("videos").at(0);
    const json snapshot = config_.snapshot();
    RunRecord rec{run_id(snapshot, entry_doc, config_.seed), video_id, {}};

    json stages = json::object();
    for (const auto& stage : kVideoStages) {
        const auto path = video_dir(video_id) / stage_file(stage);
        if (!fs::exists(path)) {
            throw StageMissing("video '" + video_id + "': stage '" + stage + "' has no output (" + path.string() + ")");
        }
        stages[stage] = {{"file", stage_file(stage)}, {"digest", digest_of(path)}};
    }
    const auto seg_doc = read_stage(video_id, "segment");
    const auto captions = read_stage(video_id, "caption");
    const auto scores = read_stage(video_id, "score");
    const auto frames_doc = read_stage(video_id, "frames");
    const auto summary = read_stage(video_id, "select");
    const auto eval_doc = read_stage(video_id, "eval");
    json scene_scores = json::array();
    for (const auto& s : scores.at("scenes")) {
        scene_scores.push_back(s.at("score"));
    }
    std::size_t selected = 0;
    for (const auto& b : summary.at("selected")) {
        selected += b.get<int>();
    }
    rec.doc = {{"run_id", rec.run_id},
               {"video_id", video_id},
               {"dataset", manifest_.dataset_tag},
               {"seed", config_.seed},
               {"n_frames", v.n_frames},
               {"fps", v.fps},
               {"config", snapshot},
               {"stages", stages},
               {"outputs",
                {{"tau_star", seg_doc.at("tau_star")},
                 {"initial_segmentation", seg_doc.at("segmentation")},
                 {"refined_segmentation", read_stage(video_id, "refine").at("segmentation")},
                 {"captions", {{"file", stage_file("caption")}, {"n_scenes", captions.at("scenes").size()}}},
                 {"rubric", scores.at("rubric")},
                 {"scene_scores", scene_scores},
                 {"frame_curve", frames_doc.at("final")},
                 {"summary",
                  {{"unit", summary.at("unit")},
                   {"capacity", summary.at("capacity")},
                   {"chosen", summary.at("chosen")},
                   {"selected", selected}}},
                 {"eval", {{"f1", eval_doc.at("f1")}, {"users", eval_doc.at("users")}}}}},
               {"timings_file", kTimingsFile}};
    io::write_json(video_dir(video_id) / kRecordFile, rec.doc);
    return rec;
}

RunRecord load_record(const fs::path& video_dir) {
    const auto path = video_dir / kRecordFile;
    if (!fs::exists(path)) {
        throw StageMissing("no run record at " + path.string());
    }
    RunRecord rec;
    rec.doc = io::read_json(path);
    rec.run_id = rec.doc.at("run_id").get<std::string>();
    rec.video_id = rec.doc.at("video_id").get<std::string>();
    return rec;
}

std::vector<std::string> verify_record(const fs::path& video_dir) {
    const auto rec = load_record(video_dir);
    std::vector<std::string> problems;
    const auto n_frames = rec.doc.at("n_frames").get<std::size_t>();
    for (const auto& stage : kVideoStages) {
        if (!rec.doc.at("stages").contains(stage)) {
            problems.push_back("stage '" + stage + "' not recorded");
            continue;
        }
        const auto& s = rec.doc.at("stages").at(stage);
        const auto path = video_dir / s.at("file").get<std::string>();
        if (!fs::exists(path)) {
            problems.push_back("stage '" + stage + "': missing " + path.string());
        } else if (digest_of(path) != s.at("digest").get<std::string>()) {
            problems.push_back("stage '" + stage + "': " + path.string() + " changed since the record was written");
        }
    }
    if (!problems.empty()) {
        return problems;
    }
    try {
        const auto& out = rec.doc.at("outputs");
        const auto initial = io::segmentation_from_json(out.at("initial_segmentation"));
        const auto refined = io::segmentation_from_json(out.at("refined_segmentation"));
        if (initial.n_frames() != n_frames || refined.n_frames() != n_frames) {
            problems.push_back("segmentation does not cover n_frames");
        }
        if (refined.size() > initial.size()) {
            problems.push_back("refinement increased the scene count");
        }
        if (out.at("scene_scores").size() != refined.size()) {
            problems.push_back("scene score count differs from the refined scene count");
        }
        for (const auto& s : out.at("scene_scores")) {
            if (s.get<int>() < 0 || s.get<int>() > 100) {
                problems.push_back("scene score outside [0,100]");
            }
        }
        const auto curve = out.at("frame_curve").get<std::vector<double>>();
        if (curve.size() != n_frames) {
            problems.push_back("frame curve length differs from n_frames");
        }
        for (double x : curve) {
            if (!(x >= 0.0 && x <= 1.0)) {
                problems.push_back("frame score outside [0,1]");
                break;
            }
        }
        const auto& summary = out.at("summary");
        const auto chosen = summary.at("chosen").get<std::vector<std::size_t>>();
        if (summary.at("unit") == "frames") {
            std::size_t used = 0;
            const auto sel = io::read_json(video_dir / stage_file("select"));
            const auto segments = sel.at("segments");
            for (auto c : chosen) {
                used += segments.at(c).at(1).get<std::size_t>() - segments.at(c).at(0).get<std::size_t>();
            }
            if (used > summary.at("capacity").get<std::size_t>()) {
                problems.push_back("summary exceeds its frame budget");
            }
        } else if (chosen.size() > summary.at("capacity").get<std::size_t>()) {
            problems.push_back("summary exceeds its shot budget");
        }
        const auto& f1 = out.at("eval").at("f1");
        if (!f1.is_null() && !(f1.get<double>() >= 0.0 && f1.get<double>() <= 1.0)) {
            problems.push_back("F1 outside [0,1]");
        }
    } catch (const std::exception& e) {
        problems.push_back(std::string("record does not parse: ") + e.what());
    }
    return problems;
}

std::vector<fs::path> emit_plot_data(const fs::path& video_dir, const fs::path& out_dir) {
    const auto rec = load_record(video_dir);
    auto need = [&](const std::string& stage) {
        const auto path = video_dir / stage_file(stage);
        if (!fs::exists(path)) {
            throw StageMissing("plot data needs stage '" + stage + "' (" + path.string() + " missing)");
        }
        return io::read_json(path);
    };
    const auto seg_doc = need("segment");
    const auto refine_doc = need("refine");
    const auto frames_doc = need("frames");
    const auto n_frames = rec.doc.at("n_frames").get<std::size_t>();

    const auto eval_doc = need("eval");
    const bool have_mean = !eval_doc.at("user_mean").is_null();
    const auto mean = have_mean ? eval_doc.at("user_mean").get<std::vector<double>>() : std::vector<double>{};
    fs::create_directories(out_dir);
    std::vector<fs::path> written;

    auto boundaries = [&](const std::string& name, const json& seg) {
        std::string csv = "scene_index,start,end\n";
        std::size_t i = 0;
        for (const auto& iv : seg.at("intervals")) {
            csv += std::to_string(i++) + "," + std::to_string(iv.at(0).get<std::size_t>()) + "," +
                   std::to_string(iv.at(1).get<std::size_t>()) + "\n";
        }
        write_file(out_dir / name, csv);
        written.push_back(out_dir / name);
    };
    auto curve = [&](const std::string& name, const json& values) {
        const auto v = values.get<std::vector<double>>();
        if (v.size() != n_frames) {
            throw StageMissing("plot data: '" + name + "' curve has " + std::to_string(v.size()) + " values, expected " +
                               std::to_string(n_frames));
        }
        std::string csv = "frame_index,user_mean_annotation,model_score\n";
        for (std::size_t t = 0; t < n_frames; ++t) {
            csv += std::to_string(t) + "," + (have_mean ? csv_number(mean[t]) : std::string()) + "," +
                   csv_number(v[t]) + "\n";
        }
        write_file(out_dir / name, csv);
        written.push_back(out_dir / name);
    };
    boundaries(kPlotFiles[0], seg_doc.at("segmentation"));
    boundaries(kPlotFiles[1], refine_doc.at("segmentation"));
    curve(kPlotFiles[2], frames_doc.at("inherited"));
    curve(kPlotFiles[3], frames_doc.at("smoothed"));
    curve(kPlotFiles[4], frames_doc.at("final"));
    return written;
}

}  // namespace vsum::pipeline
