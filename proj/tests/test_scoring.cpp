#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "vsum/error.hpp"
#include "vsum/scoring.hpp"

using namespace vsum;
using namespace vsum::scoring;

namespace {

MockSceneFeatures flat(int v, std::vector<std::string> penalties = {}, Novelty nov = Novelty::Mixed,
                       int pref = 0) {
    MockSceneFeatures f;
    for (const char* k : {"R", "A", "D", "U", "N"}) {
        f.dimension_scores[k] = v;
    }
    f.penalties = std::move(penalties);
    f.novelty = nov;
    f.preference_match = pref;
    return f;
}

ScoringRequest boundary_request(const Rubric& r) {
    ScoringRequest req;
    req.scene_index = 0;
    req.n_scenes = 3;
    req.target_caption = "A man sands a table leg.";
    req.global_caption = "Someone restores an old table.";
    req.rubric = &r;
    return req;
}

ScoringRequest context_request(const Rubric& r) {
    auto req = boundary_request(r);
    req.scene_index = 1;
    req.mode = Mode::Contextual;
    req.prev_caption = "He removes the old varnish.";
    req.next_caption = "He applies a fresh coat of stain.";
    return req;
}

// Replies from a fixed script, then repeats the last line.
class ScriptedClient : public LlmClient {
public:
    explicit ScriptedClient(std::vector<std::string> lines) : lines_(std::move(lines)) {}
    std::string complete(const LlmRequest&) override {
        const auto i = std::min<std::size_t>(calls++, lines_.size() - 1);
        if (lines_[i] == "!transient") {
            throw BackendError("busy", true);
        }
        if (lines_[i] == "!fatal") {
            throw BackendError("refused", false);
        }
        return lines_[i];
    }
    std::string backend_id() const override { return "scripted"; }

    std::atomic<int> calls{0};

private:
    std::vector<std::string> lines_;
};

ScoringOptions quiet() {
    ScoringOptions opt;
    opt.retry.sleep = [](std::chrono::milliseconds) {};
    return opt;
}

}  // namespace

TEST_CASE("boundary prompt") {
    const auto r = Rubric::tvsum();
    auto req = boundary_request(r);
    const auto p = build_boundary_prompt(req);
    CHECK(p.find("ignore previous/next") != std::string::npos);
    CHECK(p.find(req.target_caption) != std::string::npos);
    CHECK(p.find(req.global_caption) != std::string::npos);
    CHECK(p.find("EXACTLY ONE integer in 0--100") != std::string::npos);
    CHECK(p.find("Task/Thematic Relevance") != std::string::npos);
    CHECK(p.find("preference") == std::string::npos);
    CHECK(p == build_boundary_prompt(req));

    req.preference = "focus on the dog";
    const auto with_pref = build_boundary_prompt(req);
    CHECK(with_pref.find("focus on the dog") != std::string::npos);
    CHECK(with_pref.find("+/-5") != std::string::npos);

    CHECK_THROWS_AS(build_boundary_prompt(context_request(r)), InvalidInput);
    req.rubric = nullptr;
    CHECK_THROWS_AS(build_boundary_prompt(req), InvalidInput);
}

TEST_CASE("context prompt") {
    const auto r = Rubric::tvsum();
    const auto req = context_request(r);
    const auto p = build_context_prompt(req);
    CHECK(p.find("Previous scene (context only):\n" + *req.prev_caption) != std::string::npos);
    CHECK(p.find("Next scene (context only):\n" + *req.next_caption) != std::string::npos);
    CHECK(p.find("Target scene description:\n" + req.target_caption) != std::string::npos);
    CHECK(p.find("+5 if the Target clearly adds NEW") != std::string::npos);
    CHECK(p.find("-5 if largely DUPLICATED") != std::string::npos);
    CHECK(p.find("SCORE ONLY THE TARGET") != std::string::npos);
    CHECK(p.find("do NOT reveal these notes") != std::string::npos);
    CHECK(p == build_context_prompt(req));
    // neighbours only appear once, under their context label
    CHECK(p.find(*req.prev_caption) == p.rfind(*req.prev_caption));
    CHECK(p.find(*req.next_caption) == p.rfind(*req.next_caption));
    CHECK_THROWS_AS(build_context_prompt(boundary_request(r)), InvalidInput);
}

TEST_CASE("score parsing") {
    CHECK(parse_score("73") == 73);
    CHECK(parse_score("  100\n") == 100);
    CHECK(parse_score("0") == 0);
    CHECK(parse_score("Score: 73") == 73);
    CHECK(parse_score("I'd give it 41.") == 41);
    CHECK_THROWS_AS(parse_score("73 or 74"), MalformedScore);
    CHECK_THROWS_AS(parse_score("none"), MalformedScore);
    CHECK_THROWS_AS(parse_score(""), MalformedScore);
    CHECK_THROWS_AS(parse_score("101"), MalformedScore);
}

TEST_CASE("score parsing agrees with a token scan") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> words = {"score", "is", ":", "the", "final", "value", ".", "ok"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        std::vector<long> ints;
        const int n_tokens = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < n_tokens; ++k) {
            if (rng() % 3 == 0) {
                const long v = static_cast<long>(rng() % 130);
                ints.push_back(v);
                text += std::to_string(v);
            } else {
                text += words[rng() % words.size()];
            }
            text += " ";
        }
        if (ints.size() == 1 && ints[0] <= 100) {
            CHECK(parse_score(text) == ints[0]);
        } else {
            CHECK_THROWS_AS(parse_score(text), MalformedScore);
        }
    }
}

TEST_CASE("mock rubric score examples") {
    const auto r = Rubric::tvsum();
    CHECK(mock_rubric_score(flat(100), r, false) == 100);
    CHECK(mock_rubric_score(flat(50), r, false) == 50);
    CHECK(mock_rubric_score(flat(50, {"title/logo/blank"}, Novelty::Duplicated), r, true) == 30);
    CHECK(mock_rubric_score(flat(50, {"title/logo/blank"}, Novelty::Duplicated), r, false) == 35);
    CHECK(mock_rubric_score(flat(0, {"off-topic"}), r, false) == 0);
    CHECK(mock_rubric_score(flat(100, {}, Novelty::New, 5), r, true) == 100);
    CHECK_THROWS_AS(mock_rubric_score(flat(50, {"unknown"}), r, false), InvalidInput);
    CHECK_THROWS_AS(mock_rubric_score(flat(101), r, false), InvalidInput);
}

TEST_CASE("mock rubric score matches integer arithmetic") {
    const auto r = Rubric::tvsum();
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 3000; ++trial) {
        MockSceneFeatures f;
        for (const char* k : {"R", "A", "D", "U", "N"}) {
            f.dimension_scores[k] = static_cast<int>(rng() % 101);
        }
        int pen = 0;
        for (const auto& p : r.penalties) {
            if (rng() % 3 == 0) {
                f.penalties.push_back(p.name);
                pen += p.value;
            }
        }
        f.preference_match = static_cast<int>(rng() % 11) - 5;
        f.novelty = static_cast<Novelty>(rng() % 3);
        const bool ctx = rng() % 2 == 0;
        const int c = !ctx ? 0 : f.novelty == Novelty::New ? 5 : f.novelty == Novelty::Duplicated ? -5 : 0;
        CHECK(mock_rubric_score(f, r, ctx) ==
              oracle::rubric_score({f.dimension_scores["R"], f.dimension_scores["A"], f.dimension_scores["D"],
                                    f.dimension_scores["U"], f.dimension_scores["N"]},
                                   pen + f.preference_match + c));
    }
}

TEST_CASE("mock rubric score is monotone") {
    const auto r = Rubric::tvsum();
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
        auto f = flat(0);
        for (auto& [k, v] : f.dimension_scores) {
            v = static_cast<int>(rng() % 101);
        }
        f.preference_match = static_cast<int>(rng() % 11) - 5;
        const int base = mock_rubric_score(f, r, false);
        CHECK(base >= 0);
        CHECK(base <= 100);

        auto up = f;
        auto& dim = up.dimension_scores[std::string(1, "RADUN"[rng() % 5])];
        dim = std::min(100, dim + static_cast<int>(rng() % 30));
        CHECK(mock_rubric_score(up, r, false) >= base);

        auto pref = f;
        pref.preference_match = std::min(5, pref.preference_match + 1);
        CHECK(mock_rubric_score(pref, r, false) >= base);

        auto pen = f;
        pen.penalties.push_back(r.penalties[rng() % r.penalties.size()].name);
        CHECK(mock_rubric_score(pen, r, false) <= base);
    }
}

TEST_CASE("mock features JSON round trip") {
    const auto f = flat(40, {"static"}, Novelty::New, -3);
    const auto g = MockSceneFeatures::from_json(f.to_json());
    CHECK(g.to_json() == f.to_json());
    CHECK_THROWS_AS(MockSceneFeatures::from_json({{"dimensions", {{"R", 5}}}, {"novelty", "odd"}}), InvalidInput);
    CHECK_THROWS_AS(MockSceneFeatures::from_json(nlohmann::json::object()), InvalidInput);
}

TEST_CASE("mode assignment") {
    const auto r = Rubric::tvsum();
    MockLlmClient client(1, r);
    auto modes = [&](std::size_t n, bool use_context = true) {
        std::vector<std::string> caps;
        for (std::size_t i = 0; i < n; ++i) {
            caps.push_back("scene " + std::to_string(i));
        }
        auto opt = quiet();
        opt.use_context = use_context;
        std::vector<Mode> out;
        for (const auto& s : score_scenes(client, caps, "global", r, opt)) {
            out.push_back(s.mode);
        }
        return out;
    };
    using M = Mode;
    CHECK(modes(1) == std::vector<M>{M::Boundary});
    CHECK(modes(2) == std::vector<M>{M::Boundary, M::Boundary});
    CHECK(modes(5) == std::vector<M>{M::Boundary, M::Contextual, M::Contextual, M::Contextual, M::Boundary});
    CHECK(modes(5, false) == std::vector<M>(5, M::Boundary));
    for (std::size_t n = 3; n < 20; ++n) {
        const auto m = modes(n);
        CHECK(std::count(m.begin(), m.end(), M::Boundary) == 2);
        CHECK(m.front() == M::Boundary);
        CHECK(m.back() == M::Boundary);
    }
}

TEST_CASE("mock client uses fixtures and context") {
    const auto r = Rubric::tvsum();
    std::map<std::size_t, MockSceneFeatures> fx{{0, flat(50)},
                                                {1, flat(50, {"title/logo/blank"}, Novelty::Duplicated)},
                                                {2, flat(80, {}, Novelty::New)}};
    MockLlmClient client(3, r, fx);
    const auto s = score_scenes(client, {"a", "b", "c"}, "g", r, quiet());
    REQUIRE(s.size() == 3);
    CHECK(s[0].value == 50);
    CHECK(s[1].value == 30);
    CHECK(s[2].value == 80);  // boundary scene: novelty ignored
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s[i].scene_index == i);
        CHECK(s[i].attempt_count == 1);
    }

    MockLlmClient again(3, r, fx);
    const auto s2 = score_scenes(again, {"a", "b", "c"}, "g", r, quiet());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s2[i].value == s[i].value);
    }
}

TEST_CASE("preference only counts when a preference is given") {
    const auto r = Rubric::tvsum();
    MockLlmClient client(1, r, {{0, flat(50, {}, Novelty::Mixed, 4)}});
    CHECK(score_scenes(client, {"x"}, "g", r, quiet())[0].value == 50);
    auto opt = quiet();
    opt.preference = "dogs";
    CHECK(score_scenes(client, {"x"}, "g", r, opt)[0].value == 54);
}

TEST_CASE("malformed replies are retried, then fail with the scene index") {
    const auto r = Rubric::tvsum();
    ScriptedClient ok({"I think 80 or 90", "80"});
    const auto s = score_scenes(ok, {"x"}, "g", r, quiet());
    CHECK(s[0].value == 80);
    CHECK(s[0].attempt_count == 2);

    ScriptedClient bad({"no idea"});
    try {
        score_scenes(bad, {"x", "y"}, "g", r, [] {
            auto o = quiet();
            o.max_in_flight = 1;
            return o;
        }());
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        CHECK(e.scene_index() == 0);
        CHECK(!e.backend_failure());
    }
    CHECK(bad.calls.load() == 3);

    ScriptedClient flaky({"!transient", "!transient", "61"});
    std::vector<long> delays;
    auto opt = quiet();
    opt.retry.sleep = [&](std::chrono::milliseconds d) { delays.push_back(static_cast<long>(d.count())); };
    CHECK(score_scenes(flaky, {"x"}, "g", r, opt)[0].value == 61);
    CHECK(delays == std::vector<long>{1000, 2000});

    ScriptedClient fatal({"!fatal"});
    try {
        score_scenes(fatal, {"x"}, "g", r, quiet());
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        CHECK(e.backend_failure());
    }
    CHECK(fatal.calls.load() == 1);
    CHECK_THROWS_AS(score_scenes(ok, {}, "g", r, quiet()), InvalidInput);
}

TEST_CASE("scores are cached by prompt and model") {
    const auto dir = std::filesystem::temp_directory_path() / "vsum_score_cache_test";
    std::filesystem::remove_all(dir);
    DiskCache cache(dir);
    const auto r = Rubric::tvsum();
    auto opt = quiet();
    opt.cache = &cache;
    ScriptedClient first({"42"});
    CHECK(score_scenes(first, {"x", "y", "z"}, "g", r, opt)[1].value == 42);
    CHECK(first.calls.load() == 3);
    ScriptedClient second({"7"});
    const auto again = score_scenes(second, {"x", "y", "z"}, "g", r, opt);
    CHECK(second.calls.load() == 0);
    CHECK(again[2].value == 42);
    opt.model = "other";
    CHECK(score_scenes(second, {"x", "y", "z"}, "g", r, opt)[0].value == 7);
    std::filesystem::remove_all(dir);
}

TEST_CASE("mock reason and rubric replies parse") {
    const auto r = Rubric::tvsum();
    MockLlmClient client(4, r);
    const auto reply = client.complete({"... return STRICT JSON with the keys ...", "mock", 0.0});
    CHECK(nlohmann::json::parse(reply).contains("reason_difference"));
    const auto rub = client.complete({"Consolidate these reasons into a scoring rubric", "mock", 0.0});
    CHECK(rub.rfind("Here is the rubric:", 0) == 0);
    CHECK_THROWS_AS(client.complete({"hello", "mock", 0.0}), BackendError);
}
