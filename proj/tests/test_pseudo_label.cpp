#include <doctest.h>

#include <random>
#include <set>

#include "vsum/error.hpp"
#include "vsum/pseudo_label.hpp"
#include "vsum/rubric.hpp"

using namespace vsum;
using namespace vsum::pseudo;

namespace {

SceneSegmentation random_segmentation(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::size_t> cuts;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        if (rng() % 7 == 0) {
            cuts.push_back(t);
        }
    }
    return SceneSegmentation::from_boundaries(cuts, n);
}

std::vector<caption::SceneCaption> captions_for(std::size_t n) {
    std::vector<caption::SceneCaption> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({i, "caption " + std::to_string(i)});
    }
    return out;
}

std::set<std::size_t> indices(const std::vector<Exemplar>& ex) {
    std::set<std::size_t> out;
    for (const auto& e : ex) {
        out.insert(e.segment_index);
    }
    return out;
}

}  // namespace

TEST_CASE("annotations must lie in [0,1]") {
    CHECK_NOTHROW(FrameAnnotations({0.0, 0.5, 1.0}));
    CHECK_THROWS_AS(FrameAnnotations({0.0, 1.5}), InvalidInput);
    CHECK_THROWS_AS(FrameAnnotations({-0.1}), InvalidInput);
}

TEST_CASE("raw 1-5 annotations are rescaled per user then averaged") {
    const auto g = normalize_raw_annotations({{1, 5, 3}, {5, 5, 1}}, 1.0, 5.0);
    REQUIRE(g.n_frames() == 3);
    CHECK(g.scores[0] == doctest::Approx(0.5));
    CHECK(g.scores[1] == doctest::Approx(1.0));
    CHECK(g.scores[2] == doctest::Approx(0.25));
    CHECK_THROWS_AS(normalize_raw_annotations({{1, 2}, {1}}, 1.0, 5.0), InvalidInput);
    CHECK_THROWS_AS(normalize_raw_annotations({}, 1.0, 5.0), InvalidInput);
}

TEST_CASE("segment scores: simple cases") {
    const auto seg = SceneSegmentation::from_boundaries(std::vector<std::size_t>{1, 3}, 6);
    const auto constant = segment_scores(FrameAnnotations(std::vector<double>(6, 0.7)), seg);
    for (double s : constant) {
        CHECK(s == doctest::Approx(0.7).epsilon(1e-15));
    }
    const auto two = segment_scores(FrameAnnotations({0.0, 1.0}), SceneSegmentation::whole(2));
    CHECK(two == std::vector<double>{0.5});
    CHECK_THROWS_AS(segment_scores(FrameAnnotations({0.1, 0.2}), seg), InvalidInput);
}

TEST_CASE("segment scores match per-segment means and stay within frame bounds") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 400;
        std::vector<double> g(n);
        for (auto& x : g) {
            x = u(rng);
        }
        const auto seg = random_segmentation(rng, n);
        const auto s = segment_scores(FrameAnnotations(g), seg);
        REQUIRE(s.size() == seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) {
            long double sum = 0;
            double lo = 1.0, hi = 0.0;
            for (std::size_t t = seg[i].start; t < seg[i].end; ++t) {
                sum += g[t];
                lo = std::min(lo, g[t]);
                hi = std::max(hi, g[t]);
            }
            const double mean = static_cast<double>(sum / seg[i].length());
            CHECK(std::abs(s[i] - mean) <= 1e-12);
            CHECK(s[i] >= lo - 1e-15);
            CHECK(s[i] <= hi + 1e-15);
        }
    }
}

TEST_CASE("exemplars: top and bottom by score") {
    const std::vector<double> s{0.9, 0.1, 0.8, 0.2, 0.7, 0.3};
    const auto ex = select_exemplars(s, captions_for(6));
    CHECK(ex.k == 3);
    CHECK(!ex.warning);
    CHECK(indices(ex.high) == std::set<std::size_t>{0, 2, 4});
    CHECK(indices(ex.low) == std::set<std::size_t>{1, 3, 5});
    CHECK(ex.high.front().segment_index == 0);
    CHECK(ex.low.front().segment_index == 1);
    CHECK(ex.high[1].caption == "caption 2");
}

TEST_CASE("exemplars: ties go to the lower index") {
    const std::vector<double> s(8, 0.5);
    const auto ex = select_exemplars(s, captions_for(8));
    CHECK(indices(ex.high) == std::set<std::size_t>{0, 1, 2});
    CHECK(indices(ex.low) == std::set<std::size_t>{5, 6, 7});
}

TEST_CASE("exemplars: k shrinks on short videos") {
    const std::vector<double> s{0.1, 0.4, 0.3, 0.2};
    const auto ex = select_exemplars(s, captions_for(4));
    CHECK(ex.k == 2);
    CHECK(ex.warning.has_value());
    CHECK(indices(ex.high) == std::set<std::size_t>{1, 2});
    CHECK(indices(ex.low) == std::set<std::size_t>{0, 3});
    CHECK_THROWS_AS(select_exemplars(s, captions_for(3)), InvalidInput);
}

TEST_CASE("exemplars: high scores dominate low scores on random distinct inputs") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 6 + rng() % 30;
        std::vector<double> s(n);
        for (auto& x : s) {
            x = u(rng);
        }
        const auto ex = select_exemplars(s, captions_for(n));
        double min_high = 1.0, max_low = 0.0;
        for (const auto& e : ex.high) {
            min_high = std::min(min_high, e.score);
        }
        for (const auto& e : ex.low) {
            max_low = std::max(max_low, e.score);
        }
        CHECK(min_high >= max_low);
        auto all = indices(ex.high);
        const auto low = indices(ex.low);
        all.insert(low.begin(), low.end());
        CHECK(all.size() == 6);
    }
}

TEST_CASE("reason prompt") {
    const std::vector<double> s{0.9, 0.1, 0.8, 0.2, 0.7, 0.3};
    const auto ex = select_exemplars(s, captions_for(6));
    const auto p = build_reason_prompt(ex);
    for (const char* key : {"reason_positive", "reason_negative", "reason_difference", "STRICT JSON"}) {
        CHECK(p.find(key) != std::string::npos);
    }
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(p.find("caption " + std::to_string(i)) != std::string::npos);
    }
    CHECK(p == build_reason_prompt(ex));
    CHECK_THROWS_AS(build_reason_prompt(ExemplarSet{}), InvalidInput);
}

TEST_CASE("reason JSON parsing") {
    const auto r = parse_reason_json(R"({"reason_positive":"a","reason_negative":"b","reason_difference":"c"})");
    CHECK(r.reason_positive == "a");
    CHECK(r.reason_negative == "b");
    CHECK(r.reason_difference == "c");

    const auto fenced = parse_reason_json(
        "Sure! ```json\n{\"reason_positive\": \"has {braces}\", \"reason_negative\": \"b\", "
        "\"reason_difference\": \"c \\\"quoted\\\"\"}\n```");
    CHECK(fenced.reason_positive == "has {braces}");
    CHECK(fenced.reason_difference == "c \"quoted\"");

    CHECK_THROWS_AS(parse_reason_json(R"({"reason_positive":"a"})"), MalformedReason);
    CHECK_THROWS_AS(parse_reason_json("no json here"), MalformedReason);
    CHECK_THROWS_AS(parse_reason_json(R"({"reason_positive":"","reason_negative":"b","reason_difference":"c"})"),
                    MalformedReason);
}

TEST_CASE("rubric prompt") {
    const std::vector<ReasonTriple> reasons{{"pos one", "neg one", "diff one"}, {"pos two", "neg two", "diff two"}};
    const auto p = build_rubric_prompt(reasons, "tvsum");
    for (const char* s : {"(i)", "(ii)", "(iii)", "(iv)", "tvsum", "pos one", "neg two", "diff two", "[0,100]"}) {
        CHECK(p.find(s) != std::string::npos);
    }
    CHECK(p == build_rubric_prompt(reasons, "tvsum"));
    CHECK_THROWS_AS(build_rubric_prompt({}, "tvsum"), InvalidInput);
}

TEST_CASE("pseudo-label video sampling") {
    std::vector<std::string> ids50, ids25;
    for (int i = 0; i < 50; ++i) {
        ids50.push_back("v" + std::to_string(i));
    }
    ids25.assign(ids50.begin(), ids50.begin() + 25);
    const auto a = sample_pseudo_videos(ids50, 0.10, 9);
    CHECK(a.size() == 5);
    CHECK(sample_pseudo_videos(ids25, 0.10, 9).size() == 3);
    CHECK(a == sample_pseudo_videos(ids50, 0.10, 9));
    CHECK(std::set<std::string>(a.begin(), a.end()).size() == a.size());
    for (const auto& id : a) {
        CHECK(std::find(ids50.begin(), ids50.end(), id) != ids50.end());
    }
    CHECK(sample_pseudo_videos(ids50, 1.0, 1).size() == 50);
    CHECK_THROWS_AS(sample_pseudo_videos({}, 0.1, 1), InvalidInput);
    CHECK_THROWS_AS(sample_pseudo_videos(ids50, 0.0, 1), InvalidInput);
}

TEST_CASE("oracle shot labels and uniform shots") {
    CHECK(qfvs_shot_annotations(std::vector<std::size_t>{0, 2}, 4) == std::vector<int>{1, 0, 1, 0});
    CHECK(qfvs_shot_annotations(std::vector<std::size_t>{}, 3) == std::vector<int>{0, 0, 0});
    CHECK(qfvs_shot_annotations(std::vector<std::size_t>{0, 1, 2}, 3) == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(qfvs_shot_annotations(std::vector<std::size_t>{4}, 4), InvalidInput);

    const auto shots = uniform_shots(330, 30.0);
    CHECK(shots.intervals() == std::vector<Interval>{{0, 150}, {150, 300}, {300, 330}});
}

TEST_CASE("built-in rubric and rubric loading") {
    const auto r = Rubric::tvsum();
    REQUIRE(r.dimensions.size() == 5);
    const double w[] = {0.35, 0.20, 0.15, 0.15, 0.15};
    const char* keys[] = {"R", "A", "D", "U", "N"};
    for (int i = 0; i < 5; ++i) {
        CHECK(r.dimensions[i].weight == w[i]);
        CHECK(r.dimensions[i].key == keys[i]);
    }
    std::vector<int> pens;
    for (const auto& p : r.penalties) {
        pens.push_back(p.value);
    }
    CHECK(pens == std::vector<int>{-15, -10, -8, -6, -6});
    CHECK(r.preference_adjustment_bound == 5);

    const auto round_trip = load_rubric(r.to_json());
    CHECK(round_trip.to_json() == r.to_json());

    auto doc = r.to_json();
    doc["weights"] = nlohmann::json::array({{{"key", "X"}, {"name", "x"}, {"weight", 0.5}},
                                            {{"key", "Y"}, {"name", "y"}, {"weight", 0.5}},
                                            {{"key", "Z"}, {"name", "z"}, {"weight", 0.2}}});
    CHECK_THROWS_AS(load_rubric(doc), InvalidRubric);
    auto positive = r.to_json();
    positive["penalties"][0]["value"] = 5;
    CHECK_THROWS_AS(load_rubric(positive), InvalidRubric);

    const auto text = "Here it is:\n" + r.to_json().dump(2) + "\nDone.";
    CHECK(parse_rubric_reply(text).to_json() == r.to_json());
    CHECK_THROWS_AS(parse_rubric_reply("no rubric"), InvalidRubric);
}

TEST_CASE("shipped rubric files load") {
    for (const char* name : {"tvsum", "summe", "qfvs"}) {
        const auto r = load_rubric_file(std::string(VSUM_SOURCE_DIR) + "/rubrics/" + name + ".rubric");
        CHECK(r.name == name);
        CHECK(r.dimensions.size() == 5);
    }
}
