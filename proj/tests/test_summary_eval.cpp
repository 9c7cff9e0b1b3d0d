#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "vsum/error.hpp"
#include "vsum/summary_eval.hpp"

using namespace vsum;
using namespace vsum::eval;

namespace {

Summary mask(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> ranges) {
    Summary s{std::vector<std::uint8_t>(n, 0)};
    for (auto [a, b] : ranges) {
        for (std::size_t t = a; t < b; ++t) {
            s.selected[t] = 1;
        }
    }
    return s;
}

}  // namespace

TEST_CASE("knapsack examples") {
    CHECK(knapsack_select(std::vector<double>{6, 5, 5}, std::vector<std::size_t>{6, 5, 5}, 10) ==
          std::vector<std::size_t>{1, 2});
    CHECK(knapsack_select(std::vector<double>{1, 2, 3}, std::vector<std::size_t>{1, 1, 1}, 3) ==
          std::vector<std::size_t>{0, 1, 2});
    CHECK(knapsack_select(std::vector<double>{1, 2, 3}, std::vector<std::size_t>{1, 1, 1}, 0).empty());
    CHECK(knapsack_select(std::vector<double>{}, std::vector<std::size_t>{}, 5).empty());
    // equal values: the earlier segment wins
    CHECK(knapsack_select(std::vector<double>{4, 4}, std::vector<std::size_t>{3, 3}, 4) ==
          std::vector<std::size_t>{0});
    CHECK_THROWS_AS(knapsack_select(std::vector<double>{1}, std::vector<std::size_t>{0}, 4), InvalidInput);
    CHECK_THROWS_AS(knapsack_select(std::vector<double>{1, 2}, std::vector<std::size_t>{1}, 4), InvalidInput);
}

TEST_CASE("knapsack matches exhaustive search") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<double> v(n);
        std::vector<std::size_t> len(n);
        const bool coarse = rng() % 2 == 0;  // small integer values make ties common
        for (std::size_t i = 0; i < n; ++i) {
            len[i] = 1 + rng() % 20;
            v[i] = coarse ? static_cast<double>(rng() % 4) : static_cast<double>(rng() % 100000) / 1000.0;
        }
        std::size_t total = 0;
        for (auto l : len) {
            total += l;
        }
        const std::size_t cap = rng() % (total + 2);
        const auto got = knapsack_select(v, len, cap);
        CHECK(got == oracle::knapsack(v, len, cap));
        std::size_t used = 0;
        for (auto i : got) {
            used += len[i];
        }
        CHECK(used <= cap);
    }
}

TEST_CASE("greedy shot selection") {
    CHECK(greedy_shot_select(std::vector<double>{0.2, 0.9, 0.5}, 2) == std::vector<std::size_t>{1, 2});
    CHECK(greedy_shot_select(std::vector<double>{0.2, 0.9, 0.5}, 3) == std::vector<std::size_t>{0, 1, 2});
    CHECK(greedy_shot_select(std::vector<double>{0.2, 0.9, 0.5}, 0).empty());
    CHECK(greedy_shot_select(std::vector<double>{0.5, 0.5, 0.5}, 2) == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(greedy_shot_select(std::vector<double>{0.2}, 2), InvalidInput);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<double> s(n);
        for (auto& x : s) {
            x = static_cast<double>(rng() % 10);
        }
        const std::size_t b = rng() % (n + 1);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto c) { return s[a] > s[c]; });
        std::vector<std::size_t> expect(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b));
        std::sort(expect.begin(), expect.end());
        CHECK(greedy_shot_select(s, b) == expect);
    }
}

TEST_CASE("shot scores from frames") {
    const SceneSegmentation shots({{0, 2}, {2, 5}}, 5);
    const auto s = shot_scores_from_frames(std::vector<double>{0.0, 1.0, 0.3, 0.3, 0.3}, shots);
    CHECK(s[0] == 0.5);
    CHECK(s[1] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(shot_scores_from_frames(std::vector<double>{0.0, 1.0}, shots), InvalidInput);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<std::size_t> cuts;
        for (std::size_t t = 0; t + 1 < n; ++t) {
            if (rng() % 9 == 0) {
                cuts.push_back(t);
            }
        }
        const auto seg = SceneSegmentation::from_boundaries(cuts, n);
        std::vector<double> f(n);
        for (auto& x : f) {
            x = u(rng);
        }
        const auto got = shot_scores_from_frames(f, seg);
        for (std::size_t i = 0; i < seg.size(); ++i) {
            long double sum = 0;
            for (std::size_t t = seg[i].start; t < seg[i].end; ++t) {
                sum += f[t];
            }
            CHECK(std::abs(got[i] - static_cast<double>(sum / seg[i].length())) <= 1e-12);
        }
    }
}

TEST_CASE("budgets") {
    CHECK(SelectionBudget::fraction_of(0.15).capacity(1000) == 150);
    CHECK(SelectionBudget::fraction_of(0.15).capacity(20) == 3);
    CHECK(SelectionBudget::absolute(7).capacity(100) == 7);
    CHECK(SelectionBudget::absolute(700).capacity(100) == 100);
    CHECK_THROWS_AS(SelectionBudget::fraction_of(1.5), InvalidInput);
    CHECK_THROWS_AS(SelectionBudget::fraction_of(-0.1), InvalidInput);
}

TEST_CASE("keyshots from annotations") {
    const auto whole = SceneSegmentation::whole(10);
    CHECK(gt_to_keyshots(std::vector<double>(10, 0.2), whole, SelectionBudget::absolute(10)).count() == 10);
    const SceneSegmentation halves({{0, 5}, {5, 10}}, 10);
    const std::vector<double> favour_second{0.1, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9, 0.9};
    const auto m = gt_to_keyshots(favour_second, halves, SelectionBudget::fraction_of(0.5));
    CHECK(m.selected == mask(10, {{5, 10}}).selected);
    CHECK(gt_to_keyshots(favour_second, halves, SelectionBudget::absolute(0)).count() == 0);
    const auto chosen = std::vector<std::size_t>{1};
    CHECK(mask_from_segments(halves, chosen).selected == m.selected);
}

TEST_CASE("precision, recall and F1") {
    const auto a = mask(200, {{0, 100}});
    const auto b = mask(200, {{75, 125}});
    const auto r = precision_recall_f1(a, b);
    CHECK(r.precision == 0.25);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto same = precision_recall_f1(a, a);
    CHECK(same.f1 == 1.0);
    const auto disjoint = precision_recall_f1(mask(10, {{0, 3}}), mask(10, {{5, 8}}));
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.f1 == 0.0);
    const auto empty = precision_recall_f1(mask(10, {}), mask(10, {{5, 8}}));
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);
    CHECK_THROWS_AS(precision_recall_f1(mask(3, {}), mask(4, {})), InvalidInput);
}

TEST_CASE("F1 on random masks matches set arithmetic and is symmetric") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 100;
        Summary a{std::vector<std::uint8_t>(n)}, b{std::vector<std::uint8_t>(n)};
        std::set<std::size_t> sa, sb;
        for (std::size_t t = 0; t < n; ++t) {
            a.selected[t] = rng() % 3 == 0;
            b.selected[t] = rng() % 2 == 0;
            if (a.selected[t]) {
                sa.insert(t);
            }
            if (b.selected[t]) {
                sb.insert(t);
            }
        }
        std::size_t inter = 0;
        for (auto t : sa) {
            inter += sb.count(t);
        }
        const auto r = precision_recall_f1(a, b);
        const double f = (sa.empty() || sb.empty() || inter == 0)
                             ? 0.0
                             : 2.0 * static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size());
        CHECK(r.f1 == doctest::Approx(f).epsilon(1e-12));
        CHECK(precision_recall_f1(b, a).f1 == doctest::Approx(r.f1).epsilon(1e-15));
        CHECK(r.f1 >= 0.0);
        CHECK(r.f1 <= 1.0);
    }
}

TEST_CASE("user aggregation") {
    const std::vector<double> f{0.4, 0.6};
    CHECK(aggregate_users(f, Dataset::SumMe) == 0.6);
    CHECK(aggregate_users(f, Dataset::TVSum) == 0.5);
    CHECK(aggregate_users(std::vector<double>{0.3}, Dataset::SumMe) == aggregate_users(std::vector<double>{0.3}, Dataset::TVSum));
    CHECK_THROWS_AS(aggregate_users(std::vector<double>{}, Dataset::TVSum), InvalidInput);
    CHECK(parse_dataset("tvsum") == Dataset::TVSum);
    CHECK(to_string(parse_dataset("summe")) == "summe");
    CHECK_THROWS_AS(parse_dataset("youtube"), InvalidInput);
}

TEST_CASE("splits") {
    std::vector<std::string> ids;
    for (int i = 0; i < 23; ++i) {
        ids.push_back("v" + std::to_string(i));
    }
    const std::vector<std::string> excluded{"v3", "v7", "v11"};
    const auto spec = make_splits(ids, 5, 42, excluded);
    CHECK(spec.test_ids.size() == 5);
    std::multiset<std::string> seen;
    for (const auto& split : spec.test_ids) {
        CHECK(split.size() == 4);
        seen.insert(split.begin(), split.end());
    }
    CHECK(seen.size() == 20);
    CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == 20);
    for (const auto& e : excluded) {
        CHECK(seen.count(e) == 0);
    }
    CHECK(make_splits(ids, 5, 42, excluded).test_ids == spec.test_ids);
    CHECK(make_splits(ids, 5, 43, excluded).test_ids != spec.test_ids);
    CHECK_THROWS_AS(make_splits(ids, 0, 1), InvalidInput);
    CHECK_THROWS_AS(make_splits({"a", "b"}, 5, 1), InvalidInput);

    const SplitSpec five{0, 5, {}};
    CHECK(split_average({{0.5}, {0.6}, {0.7}, {0.8}, {0.9}}, five) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(split_average({{0.4, 0.6}, {0.5}, {0.5}, {0.5, 0.5}, {0.5}}, five) == doctest::Approx(0.5));
    CHECK(split_average({{0.25, 0.75}}, SplitSpec{0, 1, {}}) == 0.5);
    CHECK_THROWS_AS(split_average({{0.5}}, five), InvalidInput);
    CHECK_THROWS_AS(split_average({{0.5}, {}, {0.5}, {0.5}, {0.5}}, five), InvalidInput);
}
