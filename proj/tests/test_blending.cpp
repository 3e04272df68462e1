#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "stance/blending.hpp"
#include "stance/error.hpp"
#include "stance/rng.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace stance;
using namespace stance::testing;

TEST_CASE("blend arithmetic") {
    ProbList a{{"r1", ProbVector{{1.0, 0.0, 0.0}}}, {"r2", ProbVector{{0.2, 0.3, 0.5}}}};
    ProbList b{{"r1", ProbVector{{0.0, 1.0, 0.0}}}, {"r2", ProbVector{{0.6, 0.2, 0.2}}}};

    SUBCASE("w = 1 returns the first set exactly") {
        const ProbList out = blend(a, b, BlendSpec{1.0});
        for (std::size_t r = 0; r < a.size(); ++r)
            for (int c = 0; c < 3; ++c) CHECK(out[r].second[c] == a[r].second[c]);
    }
    SUBCASE("one-hot inputs mix to the weights themselves") {
        const ProbList out = blend(a, b, BlendSpec{0.42});
        CHECK(out[0].second[0] == doctest::Approx(0.42).epsilon(1e-15));
        CHECK(out[0].second[1] == doctest::Approx(0.58).epsilon(1e-15));
        CHECK(out[0].second[2] == 0.0);
    }
    SUBCASE("swapping the sets mirrors the weight") {
        const ProbList lhs = blend(a, b, BlendSpec{0.79});
        const ProbList rhs = blend(b, a, BlendSpec{1.0 - 0.79});
        for (std::size_t r = 0; r < a.size(); ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(lhs[r].second[c] == doctest::Approx(rhs[r].second[c]).epsilon(1e-15));
    }
    SUBCASE("b is aligned to a's order by row id") {
        std::swap(b[0], b[1]);
        const ProbList out = blend(a, b, BlendSpec{0.5});
        CHECK(out[0].first == "r1");
        CHECK(out[0].second[1] == doctest::Approx(0.5));
    }
    SUBCASE("mismatched rows are an error") {
        ProbList wrong = b;
        wrong[1].first = "zz";
        CHECK_THROWS_AS(blend(a, wrong, BlendSpec{0.5}), DataError);
        CHECK_THROWS_AS(blend(a, b, BlendSpec{1.5}), DataError);
    }
}

TEST_CASE("blends of valid vectors stay valid") {
    Rng rng(5150);
    for (int iter = 0; iter < 200; ++iter) {
        auto random_vec = [&] {
            ProbVector v;
            double sum = 0.0;
            for (int c = 0; c < 3; ++c) {
                v[c] = rng.uniform01();
                sum += v[c];
            }
            for (int c = 0; c < 3; ++c) v[c] /= sum;
            return v;
        };
        const ProbList a{{"x", random_vec()}};
        const ProbList b{{"x", random_vec()}};
        const double w = rng.uniform01();
        CHECK(blend(a, b, BlendSpec{w})[0].second.valid(1e-9));
    }
}

TEST_CASE("evaluate_accuracy") {
    const LabelList gold{{"a", Label::Agreed}, {"b", Label::Disagreed}, {"c", Label::Unrelated}};

    SUBCASE("all correct") {
        const EvalReport r = evaluate_accuracy(gold, gold);
        CHECK(r.accuracy == 1.0);
        CHECK(r.n_correct == 3);
        CHECK(r.confusion[0][0] == 1);
        CHECK(r.confusion[1][1] == 1);
        CHECK(r.confusion[2][2] == 1);
    }
    SUBCASE("two of three") {
        const LabelList preds{{"a", Label::Agreed}, {"b", Label::Unrelated}, {"c", Label::Unrelated}};
        const EvalReport r = evaluate_accuracy(preds, gold);
        CHECK(r.n_correct == 2);
        CHECK(r.accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(r.confusion[1][2] == 1);  // gold disagreed predicted unrelated
        std::size_t total = 0;
        for (const auto& row : r.confusion)
            for (std::size_t v : row) total += v;
        CHECK(total == r.n_rows);
    }
    SUBCASE("row set mismatch is an error") {
        const LabelList preds{{"a", Label::Agreed}, {"b", Label::Disagreed}};
        CHECK_THROWS_AS(evaluate_accuracy(preds, gold), DataError);
        LabelList renamed = gold;
        renamed[2].first = "zz";
        CHECK_THROWS_AS(evaluate_accuracy(renamed, gold), DataError);
    }
}

TEST_CASE("search_blend_weight finds engineered optima") {
    SUBCASE("a perfect, b wrong, one-hot: first strictly-winning grid point") {
        // Gold is class 1, so the w = 0.5 tie resolves to class 0 and the
        // blend only wins strictly above it.
        ProbList a, b;
        LabelList gold;
        for (int r = 0; r < 5; ++r) {
            const std::string id = "r" + std::to_string(r);
            a.emplace_back(id, one_hot(Label::Disagreed));
            b.emplace_back(id, one_hot(Label::Agreed));
            gold.emplace_back(id, Label::Disagreed);
        }
        const WeightSearchResult result = search_blend_weight(a, b, gold, 0.01);
        CHECK(result.spec.w == 51.0 / 100.0);
        CHECK(result.report.accuracy == 1.0);
        const auto [oracle_i, oracle_correct] = grid_blend_oracle(a, b, gold, 100);
        CHECK(oracle_i == 51);
        CHECK(oracle_correct == 5);
    }
    SUBCASE("identical sets tie everywhere and resolve to zero") {
        ProbList a{{"r", ProbVector{{0.6, 0.3, 0.1}}}};
        const WeightSearchResult result = search_blend_weight(a, a, {{"r", Label::Agreed}}, 0.01);
        CHECK(result.spec.w == 0.0);
        CHECK(result.report.accuracy == 1.0);
    }
    SUBCASE("engineered two-decimal optima are recovered exactly") {
        for (const int target : {0, 21, 42, 79, 100}) {
            CAPTURE(target);
            const BlendFixture fx = blend_weight_fixture(target);
            const WeightSearchResult result = search_blend_weight(fx.a, fx.b, fx.gold, 0.01);
            CHECK(result.spec.w == fx.target_weight);
            CHECK(result.report.n_correct == fx.gold.size());
            const auto [oracle_i, oracle_correct] = grid_blend_oracle(fx.a, fx.b, fx.gold, 100);
            CHECK(oracle_i == static_cast<std::size_t>(target));
            CHECK(oracle_correct == fx.gold.size());
        }
    }
    SUBCASE("step must divide one evenly") {
        ProbList a{{"r", one_hot(Label::Agreed)}};
        CHECK_THROWS_AS(search_blend_weight(a, a, {{"r", Label::Agreed}}, 0.03), DataError);
        CHECK_THROWS_AS(search_blend_weight({}, {}, {}, 0.01), DataError);
    }
    SUBCASE("coarser grids work") {
        const BlendFixture fx = blend_weight_fixture(50);
        const WeightSearchResult result = search_blend_weight(fx.a, fx.b, fx.gold, 0.25);
        CHECK(result.spec.w == 0.5);
    }
}

TEST_CASE("balanced accuracy averages per-class recall") {
    // Gold: 4 agreed, 2 disagreed. Preds: 2/4 and 2/2 right.
    LabelList gold, preds;
    for (int i = 0; i < 4; ++i) {
        gold.emplace_back("a" + std::to_string(i), Label::Agreed);
        preds.emplace_back("a" + std::to_string(i), i < 2 ? Label::Agreed : Label::Unrelated);
    }
    for (int i = 0; i < 2; ++i) {
        gold.emplace_back("d" + std::to_string(i), Label::Disagreed);
        preds.emplace_back("d" + std::to_string(i), Label::Disagreed);
    }
    const EvalReport r = evaluate_accuracy(preds, gold);
    CHECK(r.accuracy == doctest::Approx(4.0 / 6.0));
    CHECK(balanced_accuracy(r) == doctest::Approx((0.5 + 1.0) / 2.0));
    CHECK(eval_report_json(r, true).find("balanced_accuracy") != std::string::npos);
    CHECK(eval_report_json(r).find("balanced_accuracy") == std::string::npos);
}

TEST_CASE("search matches the exhaustive oracle on random inputs") {
    Rng rng(8899);
    for (int iter = 0; iter < 40; ++iter) {
        ProbList a, b;
        LabelList gold;
        const std::size_t n = 5 + rng.bounded(20);
        for (std::size_t r = 0; r < n; ++r) {
            const std::string id = "r" + std::to_string(r);
            auto random_vec = [&] {
                ProbVector v;
                double sum = 0.0;
                for (int c = 0; c < 3; ++c) {
                    v[c] = 0.05 + rng.uniform01();
                    sum += v[c];
                }
                for (int c = 0; c < 3; ++c) v[c] /= sum;
                return v;
            };
            a.emplace_back(id, random_vec());
            b.emplace_back(id, random_vec());
            gold.emplace_back(id, static_cast<Label>(rng.bounded(3)));
        }
        const WeightSearchResult result = search_blend_weight(a, b, gold, 0.01);
        const auto [oracle_i, oracle_correct] = grid_blend_oracle(a, b, gold, 100);
        CHECK(result.spec.w == static_cast<double>(oracle_i) / 100.0);
        CHECK(result.report.n_correct == oracle_correct);

        // Row order cannot matter.
        ProbList a_rev(a.rbegin(), a.rend());
        ProbList b_rev(b.rbegin(), b.rend());
        const WeightSearchResult reversed = search_blend_weight(a_rev, b_rev, gold, 0.01);
        CHECK(reversed.spec.w == result.spec.w);
        CHECK(reversed.report.n_correct == result.report.n_correct);
    }
}
