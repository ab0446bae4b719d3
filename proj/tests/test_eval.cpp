#include "grand/error.hpp"
#include "grand/eval.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace grand;

namespace {

PredictionSet make(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold) {
    PredictionSet p;
    for (std::size_t i = 0; i < gold.size(); ++i) p.add(pred[i], gold[i]);
    return p;
}

LabelSet random_set(Rng& rng, std::size_t k, bool single) {
    if (single) return {static_cast<ClassId>(rng() % k)};
    LabelSet s;
    for (ClassId c = 0; c < k; ++c)
        if (rng() % 3 == 0) s.push_back(c);
    if (s.empty()) s.push_back(static_cast<ClassId>(rng() % k));
    return s;
}

Mlp uniform_first_layer(std::size_t in, std::size_t out, double value) {
    Mlp m({in, out, 2}, OutputHead::Softmax);
    std::fill(m.layers()[0].weights.begin(), m.layers()[0].weights.end(), value);
    return m;
}

}  // namespace

TEST_CASE("metric examples") {
    auto perfect = make({{0}, {1}, {2}}, {{0}, {1}, {2}});
    auto m = evaluate(perfect, 3);
    CHECK(m.accuracy == 1.0);
    CHECK(m.micro_f1 == 1.0);
    CHECK(m.macro_f1 == 1.0);

    auto p = make({{0}, {0}, {1}, {1}}, {{0}, {1}, {1}, {1}});
    CHECK(accuracy(p) == doctest::Approx(0.75));
    CHECK(micro_f1(p, 2) == doctest::Approx(0.75));
    CHECK(macro_f1(p, 2) == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
    CHECK(macro_f1(p, 2) == doctest::Approx(0.7333).epsilon(1e-3));

    // Class 2 never occurs in gold or predictions and counts as 1.
    CHECK(macro_f1(p, 3) == doctest::Approx((2.0 / 3.0 + 0.8 + 1.0) / 3));
    CHECK(f1_score({0, 0, 0}) == 1.0);
    CHECK(f1_score({0, 1, 2}) == 0.0);
}

TEST_CASE("metrics JSON layout") {
    auto p = make({{0}, {1}}, {{0}, {0}});
    auto j = evaluate(p, 2).to_json({"a", "b"});
    CHECK(j.contains("accuracy"));
    CHECK(j.contains("micro_f1"));
    CHECK(j.contains("macro_f1"));
    REQUIRE(j["per_class"].size() == 2);
}

TEST_CASE("property: metrics equal a brute-force oracle and ignore example order") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + rng() % 10;
        const std::size_t n = 1 + rng() % 200;
        const bool single = rng() % 2 == 0;
        std::vector<LabelSet> pred, gold;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(random_set(rng, k, single));
            gold.push_back(random_set(rng, k, single));
        }
        auto m = evaluate(make(pred, gold), k);
        auto o = grand::testing::brute_force_metrics(pred, gold, k);
        CHECK(m.accuracy == o.accuracy);
        CHECK(m.micro_f1 == o.micro_f1);
        CHECK(m.macro_f1 == o.macro_f1);
        for (double v : {m.accuracy, m.micro_f1, m.macro_f1}) CHECK((v >= 0 && v <= 1));

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        PredictionSet shuffled;
        for (auto i : order) shuffled.add(pred[i], gold[i]);
        auto s = evaluate(shuffled, k);
        CHECK(s.accuracy == m.accuracy);
        CHECK(s.micro_f1 == m.micro_f1);
        CHECK(s.macro_f1 == m.macro_f1);
    }
}

TEST_CASE("weight group examples") {
    const SegmentMap halves{{"a", 0, 2}, {"b", 2, 2}};
    auto r = weight_group_analysis(uniform_first_layer(4, 3, -0.7), halves, 1);
    REQUIRE(r.fractions.size() == 2);
    CHECK(r.fractions[0].first == "a");
    CHECK(r.fractions[0].second == doctest::Approx(0.5));
    CHECK(r.fractions[1].second == doctest::Approx(0.5));
    CHECK(r.epoch == 1);

    auto zeroed = uniform_first_layer(4, 3, 1.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) zeroed.layers()[0].weight(i, j) = 0;
    auto z = weight_group_analysis(zeroed, halves, 10);
    CHECK(z.fractions[0].second == 0.0);
    CHECK(z.fractions[1].second == doctest::Approx(1.0));

    const SegmentMap uneven{{"narrow", 0, 1}, {"wide", 1, 3}};
    auto u = weight_group_analysis(uniform_first_layer(4, 5, 2.0), uneven, 1);
    CHECK(u.fractions[0].second == doctest::Approx(0.25));
    CHECK(u.fractions[1].second == doctest::Approx(0.75));

    CHECK_THROWS_AS(weight_group_analysis(uniform_first_layer(5, 2, 1.0), halves, 1), DimMismatch);
    auto j = u.to_json();
    CHECK(j.dump().find("narrow") != std::string::npos);
}

TEST_CASE("property: weight fractions sum to one and ignore uniform scaling") {
    Rng rng(2);
    std::uniform_real_distribution<double> w(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        SegmentMap segments;
        std::size_t offset = 0;
        const std::size_t parts = 1 + rng() % 4;
        for (std::size_t p = 0; p < parts; ++p) {
            const std::size_t len = 1 + rng() % 6;
            segments.push_back({"s" + std::to_string(p), offset, len});
            offset += len;
        }
        Mlp m({offset, 1 + rng() % 5, 3}, OutputHead::Softmax);
        for (auto& v : m.layers()[0].weights) v = w(rng);
        auto r = weight_group_analysis(m, segments, 1);
        double total = 0;
        for (auto& [name, f] : r.fractions) total += f;
        CHECK(std::abs(total - 1.0) <= 1e-9);
        const double scale = 0.01 + std::abs(w(rng)) * 100;
        for (auto& v : m.layers()[0].weights) v *= scale;
        auto scaled = weight_group_analysis(m, segments, 1);
        for (std::size_t p = 0; p < parts; ++p)
            CHECK(std::abs(scaled.fractions[p].second - r.fractions[p].second) <= 1e-12);
    }
}
