#include "grand/embed.hpp"
#include "grand/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

using namespace grand;
using grand::testing::corpus_of;

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.window = 2;
    cfg.negatives = 3;
    cfg.seed = 3;
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST_CASE("vocabulary examples") {
    auto one = build_vocab(corpus_of({{"A", "p", "B"}}), 1);
    CHECK(one.size() == 3);

    auto two = build_vocab(corpus_of({{"A", "p", "B"}, {"A", "p", "C"}}), 2);
    CHECK(two.size() == 2);
    CHECK(two.find("A"));
    CHECK(two.find("p"));
    CHECK(!two.find("B"));

    auto ties = Vocabulary::from_counts({{"B", 2}, {"A", 2}, {"C", 5}});
    CHECK(ties.token(0) == "C");
    CHECK(*ties.find("A") < *ties.find("B"));

    CHECK_THROWS_AS(build_vocab(corpus_of({{"A"}}), 2), EmptyCorpus);
    CHECK_THROWS_AS(build_vocab(TextCorpus{}, 1), EmptyCorpus);
}

TEST_CASE("vocabulary checked against a graph") {
    auto g = grand::testing::graph_of({{"A", "p", "B"}});
    CHECK(build_vocab(corpus_of({{"http://x/A", "http://x/p"}}), 1, &g).size() == 2);
    CHECK_THROWS_AS(build_vocab(corpus_of({{"http://x/A", "http://x/zz"}}), 1, &g), TokenNotInGraph);
}

TEST_CASE("negative sampler follows unigram^0.75") {
    auto sym = Vocabulary::from_counts({{"a", 1}, {"b", 1}});
    CHECK(NegativeSampler(sym).probability(0) == doctest::Approx(0.5));

    auto skew = Vocabulary::from_counts({{"a", 4}, {"b", 1}});
    NegativeSampler sampler(skew);
    const double expected = std::pow(4.0, 0.75) / (std::pow(4.0, 0.75) + 1.0);
    CHECK(expected == doctest::Approx(0.7388).epsilon(1e-3));
    CHECK(sampler.probability(*skew.find("a")) == doctest::Approx(expected));
    Rng rng(9);
    std::size_t hits = 0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) hits += sampler(rng) == *skew.find("a");
    CHECK(std::abs(double(hits) / draws - expected) <= 0.01);

    auto single = Vocabulary::from_counts({{"only", 3}});
    NegativeSampler lone(single);
    for (int i = 0; i < 100; ++i) CHECK(lone(rng) == 0);
}

TEST_CASE("output matrix layout by offset") {
    auto vocab = Vocabulary::from_counts({{"a", 1}});
    TrainConfig cfg = small_config();
    cfg.window = 3;
    EmbeddingMatrix classic(vocab, cfg);
    CHECK(classic.num_output_matrices() == 1);
    CHECK(classic.output_matrix_index(-2) == 0);
    cfg.order_aware = true;
    EmbeddingMatrix oa(vocab, cfg);
    CHECK(oa.num_output_matrices() == 6);
    CHECK(oa.output_matrix_index(-3) == 0);
    CHECK(oa.output_matrix_index(-1) == 2);
    CHECK(oa.output_matrix_index(1) == 3);
    CHECK(oa.output_matrix_index(3) == 5);
}

TEST_CASE("initialization ranges") {
    auto vocab = Vocabulary::from_counts({{"a", 1}, {"b", 1}, {"c", 1}});
    TrainConfig cfg = small_config();
    EmbeddingMatrix m(vocab, cfg);
    m.initialize(5);
    for (std::uint32_t t = 0; t < 3; ++t) {
        for (double v : m.input(t)) CHECK(std::abs(v) <= 0.5 / cfg.dim);
        for (double v : m.output(0, t)) CHECK(v == 0.0);
    }
}

TEST_CASE("negative-sampling gradient matches finite differences") {
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (int i = 0; i < 7; ++i) entries.emplace_back("t" + std::to_string(i), 1 + i);
    auto vocab = Vocabulary::from_counts(entries);
    Rng rng(17);
    for (bool order_aware : {false, true}) {
        TrainConfig cfg = small_config();
        cfg.dim = 6;
        cfg.window = 3;
        cfg.order_aware = order_aware;
        EmbeddingMatrix m(vocab, cfg);
        for (int trial = 0; trial < 20; ++trial) {
            grand::testing::randomize(m, rng);
            auto batch = grand::testing::random_microbatch(m, rng);
            CHECK(grand::testing::embedding_gradient_error(m, batch) <= 1e-4);
        }
    }
}

TEST_CASE("pair update follows the negative gradient") {
    auto vocab = Vocabulary::from_counts({{"a", 1}, {"b", 1}, {"c", 1}});
    EmbeddingMatrix m(vocab, small_config());
    Rng rng(2);
    grand::testing::randomize(m, rng);
    MicroBatch batch{0, {PairSample{1, 1, {2}}}};
    const double before = microbatch_loss(m, batch);
    const double reported = apply_pair_update(m, 0, batch.pairs[0], 0.05);
    CHECK(reported == doctest::Approx(before));
    CHECK(microbatch_loss(m, batch) < before);
}

TEST_CASE("fixed context window enumerates every offset") {
    std::vector<std::tuple<std::size_t, std::size_t, int>> seen;
    for_each_context_pair(4, 2, [&](std::size_t i, std::size_t j, int r) { seen.emplace_back(i, j, r); });
    CHECK(seen.size() == 10);  // 2 * (3 + 2)
    for (auto [i, j, r] : seen) CHECK(static_cast<long>(j) - static_cast<long>(i) == r);
}

TEST_CASE("learning rate decays linearly") {
    const double a = 0.025, b = 0.0001;
    LinearDecay decay(a, b, 1000);
    const double step = (a - b) / 1000;
    CHECK(decay.at(0) == a);
    CHECK(std::abs(decay.at(500) - (a + b) / 2) <= step);
    CHECK(decay.at(1000) == doctest::Approx(b));
    CHECK(decay.at(5000) == doctest::Approx(b));
}

TEST_CASE("training pulls co-occurring tokens together") {
    std::vector<std::vector<std::string_view>> sentences(10, {"A", "p", "B"});
    auto corpus = corpus_of(sentences);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.dim = 16;
        cfg.threads = 1;
        cfg.seed = seed;
        auto vocab = build_vocab(corpus, 1);
        EmbeddingMatrix init(vocab, cfg);
        init.initialize(cfg.seed);
        const auto a = *vocab.find("A");
        const auto b = *vocab.find("B");
        const double before = cosine(init.input(a), init.input(b));
        auto result = train(corpus, cfg);
        REQUIRE(result.model.vocab().find("A") == a);
        CHECK(cosine(result.model.input(a), result.model.input(b)) > before);
        CHECK(result.total_steps == cfg.epochs * 30);
    }
}

TEST_CASE("epoch loss decreases on a small fixed corpus") {
    Rng rng(4);
    auto g = build_graph(grand::testing::random_triples(rng, 40));
    WalkConfig wc;
    wc.depth = 4;
    wc.walks_per_entity = 30;
    wc.seed = 8;
    auto text = TextCorpus::from_walks(generate_corpus(g, wc), g);
    for (bool order_aware : {false, true}) {
        TrainConfig cfg = small_config();
        cfg.order_aware = order_aware;
        cfg.window = 3;
        auto result = train(text, cfg);
        REQUIRE(result.epoch_loss.size() == 5);
        int inversions = 0;
        for (std::size_t e = 1; e < 5; ++e) {
            const double prev = result.epoch_loss[e - 1];
            const double cur = result.epoch_loss[e];
            if (cur > prev) {
                ++inversions;
                CHECK(cur - prev <= 0.01 * prev);
            }
        }
        CHECK(inversions <= 1);
    }
}

TEST_CASE("single-worker training is bit-reproducible") {
    Rng rng(6);
    auto g = build_graph(grand::testing::random_triples(rng, 30));
    WalkConfig wc;
    wc.depth = 3;
    wc.walks_per_entity = 10;
    auto text = TextCorpus::from_walks(generate_corpus(g, wc), g);
    for (auto arch : {Architecture::SkipGram, Architecture::Cbow}) {
        TrainConfig cfg = small_config();
        cfg.architecture = arch;
        auto a = train(text, cfg);
        auto b = train(text, cfg);
        const auto ta = a.model.input_table();
        const auto tb = b.model.input_table();
        auto da = ta.data();
        auto db = tb.data();
        CHECK(std::equal(da.begin(), da.end(), db.begin(), db.end()));
        cfg.seed = 4;
        auto c = train(text, cfg);
        const auto tc = c.model.input_table();
        auto dc = tc.data();
        CHECK(!std::equal(da.begin(), da.end(), dc.begin(), dc.end()));
    }
}

TEST_CASE("order-aware pairs see sentence direction, classic pairs do not") {
    std::vector<std::vector<std::string_view>> forward, reversed;
    for (int i = 0; i < 5; ++i) {
        forward.push_back({"x", "r", "y"});
        forward.push_back({"x", "s", "z"});
    }
    for (auto s : forward) {
        std::reverse(s.begin(), s.end());
        reversed.push_back(s);
    }
    auto log_pairs = [](const TextCorpus& corpus, bool order_aware) {
        TrainConfig cfg = small_config();
        cfg.epochs = 1;
        cfg.order_aware = order_aware;
        std::multiset<std::tuple<std::string, std::string, std::size_t>> pairs;
        TrainOptions opts;
        const Vocabulary* vocab = nullptr;
        std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> raw;
        opts.observer = [&](std::uint32_t c, std::uint32_t t, std::size_t m) { raw.emplace_back(c, t, m); };
        auto result = train(corpus, cfg, opts);
        vocab = &result.model.vocab();
        for (auto [c, t, m] : raw) pairs.emplace(vocab->token(c), vocab->token(t), m);
        return pairs;
    };
    auto fwd = corpus_of(forward);
    auto rev = corpus_of(reversed);
    CHECK(log_pairs(fwd, false) == log_pairs(rev, false));
    CHECK(log_pairs(fwd, true) != log_pairs(rev, true));
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.order_aware = true;
    cfg.architecture = Architecture::Cbow;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.dim = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    TrainConfig j = TrainConfig::from_json(small_config().to_json());
    CHECK(j.to_json() == small_config().to_json());
}

TEST_CASE("embedding text save and load") {
    auto vocab = Vocabulary::from_counts({{"a", 2}, {"b", 1}});
    TrainConfig cfg = small_config();
    cfg.dim = 3;
    EmbeddingMatrix m(vocab, cfg);
    Rng rng(1);
    grand::testing::randomize(m, rng);
    std::stringstream ss;
    save_embeddings(m, ss);
    const std::string text = ss.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    auto back = load_embeddings(ss, cfg);
    double max_abs = 0, max_diff = 0;
    for (std::uint32_t t = 0; t < 2; ++t) {
        REQUIRE(back.vocab().token(t) == m.vocab().token(t));
        for (std::size_t k = 0; k < 3; ++k) {
            max_abs = std::max(max_abs, std::abs(m.input(t)[k]));
            max_diff = std::max(max_diff, std::abs(m.input(t)[k] - back.input(t)[k]));
        }
    }
    CHECK(max_diff <= 1e-6 * max_abs);

    std::istringstream short_file("5 2\na 1 2\nb 1 2\nc 1 2\nd 1 2\n");
    CHECK_THROWS_AS(load_embeddings(short_file), FormatError);
    std::istringstream wrong_dim("1 2\na 1 2\n");
    CHECK_THROWS_AS(load_embeddings(wrong_dim, cfg), DimMismatch);
}

TEST_CASE("embedding files carry a config sidecar") {
    grand::testing::TempDir dir;
    auto corpus = corpus_of({{"A", "p", "B"}, {"B", "q", "A"}});
    auto result = train(corpus, small_config());
    const auto path = dir / "emb.txt";
    save_embeddings(result.model, path);
    CHECK(std::filesystem::exists(sidecar_path(path)));
    auto back = load_embeddings(path);
    CHECK(back.config().to_json() == small_config().to_json());
    CHECK(back.vocab().size() == 4);
}
