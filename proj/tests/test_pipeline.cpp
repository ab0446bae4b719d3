#include "grand/error.hpp"
#include "grand/pipeline.hpp"
#include "grand/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace grand;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Scaled-down synthetic experiment that trains in well under a second per stage.
nlohmann::json small_experiment_json(const fs::path& dir, const std::string& out = "out") {
    SyntheticSpec spec;
    spec.per_subtype = 8;
    write_synthetic(generate_synthetic(spec), dir);
    auto j = synthetic_experiment(out);
    j["walks"]["walks_per_entity"] = 10;
    j["walks"]["depth"] = 3;
    j["embeddings"]["defaults"]["dim"] = 6;
    j["embeddings"]["defaults"]["epochs"] = 1;
    j["train"] = {{"epochs", 12}, {"hidden", {8}}, {"batch_size", 8}};
    return j;
}

ExperimentConfig small_experiment(const fs::path& dir, const std::string& out = "out") {
    return ExperimentConfig::from_json(small_experiment_json(dir, out), dir);
}

std::map<std::string, bool> skipped(const RunManifest& m) {
    std::map<std::string, bool> out;
    for (const auto& s : m.stages) out[s.name] = s.skipped;
    return out;
}

}  // namespace

TEST_CASE("synthetic generator shape") {
    SyntheticSpec spec;
    spec.per_subtype = 5;
    auto kg = generate_synthetic(spec);
    CHECK(kg.fine.size() == 30);
    CHECK(kg.coarse.size() == 30);
    CHECK(kg.hierarchy.size() == 9);
    auto h = TypeHierarchy::from_parents(kg.hierarchy);
    CHECK(h.depth() == 2);
    auto g = build_graph(kg.triples);
    for (const auto& [iri, classes] : kg.fine) {
        auto e = g.find_entity(iri);
        REQUIRE(e);
        CHECK(g.out_degree(*e) > 0);
    }
    CHECK(generate_synthetic(spec).triples == kg.triples);
    spec.per_subtype = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
}

TEST_CASE("full run, memoised rerun and metrics contract") {
    grand::testing::TempDir dir;
    auto cfg = small_experiment(dir.path());
    auto first = run(cfg);
    CHECK(first.metrics["classifiers"]["coarse"].contains("micro_f1"));
    CHECK(first.metrics["classifiers"]["hierarchical"].contains("levels"));
    for (const auto& s : first.manifest.stages) CHECK(!s.skipped);
    CHECK(first.manifest.stages.size() == 5);

    const auto& w = first.weights["coarse_weights"];
    REQUIRE(w.size() == 2);
    CHECK(w[0]["epoch"] == 1);
    CHECK(w[1]["epoch"] == 10);

    const auto metrics_bytes = slurp(cfg.output_dir / "metrics.json");
    auto second = run(cfg);
    for (const auto& s : second.manifest.stages) CHECK(s.skipped);
    CHECK(second.metrics == first.metrics);
    CHECK(slurp(cfg.output_dir / "metrics.json") == metrics_bytes);

    SUBCASE("corrupting an embedding reruns embed and everything after it") {
        std::ofstream(cfg.output_dir / "emb_entity_oa.txt", std::ios::app) << "junk\n";
        auto third = run(cfg);
        auto s = skipped(third.manifest);
        CHECK(s["walk"]);
        CHECK(!s["embed"]);
        CHECK(!s["fuse"]);
        CHECK(!s["train"]);
        CHECK(!s["eval"]);
    }
    SUBCASE("deleting the fused store leaves corpus and embeddings untouched") {
        const auto corpus = slurp(cfg.output_dir / "corpus_classic.txt");
        const auto emb = slurp(cfg.output_dir / "emb_classic_oa.txt");
        fs::remove(cfg.output_dir / "fused_concat.txt");
        auto third = run(cfg);
        auto s = skipped(third.manifest);
        CHECK(s["walk"]);
        CHECK(s["embed"]);
        CHECK(!s["fuse"]);
        CHECK(third.manifest.find("walk")->outputs == first.manifest.find("walk")->outputs);
        CHECK(third.manifest.find("embed")->outputs == first.manifest.find("embed")->outputs);
        CHECK(slurp(cfg.output_dir / "corpus_classic.txt") == corpus);
        CHECK(slurp(cfg.output_dir / "emb_classic_oa.txt") == emb);
        CHECK(fs::exists(cfg.output_dir / "fused_concat.txt"));
    }
    SUBCASE("changing a classifier setting keeps upstream stages") {
        cfg.train.epochs = 11;
        auto third = run(cfg);
        auto s = skipped(third.manifest);
        CHECK(s["walk"]);
        CHECK(s["embed"]);
        CHECK(s["fuse"]);
        CHECK(!s["train"]);
        CHECK(!s["eval"]);
    }
}

TEST_CASE("deterministic runs are byte-identical") {
    grand::testing::TempDir dir;
    auto a = small_experiment(dir.path(), "a");
    auto b = small_experiment(dir.path(), "b");
    a.deterministic = b.deterministic = true;
    run(a);
    run(b);
    for (const char* f : {"corpus_classic.txt", "corpus_entity.txt", "corpus_predicate.txt", "emb_classic_oa.txt",
                          "emb_entity_oa.txt", "emb_predicate_oa.txt", "metrics.json", "weights.json"})
        CHECK_MESSAGE(slurp(a.output_dir / f) == slurp(b.output_dir / f), f);
}

TEST_CASE("config round trip and validation") {
    grand::testing::TempDir dir;
    auto cfg = small_experiment(dir.path());
    CHECK_NOTHROW(cfg.validate());
    auto again = ExperimentConfig::from_json(cfg.to_json());
    CHECK(again.to_json() == cfg.to_json());
    CHECK(cfg.variants.size() == 3);
    CHECK(cfg.variants[0].train.dim == 6);
    CHECK(cfg.variants[0].train.order_aware);

    auto j = small_experiment_json(dir.path());
    j["features"][0]["parts"].push_back("no_such_variant");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j, dir.path()).validate(), Error);

    j = small_experiment_json(dir.path());
    j["classifiers"][0]["features"] = "missing";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j, dir.path()).validate(), Error);

    j = small_experiment_json(dir.path());
    j["graph"] = "absent.nt";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j, dir.path()).validate(), Error);

    j = small_experiment_json(dir.path());
    j.erase("hierarchy");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j, dir.path()).validate(), Error);
}

TEST_CASE("paper hyperparameters are the defaults") {
    ExperimentConfig cfg;
    CHECK(cfg.walks.depth == 8);
    CHECK(cfg.walks.walks_per_entity == 500);
    CHECK(TrainConfig{}.dim == 200);
    CHECK(TrainConfig{}.epochs == 5);
    CHECK(cfg.train.batch_size == 64);
    CHECK(cfg.train.epochs == 100);
}

TEST_CASE("environment overrides") {
    setenv("GRAND_SEED", "77", 1);
    setenv("GRAND_THREADS", "2", 1);
    setenv("GRAND_DETERMINISTIC", "1", 1);
    auto o = env_overrides();
    unsetenv("GRAND_SEED");
    unsetenv("GRAND_THREADS");
    unsetenv("GRAND_DETERMINISTIC");
    ExperimentConfig cfg;
    apply_overrides(cfg, o);
    CHECK(cfg.seed == 77);
    CHECK(cfg.threads == 2);
    CHECK(cfg.deterministic);
    CHECK(!env_overrides().seed);
}

TEST_CASE("stage failures carry the stage name") {
    grand::testing::TempDir dir;
    auto cfg = small_experiment(dir.path());
    std::ofstream(dir / "graph.nt", std::ios::trunc) << "";
    try {
        run(cfg);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "embed");
    }
}
