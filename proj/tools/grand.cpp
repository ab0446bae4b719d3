#include "grand/classify.hpp"
#include "grand/dataset.hpp"
#include "grand/embed.hpp"
#include "grand/error.hpp"
#include "grand/eval.hpp"
#include "grand/graph.hpp"
#include "grand/pipeline.hpp"
#include "grand/represent.hpp"
#include "grand/synthetic.hpp"
#include "grand/util.hpp"
#include "grand/walks.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <omp.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool deterministic = false;

    grand::RuntimeOverrides resolve() const {
        auto o = grand::env_overrides();
        if (seed) o.seed = seed;
        if (threads) o.threads = threads;
        if (deterministic) o.deterministic = true;
        return o;
    }
};

void emit_json(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw grand::IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

struct SplitArgs {
    std::string labels;
    std::string hierarchy;
    std::string regime = "multiclass";
    std::optional<std::size_t> label_level;
    std::optional<std::uint64_t> split_seed;
    std::string train, validation, test;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--labels", labels, "Labels TSV (iri, classes)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--hierarchy", hierarchy, "Hierarchy TSV (class, parent)")->check(CLI::ExistingFile);
        cmd->add_option("--regime", regime, "multiclass | multilabel | hierarchical");
        cmd->add_option("--label-level", label_level, "Project labels to this hierarchy level");
        cmd->add_option("--split-seed", split_seed, "Seed of the automatic 50/30/20 split");
        cmd->add_option("--train-split", train, "Explicit train entity list")->check(CLI::ExistingFile);
        cmd->add_option("--validation-split", validation, "Explicit validation entity list")
            ->check(CLI::ExistingFile);
        cmd->add_option("--test-split", test, "Explicit test entity list")->check(CLI::ExistingFile);
    }

    grand::LabeledDataset load(std::uint64_t seed) const {
        grand::DatasetOptions opts;
        opts.regime = grand::parse_regime(regime);
        opts.label_level = label_level;
        opts.split_seed = split_seed.value_or(grand::derive_seed(seed, 300));
        if (!train.empty()) opts.train_entities = grand::read_entity_list(train);
        if (!validation.empty()) opts.validation_entities = grand::read_entity_list(validation);
        if (!test.empty()) opts.test_entities = grand::read_entity_list(test);
        std::optional<fs::path> h;
        if (!hierarchy.empty()) h = hierarchy;
        return grand::load_dataset(labels, h, opts);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entity typing from knowledge-graph walk embeddings"};
    app.set_version_flag("--version", std::string(grand::tool_version()));
    app.require_subcommand(1);
    Globals globals;
    app.add_option("--seed", globals.seed, "Global seed (env GRAND_SEED)");
    app.add_option("--threads", globals.threads, "Worker threads, 0 for the OpenMP default (env GRAND_THREADS)");
    app.add_flag("--deterministic", globals.deterministic,
                 "Single-worker embedding and classifier training (env GRAND_DETERMINISTIC)");

    // walk
    auto* walk = app.add_subcommand("walk", "Generate a walk corpus from an N-Triples graph");
    std::string walk_graph, walk_out = "-", walk_strategy = "classic";
    grand::WalkConfig walk_cfg;
    bool no_dedup = false, strict = false;
    std::vector<std::string> excluded;
    walk->add_option("--graph", walk_graph, "N-Triples file, optionally gzipped")->required()->check(CLI::ExistingFile);
    walk->add_option("--depth", walk_cfg.depth, "Hops per walk");
    walk->add_option("--walks", walk_cfg.walks_per_entity, "Walks per entity");
    walk->add_option("--strategy", walk_strategy, "classic | entity | predicate");
    walk->add_option("--exclude-predicate", excluded, "Predicate IRI to drop (repeatable)");
    walk->add_flag("--no-dedup", no_dedup, "Keep duplicate walks");
    walk->add_flag("--strict", strict, "Reject malformed lines and blank nodes");
    walk->add_option("--out", walk_out, "Corpus file");

    // embed
    auto* embed = app.add_subcommand("embed", "Train embeddings on a walk corpus");
    std::string embed_corpus, embed_out;
    grand::TrainConfig embed_cfg;
    bool cbow = false;
    embed->add_option("--corpus", embed_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    embed->add_option("--dim", embed_cfg.dim, "Vector size");
    embed->add_option("--epochs", embed_cfg.epochs, "Passes over the corpus");
    embed->add_option("--window", embed_cfg.window, "Context window");
    embed->add_option("--negatives", embed_cfg.negatives, "Negative samples per pair");
    embed->add_option("--lr", embed_cfg.lr_initial, "Initial learning rate");
    embed->add_option("--min-count", embed_cfg.min_count, "Minimum token count");
    embed->add_option("--subsample", embed_cfg.subsample, "Frequent-token subsampling threshold");
    embed->add_flag("--order-aware", embed_cfg.order_aware, "One output matrix per context offset");
    embed->add_flag("--cbow", cbow, "CBOW instead of skip-gram");
    embed->add_option("--out", embed_out, "Vector file (a .json sidecar is written next to it)")->required();

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Combine vector sources per entity");
    std::vector<std::string> fuse_parts;
    std::string fuse_entities, fuse_population, fuse_descriptions, fuse_mode = "concat", fuse_out;
    std::size_t fuse_pca_dim = 200;
    bool fuse_l2 = false;
    fuse->add_option("--part", fuse_parts, "name=vector_file, in concatenation order (repeatable)")->required();
    fuse->add_option("--descriptions", fuse_descriptions, "Description vectors TSV, usable as part 'description'")
        ->check(CLI::ExistingFile);
    fuse->add_option("--entities", fuse_entities, "Entities to emit (labels TSV or IRI list)")
        ->required()
        ->check(CLI::ExistingFile);
    fuse->add_option("--population", fuse_population, "Entities the global PCA is fitted on")
        ->check(CLI::ExistingFile);
    fuse->add_option("--mode", fuse_mode, "concat | lpca | gpca");
    fuse->add_option("--pca-dim", fuse_pca_dim, "PCA output size");
    fuse->add_flag("--l2", fuse_l2, "L2-normalise each part before concatenation");
    fuse->add_option("--out", fuse_out, "Fused vector file (a .json sidecar is written next to it)")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on fused features");
    std::string train_features, train_out, train_weights;
    SplitArgs train_split;
    grand::TrainSpec train_spec;
    std::vector<std::size_t> report_epochs;
    std::optional<std::size_t> patience;
    bool linear = false;
    train_cmd->add_option("--features", train_features, "Fused vector file")->required()->check(CLI::ExistingFile);
    train_split.add_to(train_cmd);
    train_cmd->add_option("--epochs", train_spec.epochs, "Training epochs");
    train_cmd->add_option("--batch-size", train_spec.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", train_spec.adam.lr, "Adam learning rate");
    train_cmd->add_option("--hidden", train_spec.hidden, "Hidden layer sizes");
    train_cmd->add_flag("--linear", linear, "No hidden layers");
    train_cmd->add_option("--patience", patience, "Early-stopping patience in epochs");
    train_cmd->add_option("--weight-report", report_epochs, "Epochs at which to report weight-group fractions");
    train_cmd->add_option("--weights-out", train_weights, "Weight report JSON (default stdout)");
    train_cmd->add_option("--out", train_out, "Checkpoint file")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    std::string eval_model, eval_features, eval_out = "-";
    SplitArgs eval_split;
    eval_cmd->add_option("--model", eval_model, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--features", eval_features, "Fused vector file")->required()->check(CLI::ExistingFile);
    eval_split.add_to(eval_cmd);
    eval_cmd->add_option("--out", eval_out, "Metrics JSON (default stdout)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run every stage of an experiment config");
    std::string run_config, run_output;
    run_cmd->add_option("--config", run_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--output-dir", run_output, "Override the configured output directory");

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "Write the synthetic typed graph and its experiment config");
    std::string gen_out;
    grand::SyntheticSpec gen_spec;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--per-subtype", gen_spec.per_subtype, "Entities per fine class");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto overrides = globals.resolve();
        const std::uint64_t seed = overrides.seed.value_or(1);
        const int threads = overrides.threads.value_or(0);
        const bool deterministic = overrides.deterministic.value_or(false);
        if (threads > 0) omp_set_num_threads(threads);

        if (*walk) {
            walk_cfg.strategy = grand::parse_walk_strategy(walk_strategy);
            walk_cfg.dedup = !no_dedup;
            walk_cfg.seed = grand::derive_seed(seed, 1);
            walk_cfg.threads = threads;
            auto parsed = grand::parse_ntriples_file(walk_graph, strict ? grand::ParseMode::Strict
                                                                        : grand::ParseMode::Lenient);
            std::cerr << parsed.report.to_json().dump() << '\n';
            const std::unordered_set<std::string> ex(excluded.begin(), excluded.end());
            const auto g = grand::build_graph(parsed.triples, ex);
            const auto corpus = grand::generate_corpus(g, walk_cfg);
            if (walk_out == "-") {
                grand::write_corpus(corpus, g, std::cout);
            } else {
                std::ofstream out(walk_out);
                if (!out) throw grand::IoError("cannot write " + walk_out);
                grand::write_corpus(corpus, g, out);
            }
        } else if (*embed) {
            if (cbow) embed_cfg.architecture = grand::Architecture::Cbow;
            embed_cfg.seed = grand::derive_seed(seed, 100);
            embed_cfg.threads = deterministic ? 1 : (threads > 0 ? threads : omp_get_max_threads());
            std::ifstream in(embed_corpus);
            const auto corpus = grand::read_corpus(in);
            auto result = grand::train(corpus, embed_cfg);
            for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
                std::cerr << "epoch " << e + 1 << " loss " << grand::format_real(result.epoch_loss[e]) << '\n';
            grand::save_embeddings(result.model, fs::path(embed_out));
        } else if (*fuse) {
            std::map<std::string, grand::VectorTable> tables;
            grand::FusionSpec spec;
            spec.mode = grand::parse_fusion_mode(fuse_mode);
            spec.pca_dim = fuse_pca_dim;
            spec.l2_normalize = fuse_l2;
            for (const auto& p : fuse_parts) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) throw grand::Error("--part expects name=path, got '" + p + "'");
                const auto name = p.substr(0, eq);
                std::ifstream in(p.substr(eq + 1));
                if (!in) throw grand::IoError("cannot open " + p.substr(eq + 1));
                tables.emplace(name, grand::read_vector_text(in));
                spec.parts.push_back(name);
            }
            if (!fuse_descriptions.empty())
                tables.emplace("description", grand::load_description_vectors(fs::path(fuse_descriptions)).vectors);
            std::vector<grand::NamedSource> sources;
            for (const auto& name : spec.parts) {
                auto it = tables.find(name);
                if (it == tables.end()) throw grand::Error("no vectors for part '" + name + "'");
                sources.push_back({name, &it->second});
            }
            const auto entities = grand::read_entity_list(fuse_entities);
            std::vector<std::string> population;
            if (!fuse_population.empty()) population = grand::read_entity_list(fuse_population);
            const auto store = grand::build_fused_store(entities, spec, sources, population);
            grand::save_fused_store(store, fuse_out);
            if (store.missing_count) std::cerr << store.missing_count << " missing parts zero-filled\n";
        } else if (*train_cmd) {
            const auto ds = train_split.load(seed);
            const auto store = grand::load_fused_store(train_features);
            train_spec.seed = grand::derive_seed(seed, 200);
            train_spec.early_stop_patience = patience;
            if (linear) train_spec.hidden.clear();
            train_spec.parallel = !deterministic;
            grand::ClassifierSpec spec;
            spec.name = fs::path(train_out).stem().string();
            spec.regime = ds.regime;
            spec.label_level = train_split.label_level;
            spec.weight_report_epochs = report_epochs;
            const auto reports = grand::train_and_save(ds, store, spec, train_spec, train_out);
            json list = json::array();
            for (const auto& r : reports) list.push_back(r.to_json());
            if (!reports.empty() || !train_weights.empty()) emit_json(list, train_weights);
        } else if (*eval_cmd) {
            const auto ds = eval_split.load(seed);
            const auto store = grand::load_fused_store(eval_features);
            emit_json(grand::evaluate_checkpoint(ds, store.features, grand::load_checkpoint(eval_model)), eval_out);
        } else if (*run_cmd) {
            auto cfg = grand::ExperimentConfig::load(run_config);
            if (!run_output.empty()) cfg.output_dir = run_output;
            grand::apply_overrides(cfg, overrides);
            const auto result = grand::run(cfg, &std::cerr);
            std::cout << result.metrics.dump(2) << '\n';
        } else if (*gen) {
            gen_spec.seed = seed;
            grand::write_synthetic(grand::generate_synthetic(gen_spec), gen_out);
            emit_json(grand::synthetic_experiment(), (fs::path(gen_out) / "experiment.json").string());
        }
    } catch (const grand::StageError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
