#include "grand/pipeline.hpp"

#include "grand/error.hpp"
#include "grand/graph.hpp"
#include "grand/util.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <unordered_set>

#include <omp.h>

namespace grand {
namespace fs = std::filesystem;
using nlohmann::json;

#ifndef GRAND_VERSION
#define GRAND_VERSION "0.0.0"
#endif

std::string_view tool_version() { return GRAND_VERSION; }

namespace {

std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return base / j[key].get<std::string>();
}

json path_or_null(const std::optional<fs::path>& p) {
    return p ? json(p->generic_string()) : json(nullptr);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("invalid JSON in " + path.string());
    return j;
}

fs::path corpus_path(const fs::path& dir, WalkStrategy s) {
    return dir / ("corpus_" + std::string(to_string(s)) + ".txt");
}
fs::path embedding_path(const fs::path& dir, const std::string& variant) {
    return dir / ("emb_" + variant + ".txt");
}
fs::path fused_path(const fs::path& dir, const std::string& feature) {
    return dir / ("fused_" + feature + ".txt");
}
fs::path model_path(const fs::path& dir, const std::string& clf) {
    return dir / ("model_" + clf + ".ckpt");
}

const FeatureSpec& feature_named(const ExperimentConfig& cfg, const std::string& name) {
    for (const auto& f : cfg.features)
        if (f.name == name) return f;
    throw Error("unknown feature set '" + name + "'");
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

std::size_t index_in(const std::vector<ClassId>& list, ClassId c) {
    return static_cast<std::size_t>(std::find(list.begin(), list.end(), c) - list.begin());
}

}  // namespace

// ---- configuration ---------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base) {
    ExperimentConfig c;
    c.graph = base / j.at("graph").get<std::string>();
    c.exclude_predicates = j.value("exclude_predicates", c.exclude_predicates);
    c.labels = base / j.at("labels").get<std::string>();
    c.hierarchy = optional_path(j, "hierarchy", base);
    c.descriptions = optional_path(j, "descriptions", base);
    if (j.contains("split")) {
        const auto& s = j["split"];
        c.train_split = optional_path(s, "train", base);
        c.validation_split = optional_path(s, "validation", base);
        c.test_split = optional_path(s, "test", base);
        if (s.contains("seed") && !s["seed"].is_null()) c.split_seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("walks")) {
        const auto& w = j["walks"];
        c.walks.depth = w.value("depth", c.walks.depth);
        c.walks.walks_per_entity = w.value("walks_per_entity", c.walks.walks_per_entity);
        c.walks.dedup = w.value("dedup", c.walks.dedup);
    }
    json defaults = json::object();
    json variants = json::array({json{{"name", "classic"}}});
    if (j.contains("embeddings")) {
        defaults = j["embeddings"].value("defaults", defaults);
        variants = j["embeddings"].value("variants", variants);
    }
    for (const auto& v : variants) {
        json merged = defaults;
        merged.update(v);
        VariantSpec spec;
        spec.name = merged.at("name").get<std::string>();
        spec.strategy = parse_walk_strategy(merged.value("strategy", std::string("classic")));
        spec.train = TrainConfig::from_json(merged);
        c.variants.push_back(std::move(spec));
    }
    for (const auto& f : j.value("features", json::array()))
        c.features.push_back({f.at("name").get<std::string>(), FusionSpec::from_json(f)});
    for (const auto& k : j.value("classifiers", json::array())) {
        ClassifierSpec spec;
        spec.name = k.at("name").get<std::string>();
        spec.features = k.at("features").get<std::string>();
        spec.regime = parse_regime(k.value("regime", std::string("multiclass")));
        if (k.contains("label_level") && !k["label_level"].is_null())
            spec.label_level = k["label_level"].get<std::size_t>();
        spec.weight_report_epochs = k.value("weight_report_epochs", spec.weight_report_epochs);
        if (k.contains("hidden") && !k["hidden"].is_null())
            spec.hidden = k["hidden"].get<std::vector<std::size_t>>();
        c.classifiers.push_back(std::move(spec));
    }
    if (j.contains("train")) c.train = TrainSpec::from_json(j["train"]);
    c.output_dir = base / j.value("output_dir", std::string("out"));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.deterministic = j.value("deterministic", c.deterministic);
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    return from_json(read_json(path), path.parent_path());
}

json ExperimentConfig::to_json() const {
    json variants_j = json::array();
    for (const auto& v : variants) {
        auto t = v.train.to_json();
        t["name"] = v.name;
        t["strategy"] = std::string(to_string(v.strategy));
        variants_j.push_back(std::move(t));
    }
    json features_j = json::array();
    for (const auto& f : features) {
        auto t = f.fusion.to_json();
        t["name"] = f.name;
        features_j.push_back(std::move(t));
    }
    json classifiers_j = json::array();
    for (const auto& k : classifiers) {
        classifiers_j.push_back({{"name", k.name},
                                 {"features", k.features},
                                 {"regime", std::string(to_string(k.regime))},
                                 {"label_level", k.label_level ? json(*k.label_level) : json(nullptr)},
                                 {"weight_report_epochs", k.weight_report_epochs},
                                 {"hidden", k.hidden ? json(*k.hidden) : json(nullptr)}});
    }
    return {{"graph", graph.generic_string()},
            {"exclude_predicates", exclude_predicates},
            {"labels", labels.generic_string()},
            {"hierarchy", path_or_null(hierarchy)},
            {"descriptions", path_or_null(descriptions)},
            {"split",
             {{"train", path_or_null(train_split)},
              {"validation", path_or_null(validation_split)},
              {"test", path_or_null(test_split)},
              {"seed", split_seed ? json(*split_seed) : json(nullptr)}}},
            {"walks",
             {{"depth", walks.depth}, {"walks_per_entity", walks.walks_per_entity}, {"dedup", walks.dedup}}},
            {"embeddings", {{"variants", variants_j}}},
            {"features", features_j},
            {"classifiers", classifiers_j},
            {"train", train.to_json()},
            {"output_dir", output_dir.generic_string()},
            {"seed", seed},
            {"threads", threads},
            {"deterministic", deterministic}};
}

void ExperimentConfig::validate() const {
    auto require_file = [](const fs::path& p, const char* what) {
        if (!fs::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
    };
    require_file(graph, "graph");
    require_file(labels, "labels");
    if (hierarchy) require_file(*hierarchy, "hierarchy");
    if (descriptions) require_file(*descriptions, "description vectors");
    for (const auto* split : {&train_split, &validation_split, &test_split})
        if (*split) require_file(**split, "split file");
    walks.validate();
    if (variants.empty()) throw Error("no embedding variants configured");

    std::set<std::string> parts;
    for (const auto& v : variants) {
        v.train.validate();
        if (v.name == "description") throw Error("variant name 'description' is reserved");
        if (!parts.insert(v.name).second) throw Error("duplicate variant '" + v.name + "'");
    }
    if (descriptions) parts.insert("description");
    std::set<std::string> feature_names;
    for (const auto& f : features) {
        if (!feature_names.insert(f.name).second) throw Error("duplicate feature set '" + f.name + "'");
        if (f.fusion.parts.empty()) throw Error("feature set '" + f.name + "' has no parts");
        for (const auto& p : f.fusion.parts)
            if (!parts.count(p)) throw Error("feature set '" + f.name + "' references unknown part '" + p + "'");
    }
    std::set<std::string> clf_names;
    for (const auto& k : classifiers) {
        if (!clf_names.insert(k.name).second) throw Error("duplicate classifier '" + k.name + "'");
        const auto& f = feature_named(*this, k.features);
        if ((k.regime == Regime::Hierarchical || k.label_level) && !hierarchy)
            throw Error("classifier '" + k.name + "' needs a hierarchy");
        if (!k.weight_report_epochs.empty() &&
            (k.regime == Regime::Hierarchical || f.fusion.mode != FusionMode::Concat))
            throw Error("weight reports need a flat classifier over concatenated features ('" + k.name + "')");
    }
}

RuntimeOverrides env_overrides() {
    RuntimeOverrides o;
    if (const char* s = std::getenv("GRAND_SEED"); s && *s) o.seed = std::stoull(s);
    if (const char* s = std::getenv("GRAND_THREADS"); s && *s) o.threads = std::stoi(s);
    if (const char* s = std::getenv("GRAND_DETERMINISTIC"); s && *s) {
        const std::string v(s);
        o.deterministic = !(v == "0" || v == "false" || v == "no");
    }
    return o;
}

void apply_overrides(ExperimentConfig& cfg, const RuntimeOverrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.deterministic) cfg.deterministic = *o.deterministic;
}

// ---- manifest --------------------------------------------------------------

const StageRecord* RunManifest::find(std::string_view stage) const {
    for (const auto& s : stages)
        if (s.name == stage) return &s;
    return nullptr;
}

json RunManifest::to_json() const {
    json stages_j = json::array();
    for (const auto& s : stages)
        stages_j.push_back({{"name", s.name},
                            {"key", s.key},
                            {"inputs", s.inputs},
                            {"outputs", s.outputs},
                            {"seconds", s.seconds},
                            {"skipped", s.skipped}});
    return {{"tool_version", tool_version}, {"config_hash", config_hash}, {"stages", stages_j}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.tool_version = j.value("tool_version", std::string());
    m.config_hash = j.value("config_hash", std::string());
    for (const auto& s : j.value("stages", json::array())) {
        StageRecord r;
        r.name = s.at("name").get<std::string>();
        r.key = s.at("key").get<std::string>();
        r.inputs = s.value("inputs", r.inputs);
        r.outputs = s.value("outputs", r.outputs);
        r.seconds = s.value("seconds", 0.0);
        r.skipped = s.value("skipped", false);
        m.stages.push_back(std::move(r));
    }
    return m;
}

// ---- classifier plumbing ---------------------------------------------------

LabeledDataset classifier_dataset(const ExperimentConfig& cfg, const ClassifierSpec& spec) {
    DatasetOptions opts;
    opts.regime = spec.regime;
    opts.label_level = spec.label_level;
    opts.split_seed = cfg.split_seed.value_or(derive_seed(cfg.seed, 300));
    if (cfg.train_split) opts.train_entities = read_entity_list(*cfg.train_split);
    if (cfg.validation_split) opts.validation_entities = read_entity_list(*cfg.validation_split);
    if (cfg.test_split) opts.test_entities = read_entity_list(*cfg.test_split);
    return load_dataset(cfg.labels, cfg.hierarchy, opts);
}

std::vector<WeightReport> train_and_save(const LabeledDataset& ds, const FusedStore& store,
                                         const ClassifierSpec& spec, const TrainSpec& train,
                                         const fs::path& checkpoint) {
    const auto train_data = to_training_data(ds.train, store.features, ds.num_classes());
    const auto val_data = to_training_data(ds.validation, store.features, ds.num_classes());
    const TrainingData* val = val_data.size() ? &val_data : nullptr;

    json meta{{"regime", std::string(to_string(ds.regime))},
              {"classifier", spec.name},
              {"class_names", ds.class_names},
              {"feature_dim", store.dim()}};
    std::vector<WeightReport> reports;
    if (ds.regime == Regime::Hierarchical) {
        const auto& h = *ds.hierarchy;
        auto lpl = train_lpl(train_data, val, h, OutputHead::Softmax, train);
        json levels = json::array();
        std::vector<Mlp> models;
        for (auto& lm : lpl.levels) {
            levels.push_back({{"level", lm.level}, {"classes", lm.classes}});
            models.push_back(std::move(lm.model));
        }
        meta["hierarchy_digest"] = h.digest();
        meta["levels"] = levels;
        save_checkpoint(checkpoint, meta, models);
        return reports;
    }
    const auto head = ds.regime == Regime::MultiLabel ? OutputHead::Sigmoid : OutputHead::Softmax;
    EpochCallback cb;
    if (!spec.weight_report_epochs.empty()) {
        cb = [&](std::size_t epoch, const Mlp& m) {
            const auto& want = spec.weight_report_epochs;
            if (std::find(want.begin(), want.end(), epoch) != want.end())
                reports.push_back(weight_group_analysis(m, store.segments, epoch));
        };
    }
    auto result = train_classifier(train_data, val, head, train, cb);
    meta["selected_epoch"] = result.selected_epoch;
    std::vector<Mlp> models{std::move(result.model)};
    save_checkpoint(checkpoint, meta, models);
    return reports;
}

json evaluate_checkpoint(const LabeledDataset& ds, const VectorTable& features, const Checkpoint& ckpt) {
    const auto test = to_training_data(ds.test, features, ds.num_classes());
    const auto regime = parse_regime(ckpt.meta.at("regime").get<std::string>());
    if (regime != ds.regime) throw Error("checkpoint regime does not match the dataset");
    if (ckpt.meta.at("class_names") != json(ds.class_names))
        throw Error("checkpoint classes do not match the dataset");

    if (regime != Regime::Hierarchical) {
        if (ckpt.models.size() != 1) throw FormatError("flat checkpoint must hold one model");
        PredictionSet p;
        for (std::size_t i = 0; i < test.size(); ++i) p.add(predict(ckpt.models[0], test.row(i)), test.labels[i]);
        auto out = evaluate(p, ds.num_classes()).to_json(ds.class_names);
        out["regime"] = std::string(to_string(regime));
        out["test_size"] = test.size();
        return out;
    }

    const auto& h = *ds.hierarchy;
    if (ckpt.meta.value("hierarchy_digest", std::string()) != h.digest())
        throw InconsistentHierarchy("checkpoint was trained on a different hierarchy");
    LplModel lpl;
    const auto& levels = ckpt.meta.at("levels");
    if (levels.size() != ckpt.models.size()) throw FormatError("level metadata does not match models");
    for (std::size_t i = 0; i < levels.size(); ++i)
        lpl.levels.push_back({levels[i].at("level").get<std::size_t>(),
                              levels[i].at("classes").get<std::vector<ClassId>>(), ckpt.models[i]});

    std::vector<PredictionSet> per_level(h.depth());
    std::size_t exact_paths = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto path = predict_hierarchical(lpl, h, test.row(i));
        const ClassId gold = test.labels[i].front();
        std::vector<ClassId> gold_path;
        for (std::size_t l = 1; l <= h.level(gold); ++l) gold_path.push_back(*h.ancestor_at_level(gold, l));
        exact_paths += path == gold_path;
        for (std::size_t l = 1; l <= h.depth(); ++l) {
            auto g = h.ancestor_at_level(gold, l);
            if (!g) continue;
            const auto& cls = h.classes_at_level(l);
            // A path that stops above level l predicts no class there.
            LabelSet pred;
            if (path.size() >= l) pred.push_back(static_cast<ClassId>(index_in(cls, path[l - 1])));
            per_level[l - 1].add(std::move(pred), {static_cast<ClassId>(index_in(cls, *g))});
        }
    }
    json levels_j = json::array();
    for (std::size_t l = 1; l <= h.depth(); ++l) {
        std::vector<std::string> names;
        for (auto c : h.classes_at_level(l)) names.push_back(h.name(c));
        auto m = evaluate(per_level[l - 1], names.size()).to_json(names);
        m["level"] = l;
        m["test_size"] = per_level[l - 1].size();
        levels_j.push_back(std::move(m));
    }
    return {{"regime", "hierarchical"},
            {"levels", levels_j},
            {"path_accuracy", test.size() ? static_cast<double>(exact_paths) / test.size() : 1.0},
            {"test_size", test.size()}};
}

// ---- stage runner ----------------------------------------------------------

namespace {

class StageRunner {
public:
    StageRunner(fs::path dir, std::string config_hash, std::ostream* log)
        : dir_(std::move(dir)), log_(log) {
        current_.tool_version = std::string(tool_version());
        current_.config_hash = std::move(config_hash);
        if (fs::exists(manifest_path())) {
            try {
                previous_ = RunManifest::from_json(read_json(manifest_path()));
            } catch (const std::exception&) {
                previous_.reset();  // unreadable manifest: run everything
            }
        }
    }

    void stage(const std::string& name, const json& params, const std::vector<fs::path>& inputs,
               const std::vector<fs::path>& outputs, const std::function<void()>& body) {
        const auto start = std::chrono::steady_clock::now();
        StageRecord rec;
        rec.name = name;
        for (const auto& p : inputs) rec.inputs[label(p)] = sha256_file(p);
        rec.key = sha256_hex(name + '\n' + params.dump() + '\n' + json(rec.inputs).dump());

        if (!upstream_ran_ && reusable(rec, outputs)) {
            rec.outputs = previous_->find(name)->outputs;
            rec.skipped = true;
            if (log_) *log_ << "[" << name << "] up to date, skipped\n";
        } else {
            if (log_) *log_ << "[" << name << "] running\n";
            try {
                body();
            } catch (const StageError&) {
                throw;
            } catch (const std::exception& e) {
                throw StageError(name, e.what());
            }
            for (const auto& p : outputs) rec.outputs[label(p)] = sha256_file(p);
            upstream_ran_ = true;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (log_) *log_ << "[" << name << "] " << format_real(rec.seconds) << " s\n";
        current_.stages.push_back(std::move(rec));
        write_json(manifest_path(), current_.to_json());
    }

    const RunManifest& manifest() const { return current_; }

private:
    fs::path manifest_path() const { return dir_ / "manifest.json"; }

    std::string label(const fs::path& p) const {
        auto rel = p.lexically_relative(dir_);
        if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        return p.generic_string();
    }

    bool reusable(const StageRecord& rec, const std::vector<fs::path>& outputs) const {
        if (!previous_) return false;
        const auto* prev = previous_->find(rec.name);
        if (!prev || prev->key != rec.key || prev->outputs.size() != outputs.size()) return false;
        for (const auto& p : outputs) {
            auto it = prev->outputs.find(label(p));
            if (it == prev->outputs.end() || !fs::exists(p) || sha256_file(p) != it->second) return false;
        }
        return true;
    }

    fs::path dir_;
    std::ostream* log_;
    std::optional<RunManifest> previous_;
    RunManifest current_;
    bool upstream_ran_ = false;
};

}  // namespace

RunResult run(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    const auto config_json = cfg.to_json();
    StageRunner runner(dir, sha256_hex(config_json.dump()), log);

    const std::vector<WalkStrategy> strategies{WalkStrategy::Classic, WalkStrategy::EntityOnly,
                                               WalkStrategy::PredicateOnly};
    const fs::path entities_file = dir / "entities.txt";
    const fs::path parse_report_file = dir / "parse_report.json";

    // walk
    {
        WalkConfig wc = cfg.walks;
        wc.seed = derive_seed(cfg.seed, 1);
        wc.threads = cfg.threads;
        std::vector<fs::path> outputs{entities_file, parse_report_file};
        for (auto s : strategies) outputs.push_back(corpus_path(dir, s));
        json params{{"walks", config_json["walks"]},
                    {"seed", wc.seed},
                    {"exclude_predicates", cfg.exclude_predicates}};
        runner.stage("walk", params, {cfg.graph}, outputs, [&] {
            auto parsed = parse_ntriples_file(cfg.graph);
            std::unordered_set<std::string> excluded(cfg.exclude_predicates.begin(),
                                                     cfg.exclude_predicates.end());
            const auto g = build_graph(parsed.triples, excluded);
            write_json(parse_report_file, parsed.report.to_json());
            {
                std::ofstream out(entities_file);
                for (std::uint32_t e = 0; e < g.num_entities(); ++e) out << g.entity_iri(EntityId{e}) << '\n';
            }
            const auto corpora = generate_all_corpora(g, wc);
            const WalkCorpus* parts[] = {&corpora.classic, &corpora.entity, &corpora.predicate};
            for (std::size_t i = 0; i < strategies.size(); ++i) {
                std::ofstream out(corpus_path(dir, strategies[i]));
                if (!out) throw IoError("cannot write " + corpus_path(dir, strategies[i]).string());
                write_corpus(*parts[i], g, out);
            }
            if (log)
                *log << "[walk] " << g.num_entities() << " entities, " << corpora.classic.walks.size()
                     << " walks\n";
        });
    }

    // embed
    {
        std::vector<fs::path> inputs, outputs;
        for (auto s : strategies) inputs.push_back(corpus_path(dir, s));
        json params = json::array();
        std::vector<TrainConfig> configs;
        for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
            const auto& v = cfg.variants[i];
            TrainConfig t = v.train;
            t.seed = derive_seed(cfg.seed, 100 + i);
            t.threads = cfg.deterministic ? 1 : (cfg.threads > 0 ? cfg.threads : omp_get_max_threads());
            configs.push_back(t);
            auto p = t.to_json();
            p["name"] = v.name;
            p["strategy"] = std::string(to_string(v.strategy));
            params.push_back(std::move(p));
            outputs.push_back(embedding_path(dir, v.name));
            outputs.push_back(sidecar_path(embedding_path(dir, v.name)));
        }
        runner.stage("embed", params, inputs, outputs, [&] {
            for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
                const auto& v = cfg.variants[i];
                std::ifstream in(corpus_path(dir, v.strategy));
                if (!in) throw IoError("cannot open " + corpus_path(dir, v.strategy).string());
                const auto corpus = read_corpus(in);
                auto result = train(corpus, configs[i]);
                save_embeddings(result.model, embedding_path(dir, v.name));
                if (log) {
                    *log << "[embed] " << v.name << " loss";
                    for (double l : result.epoch_loss) *log << ' ' << format_real(l);
                    *log << '\n';
                }
            }
        });
    }

    // fuse
    {
        std::vector<fs::path> inputs{cfg.labels, entities_file}, outputs;
        for (const auto& v : cfg.variants) inputs.push_back(embedding_path(dir, v.name));
        if (cfg.descriptions) inputs.push_back(*cfg.descriptions);
        json params = config_json["features"];
        for (const auto& f : cfg.features) {
            outputs.push_back(fused_path(dir, f.name));
            outputs.push_back(sidecar_path(fused_path(dir, f.name)));
        }
        runner.stage("fuse", params, inputs, outputs, [&] {
            std::map<std::string, VectorTable> tables;
            auto table = [&](const std::string& part) -> const VectorTable* {
                if (auto it = tables.find(part); it != tables.end()) return &it->second;
                VectorTable t;
                if (part == "description") {
                    t = load_description_vectors(*cfg.descriptions).vectors;
                } else {
                    std::ifstream in(embedding_path(dir, part));
                    if (!in) throw IoError("cannot open " + embedding_path(dir, part).string());
                    t = read_vector_text(in);
                }
                return &tables.emplace(part, std::move(t)).first->second;
            };
            std::vector<std::string> labeled;
            for (const auto& [iri, classes] : read_labels(cfg.labels)) labeled.push_back(iri);
            std::sort(labeled.begin(), labeled.end());
            const auto population = read_lines(entities_file);
            for (const auto& f : cfg.features) {
                std::vector<NamedSource> sources;
                for (const auto& part : f.fusion.parts) sources.push_back({part, table(part)});
                const auto store = build_fused_store(labeled, f.fusion, sources, population);
                save_fused_store(store, fused_path(dir, f.name));
                if (log && store.missing_count)
                    *log << "[fuse] " << f.name << ": " << store.missing_count << " missing parts zero-filled\n";
            }
        });
    }

    // train
    const fs::path weights_file = dir / "weights.json";
    {
        std::vector<fs::path> inputs{cfg.labels}, outputs{weights_file};
        if (cfg.hierarchy) inputs.push_back(*cfg.hierarchy);
        for (const auto* split : {&cfg.train_split, &cfg.validation_split, &cfg.test_split})
            if (*split) inputs.push_back(**split);
        for (const auto& f : cfg.features) inputs.push_back(fused_path(dir, f.name));
        for (const auto& k : cfg.classifiers) outputs.push_back(model_path(dir, k.name));
        json params{{"classifiers", config_json["classifiers"]},
                    {"train", config_json["train"]},
                    {"split_seed", cfg.split_seed.value_or(derive_seed(cfg.seed, 300))},
                    {"seed", cfg.seed},
                    {"deterministic", cfg.deterministic}};
        runner.stage("train", params, inputs, outputs, [&] {
            json weights = json::object();
            std::map<std::string, FusedStore> stores;
            for (std::size_t i = 0; i < cfg.classifiers.size(); ++i) {
                const auto& k = cfg.classifiers[i];
                auto it = stores.find(k.features);
                if (it == stores.end())
                    it = stores.emplace(k.features, load_fused_store(fused_path(dir, k.features))).first;
                const auto ds = classifier_dataset(cfg, k);
                TrainSpec t = cfg.train;
                t.seed = derive_seed(cfg.seed, 200 + i);
                if (k.hidden) t.hidden = *k.hidden;
                t.parallel = !cfg.deterministic;
                const auto reports = train_and_save(ds, it->second, k, t, model_path(dir, k.name));
                if (!reports.empty()) {
                    json list = json::array();
                    for (const auto& r : reports) list.push_back(r.to_json());
                    weights[k.name] = list;
                }
                if (log) *log << "[train] " << k.name << " done\n";
            }
            write_json(weights_file, weights);
        });
    }

    // eval
    const fs::path metrics_file = dir / "metrics.json";
    {
        std::vector<fs::path> inputs{cfg.labels};
        if (cfg.hierarchy) inputs.push_back(*cfg.hierarchy);
        for (const auto* split : {&cfg.train_split, &cfg.validation_split, &cfg.test_split})
            if (*split) inputs.push_back(**split);
        for (const auto& f : cfg.features) inputs.push_back(fused_path(dir, f.name));
        for (const auto& k : cfg.classifiers) inputs.push_back(model_path(dir, k.name));
        json params{{"classifiers", config_json["classifiers"]},
                    {"split_seed", cfg.split_seed.value_or(derive_seed(cfg.seed, 300))}};
        runner.stage("eval", params, inputs, {metrics_file}, [&] {
            json metrics = json::object();
            std::map<std::string, VectorTable> features;
            for (const auto& k : cfg.classifiers) {
                auto it = features.find(k.features);
                if (it == features.end())
                    it = features.emplace(k.features, load_fused_store(fused_path(dir, k.features)).features)
                             .first;
                const auto ds = classifier_dataset(cfg, k);
                metrics[k.name] = evaluate_checkpoint(ds, it->second, load_checkpoint(model_path(dir, k.name)));
            }
            write_json(metrics_file, {{"classifiers", metrics}});
        });
    }

    return {runner.manifest(), read_json(metrics_file), read_json(weights_file)};
}

}  // namespace grand
