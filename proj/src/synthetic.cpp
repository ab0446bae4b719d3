#include "grand/synthetic.hpp"

#include "grand/error.hpp"
#include "grand/util.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace grand {
namespace {

const std::string kBase = "http://synthetic.grand/";

std::string numbered(std::string_view kind, std::size_t i) {
    auto digits = std::to_string(i);
    return kBase + std::string(kind) + "/" + std::string(4 - std::min<std::size_t>(4, digits.size()), '0') +
           digits;
}

std::string coarse_name(std::size_t c) { return "T" + std::to_string(c + 1); }
std::string fine_name(std::size_t c, std::size_t s) {
    return coarse_name(c) + "." + std::to_string(s + 1);
}

void write_labels(const RawLabels& labels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [iri, classes] : labels) {
        out << iri << '\t';
        for (std::size_t i = 0; i < classes.size(); ++i) out << (i ? "," : "") << classes[i];
        out << '\n';
    }
}

}  // namespace

SyntheticKg generate_synthetic(const SyntheticSpec& spec) {
    if (spec.coarse == 0 || spec.subtypes == 0 || spec.per_subtype < 2)
        throw Error("synthetic graph needs at least one class and two entities per subtype");
    Rng rng(derive_seed(spec.seed, 0x5e7));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    const std::size_t fine_classes = spec.coarse * spec.subtypes;
    std::size_t next_pool = 0;
    auto make_pool = [&](std::size_t n) {
        std::vector<std::string> pool;
        for (std::size_t i = 0; i < n; ++i) pool.push_back(numbered("attr", next_pool++));
        return pool;
    };
    std::vector<std::vector<std::string>> coarse_pools, subtype_pools;
    for (std::size_t c = 0; c < spec.coarse; ++c) coarse_pools.push_back(make_pool(spec.coarse_pool));
    for (std::size_t f = 0; f < fine_classes; ++f) subtype_pools.push_back(make_pool(spec.subtype_pool));
    const auto shared = make_pool(spec.shared_pool);

    std::size_t next_pred = 0;
    auto make_preds = [&](std::size_t n) {
        std::vector<std::string> preds;
        for (std::size_t i = 0; i < n; ++i) preds.push_back(numbered("p", next_pred++));
        return preds;
    };
    std::vector<std::vector<std::string>> coarse_preds, subtype_preds;
    for (std::size_t c = 0; c < spec.coarse; ++c) coarse_preds.push_back(make_preds(spec.coarse_predicates));
    for (std::size_t f = 0; f < fine_classes; ++f) subtype_preds.push_back(make_preds(spec.subtype_predicates));
    const auto generic = make_preds(spec.generic_predicates);

    SyntheticKg kg;
    std::vector<std::string> entities;
    std::vector<std::size_t> fine_of;
    for (std::size_t f = 0; f < fine_classes; ++f)
        for (std::size_t i = 0; i < spec.per_subtype; ++i) {
            fine_of.push_back(f);
            entities.push_back(numbered("entity", entities.size()));
        }
    // Shuffle so entity numbering carries no class information.
    std::vector<std::size_t> order(entities.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> shuffled_fine(entities.size());
    for (std::size_t i = 0; i < order.size(); ++i) shuffled_fine[order[i]] = fine_of[i];
    fine_of = std::move(shuffled_fine);

    std::vector<std::vector<std::size_t>> members(fine_classes);
    for (std::size_t e = 0; e < entities.size(); ++e) members[fine_of[e]].push_back(e);

    for (std::size_t e = 0; e < entities.size(); ++e) {
        const std::size_t f = fine_of[e];
        const std::size_t c = f / spec.subtypes;
        const std::size_t s = f % spec.subtypes;
        const auto& subj = entities[e];
        for (std::size_t k = 0; k < spec.coarse_edges; ++k) {
            const auto& pred = coarse_preds[c][pick(spec.coarse_predicates)];
            const auto& pool = coin(rng) < spec.coarse_shared ? shared : coarse_pools[c];
            kg.triples.push_back({subj, pred, pool[pick(pool.size())]});
        }
        for (std::size_t k = 0; k < spec.subtype_edges; ++k) {
            const auto& pred = subtype_preds[f][pick(spec.subtype_predicates)];
            const double u = coin(rng);
            const std::vector<std::string>* pool = &subtype_pools[f];
            if (spec.subtypes > 1 && u < spec.sibling_target) {
                std::size_t sib = pick(spec.subtypes - 1);
                if (sib >= s) ++sib;
                pool = &subtype_pools[c * spec.subtypes + sib];
            } else if (u < spec.sibling_target + spec.subtype_shared) {
                pool = &shared;
            }
            kg.triples.push_back({subj, pred, (*pool)[pick(pool->size())]});
        }
        for (std::size_t k = 0; k < spec.generic_edges; ++k) {
            const double u = coin(rng);
            std::size_t other = e;
            while (other == e) {
                if (u < spec.link_same_subtype) {
                    other = members[f][pick(members[f].size())];
                } else if (u < spec.link_same_subtype + spec.link_same_coarse) {
                    const auto g = c * spec.subtypes + pick(spec.subtypes);
                    other = members[g][pick(members[g].size())];
                } else {
                    other = pick(entities.size());
                }
            }
            kg.triples.push_back({subj, generic[pick(spec.generic_predicates)], entities[other]});
        }
        kg.fine.push_back({subj, {fine_name(c, s)}});
        kg.coarse.push_back({subj, {coarse_name(c)}});
    }
    for (std::size_t c = 0; c < spec.coarse; ++c) {
        kg.hierarchy.emplace_back(coarse_name(c), std::nullopt);
        for (std::size_t s = 0; s < spec.subtypes; ++s)
            kg.hierarchy.emplace_back(fine_name(c, s), coarse_name(c));
    }
    return kg;
}

void write_synthetic(const SyntheticKg& kg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "graph.nt");
        if (!out) throw IoError("cannot write " + (dir / "graph.nt").string());
        for (const auto& t : kg.triples)
            out << '<' << t.subject << "> <" << t.predicate << "> <" << t.object << "> .\n";
    }
    write_labels(kg.fine, dir / "labels_fine.tsv");
    write_labels(kg.coarse, dir / "labels_coarse.tsv");
    std::ofstream out(dir / "hierarchy.tsv");
    if (!out) throw IoError("cannot write " + (dir / "hierarchy.tsv").string());
    for (const auto& [cls, parent] : kg.hierarchy) {
        out << cls;
        if (parent) out << '\t' << *parent;
        out << '\n';
    }
}

nlohmann::json synthetic_experiment(const std::string& output_dir) {
    using nlohmann::json;
    auto classifier = [](const char* name, const char* features, const char* regime, json level) {
        return json{{"name", name}, {"features", features}, {"regime", regime}, {"label_level", level}};
    };
    json classifiers = json::array({classifier("coarse", "concat", "multiclass", 1),
                                    classifier("fine", "concat", "multiclass", 2),
                                    classifier("hierarchical", "concat", "hierarchical", nullptr),
                                    classifier("coarse_entity", "entity", "multiclass", 1),
                                    classifier("fine_entity", "entity", "multiclass", 2)});
    json weights = classifier("coarse_weights", "concat", "multiclass", 1);
    weights["hidden"] = json::array();
    weights["weight_report_epochs"] = {1, 10};
    classifiers.push_back(weights);
    return {{"graph", "graph.nt"},
            {"labels", "labels_fine.tsv"},
            {"hierarchy", "hierarchy.tsv"},
            {"walks", {{"depth", 8}, {"walks_per_entity", 500}, {"dedup", false}}},
            {"embeddings",
             {{"defaults", {{"dim", 64}, {"epochs", 5}, {"window", 5}, {"order_aware", true}}},
              {"variants",
               {{{"name", "classic_oa"}, {"strategy", "classic"}},
                {{"name", "entity_oa"}, {"strategy", "entity"}},
                {{"name", "predicate_oa"}, {"strategy", "predicate"}}}}}},
            {"features",
             {{{"name", "concat"}, {"parts", {"classic_oa", "predicate_oa", "entity_oa"}}, {"mode", "concat"}},
              {{"name", "entity"}, {"parts", {"entity_oa"}}, {"mode", "concat"}}}},
            {"classifiers", classifiers},
            {"output_dir", output_dir},
            {"seed", 1}};
}

}  // namespace grand
