#include "grand/dataset.hpp"

#include "grand/error.hpp"
#include "grand/util.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>

namespace grand {

Regime parse_regime(std::string_view name) {
    if (name == "multiclass" || name == "multi-class") return Regime::MultiClass;
    if (name == "multilabel" || name == "multi-label") return Regime::MultiLabel;
    if (name == "hierarchical" || name == "lpl") return Regime::Hierarchical;
    throw Error("unknown classifier regime '" + std::string(name) + "'");
}

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::MultiClass: return "multiclass";
        case Regime::MultiLabel: return "multilabel";
        case Regime::Hierarchical: return "hierarchical";
    }
    return "multiclass";
}

const std::vector<LabeledExample>& LabeledDataset::split(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::Test: return test;
    }
    return train;
}

std::vector<std::string> LabeledDataset::all_entities() const {
    std::vector<std::string> out;
    for (const auto* part : {&train, &validation, &test})
        for (const auto& ex : *part) out.push_back(ex.entity);
    return out;
}

RawLabels read_labels(std::istream& in) {
    RawLabels rows;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto tab = body.find('\t');
        if (tab == std::string_view::npos)
            throw FormatError("labels line " + std::to_string(line_no) + ": expected 'iri<TAB>classes'");
        std::string iri(trim(body.substr(0, tab)));
        std::vector<std::string> classes;
        for (auto c : split(trim(body.substr(tab + 1)), ','))
            if (auto t = trim(c); !t.empty()) classes.emplace_back(t);
        if (iri.empty() || classes.empty())
            throw FormatError("labels line " + std::to_string(line_no) + ": empty IRI or class list");
        auto [it, fresh] = index.emplace(iri, rows.size());
        if (fresh) {
            rows.emplace_back(std::move(iri), std::move(classes));
        } else {
            auto& dst = rows[it->second].second;
            dst.insert(dst.end(), classes.begin(), classes.end());
        }
    }
    for (auto& [iri, classes] : rows) {
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    }
    return rows;
}

RawLabels read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_labels(in);
}

std::vector<std::string> read_entity_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        out.emplace_back(trim(body.substr(0, body.find('\t'))));
    }
    return out;
}

SplitSizes auto_split_sizes(std::size_t n) {
    const std::size_t train = n * 5 / 10;
    const std::size_t test = n * 3 / 10;
    return {train, test, n - train - test};
}

LabeledDataset make_dataset(const RawLabels& labels, std::optional<TypeHierarchy> hierarchy,
                            const DatasetOptions& opts) {
    if ((opts.regime == Regime::Hierarchical || opts.label_level) && !hierarchy)
        throw Error("hierarchical regime and label projection need a class hierarchy");

    LabeledDataset ds;
    ds.regime = opts.regime;

    // Resolve each row to class names, projecting through the hierarchy first.
    std::vector<std::pair<std::string, std::vector<std::string>>> resolved;
    for (const auto& [iri, classes] : labels) {
        std::set<std::string> names;
        for (const auto& c : classes) {
            if (!hierarchy) {
                names.insert(c);
                continue;
            }
            auto id = hierarchy->find(c);
            if (!id) throw UnknownClass(iri, c);
            if (opts.label_level) {
                if (auto a = hierarchy->ancestor_at_level(*id, *opts.label_level))
                    names.insert(hierarchy->name(*a));
            } else {
                names.insert(c);
            }
        }
        if (names.empty()) continue;  // no label at the requested level
        if (opts.regime == Regime::MultiClass && names.size() != 1)
            throw Error("multi-class regime rejects multi-label row for " + iri);
        resolved.emplace_back(iri, std::vector<std::string>(names.begin(), names.end()));
    }

    if (opts.regime == Regime::Hierarchical) {
        ds.class_names = hierarchy->names();
    } else {
        std::set<std::string> seen;
        for (const auto& [iri, names] : resolved) seen.insert(names.begin(), names.end());
        ds.class_names.assign(seen.begin(), seen.end());
    }
    auto class_id = [&](const std::string& name) {
        if (opts.regime == Regime::Hierarchical) return *hierarchy->find(name);
        auto it = std::lower_bound(ds.class_names.begin(), ds.class_names.end(), name);
        return static_cast<ClassId>(it - ds.class_names.begin());
    };

    std::map<std::string, LabeledExample> by_entity;
    for (const auto& [iri, names] : resolved) {
        LabeledExample ex{iri, {}};
        for (const auto& n : names) ex.labels.push_back(class_id(n));
        std::sort(ex.labels.begin(), ex.labels.end());
        by_entity.emplace(iri, std::move(ex));
    }

    const bool explicit_split = !opts.train_entities.empty() || !opts.validation_entities.empty() ||
                                !opts.test_entities.empty();
    if (explicit_split) {
        std::map<std::string, Split> assigned;
        auto assign = [&](const std::vector<std::string>& list, Split s, std::vector<LabeledExample>& dst) {
            for (const auto& iri : list) {
                if (!assigned.emplace(iri, s).second) {
                    if (assigned[iri] != s) throw OverlapSplit(iri);
                    continue;
                }
                if (auto it = by_entity.find(iri); it != by_entity.end()) dst.push_back(it->second);
            }
        };
        assign(opts.train_entities, Split::Train, ds.train);
        assign(opts.validation_entities, Split::Validation, ds.validation);
        assign(opts.test_entities, Split::Test, ds.test);
    } else {
        std::vector<LabeledExample> all;
        for (auto& [iri, ex] : by_entity) all.push_back(ex);  // sorted by IRI
        Rng rng(derive_seed(opts.split_seed, 0x5b17));
        std::shuffle(all.begin(), all.end(), rng);
        const auto sizes = auto_split_sizes(all.size());
        auto first = all.begin();
        ds.train.assign(first, first + sizes.train);
        ds.test.assign(first + sizes.train, first + sizes.train + sizes.test);
        ds.validation.assign(first + sizes.train + sizes.test, all.end());
    }
    ds.hierarchy = std::move(hierarchy);
    return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& labels,
                            const std::optional<std::filesystem::path>& hierarchy,
                            const DatasetOptions& opts) {
    std::optional<TypeHierarchy> h;
    if (hierarchy) h = load_hierarchy(*hierarchy);
    return make_dataset(read_labels(labels), std::move(h), opts);
}

TrainingData to_training_data(const std::vector<LabeledExample>& examples,
                              const VectorTable& features, std::size_t num_classes) {
    TrainingData data;
    data.dim = features.dim();
    data.num_classes = num_classes;
    data.features.reserve(examples.size() * data.dim);
    for (const auto& ex : examples) {
        auto row = features.find(ex.entity);
        if (!row) throw MissingFeature(ex.entity);
        data.features.insert(data.features.end(), row->begin(), row->end());
        data.labels.push_back(ex.labels);
        data.entities.push_back(ex.entity);
    }
    return data;
}

}  // namespace grand
