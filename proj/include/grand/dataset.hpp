#pragma once

#include "grand/classify.hpp"
#include "grand/vector_table.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grand {

enum class Regime { MultiClass, MultiLabel, Hierarchical };

Regime parse_regime(std::string_view name);
std::string_view to_string(Regime r);

enum class Split { Train, Validation, Test };

struct LabeledExample {
    std::string entity;
    LabelSet labels;
};

/// Examples with class ids. In the hierarchical regime ids are hierarchy ids;
/// otherwise they index `class_names` (sorted names seen in the label file,
/// after optional projection to `label_level`).
struct LabeledDataset {
    Regime regime = Regime::MultiClass;
    std::vector<std::string> class_names;
    std::optional<TypeHierarchy> hierarchy;
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;

    const std::vector<LabeledExample>& split(Split s) const;
    std::size_t num_classes() const { return class_names.size(); }
    std::vector<std::string> all_entities() const;
};

/// Rows `iri \t class[,class...]`; repeated IRIs merge their labels.
using RawLabels = std::vector<std::pair<std::string, std::vector<std::string>>>;
RawLabels read_labels(std::istream& in);
RawLabels read_labels(const std::filesystem::path& path);

/// One IRI per line (extra tab-separated columns are ignored).
std::vector<std::string> read_entity_list(const std::filesystem::path& path);

struct DatasetOptions {
    Regime regime = Regime::MultiClass;
    std::optional<std::size_t> label_level;  // project labels to this hierarchy level
    std::uint64_t split_seed = 42;
    // Explicit splits; when all are empty a seeded 50/30/20 train/test/validation
    // split is drawn.
    std::vector<std::string> train_entities;
    std::vector<std::string> validation_entities;
    std::vector<std::string> test_entities;
};

/// Throws UnknownClass, CyclicHierarchy (via the hierarchy), OverlapSplit, or
/// Error when the regime and label cardinality disagree.
LabeledDataset make_dataset(const RawLabels& labels, std::optional<TypeHierarchy> hierarchy,
                            const DatasetOptions& opts);

LabeledDataset load_dataset(const std::filesystem::path& labels,
                            const std::optional<std::filesystem::path>& hierarchy,
                            const DatasetOptions& opts);

/// Sizes of the automatic split for n entities: train, test, validation.
struct SplitSizes {
    std::size_t train, test, validation;
};
SplitSizes auto_split_sizes(std::size_t n);

/// Gathers feature rows for `examples`; throws MissingFeature.
TrainingData to_training_data(const std::vector<LabeledExample>& examples,
                              const VectorTable& features, std::size_t num_classes);

}  // namespace grand
