#pragma once

#include "grand/classify.hpp"
#include "grand/dataset.hpp"
#include "grand/embed.hpp"
#include "grand/eval.hpp"
#include "grand/represent.hpp"
#include "grand/walks.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace grand {

std::string_view tool_version();

struct VariantSpec {
    std::string name;
    WalkStrategy strategy = WalkStrategy::Classic;
    TrainConfig train;
};

struct FeatureSpec {
    std::string name;
    FusionSpec fusion;
};

struct ClassifierSpec {
    std::string name;
    std::string features;
    Regime regime = Regime::MultiClass;
    std::optional<std::size_t> label_level;
    std::vector<std::size_t> weight_report_epochs;  // flat regimes over concat features only
    std::optional<std::vector<std::size_t>> hidden;  // overrides the shared train spec
};

struct ExperimentConfig {
    std::filesystem::path graph;
    std::vector<std::string> exclude_predicates;
    std::filesystem::path labels;
    std::optional<std::filesystem::path> hierarchy;
    std::optional<std::filesystem::path> descriptions;  // available as part "description"
    std::optional<std::filesystem::path> train_split;
    std::optional<std::filesystem::path> validation_split;
    std::optional<std::filesystem::path> test_split;
    std::optional<std::uint64_t> split_seed;  // derived from `seed` when absent
    WalkConfig walks;
    std::vector<VariantSpec> variants;
    std::vector<FeatureSpec> features;
    std::vector<ClassifierSpec> classifiers;
    TrainSpec train;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;  // 0: OpenMP default
    bool deterministic = false;

    /// Relative paths resolve against `base`.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// Throws Error for missing files, dangling names or incompatible settings.
    void validate() const;
};

struct RuntimeOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<bool> deterministic;
};

/// Reads GRAND_SEED, GRAND_THREADS and GRAND_DETERMINISTIC.
RuntimeOverrides env_overrides();
void apply_overrides(ExperimentConfig& cfg, const RuntimeOverrides& o);

struct StageRecord {
    std::string name;
    std::string key;  // digest of stage parameters and input digests
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    double seconds = 0;
    bool skipped = false;
};

struct RunManifest {
    std::string tool_version;
    std::string config_hash;
    std::vector<StageRecord> stages;

    const StageRecord* find(std::string_view stage) const;
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

struct RunResult {
    RunManifest manifest;
    nlohmann::json metrics;
    nlohmann::json weights;
};

/// Executes walk, embed, fuse, train and eval in order, writing artifacts and
/// manifest.json into cfg.output_dir. A stage is skipped when no earlier stage
/// ran, its key matches the previous manifest, and its recorded outputs are
/// present with the same digests. Failures are rethrown as StageError.
RunResult run(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Split and label view a classifier trains and is evaluated on.
LabeledDataset classifier_dataset(const ExperimentConfig& cfg, const ClassifierSpec& spec);

/// Trains the classifier and writes a checkpoint whose header carries what
/// evaluation needs. Returns the per-epoch weight reports that were requested.
std::vector<WeightReport> train_and_save(const LabeledDataset& ds, const FusedStore& store,
                                         const ClassifierSpec& spec, const TrainSpec& train,
                                         const std::filesystem::path& checkpoint);

/// Test-split metrics for a saved checkpoint. Flat regimes report one metrics
/// object; the hierarchical regime reports one per level plus path accuracy.
nlohmann::json evaluate_checkpoint(const LabeledDataset& ds, const VectorTable& features,
                                   const Checkpoint& ckpt);

}  // namespace grand
