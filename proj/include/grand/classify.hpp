#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace grand {

using ClassId = std::uint32_t;
/// Sorted, duplicate-free class ids.
using LabelSet = std::vector<ClassId>;

enum class OutputHead { Softmax, Sigmoid };

std::string_view to_string(OutputHead head);
OutputHead parse_output_head(std::string_view name);

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // in x out, input-major
    std::vector<double> bias;

    double& weight(std::size_t input, std::size_t output) { return weights[input * out + output]; }
    double weight(std::size_t input, std::size_t output) const { return weights[input * out + output]; }
};

/// Feed-forward network: ReLU after every layer but the last, raw scores out.
class Mlp {
public:
    Mlp() = default;
    /// `dims` = {input, hidden..., classes}; parameters start at zero.
    Mlp(std::vector<std::size_t> dims, OutputHead head);

    /// Glorot-uniform hidden layers; the output layer is scaled down so
    /// initial scores are close to zero.
    static Mlp initialized(std::vector<std::size_t> dims, OutputHead head, std::uint64_t seed);

    std::size_t input_dim() const { return layers_.front().in; }
    std::size_t num_classes() const { return layers_.back().out; }
    OutputHead head() const noexcept { return head_; }
    std::vector<std::size_t> dims() const;

    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    /// Raw class scores. Throws DimMismatch.
    std::vector<double> forward(std::span<const double> x) const;
    bool all_finite() const;

    bool operator==(const Mlp&) const;

private:
    std::vector<DenseLayer> layers_;
    OutputHead head_ = OutputHead::Softmax;
};

struct LossGrad {
    double loss = 0;
    std::vector<double> grad;  // d loss / d logits
};

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(s)[target], computed with max-subtraction.
LossGrad softmax_ce(std::span<const double> logits, ClassId target);

/// Sum over classes of binary cross-entropy on sigmoid(s), in log-sigmoid form.
LossGrad sigmoid_bce(std::span<const double> logits, std::span<const std::uint8_t> targets);

struct MlpGradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;

    explicit MlpGradient(const Mlp& m);
    void zero();
};

/// Mean loss over the batch and its gradient. `x` holds `labels.size()` rows.
/// Softmax uses each label set's first element as the target class.
double loss_and_gradient(const Mlp& m, std::span<const double> x, std::span<const LabelSet> labels,
                         MlpGradient& grad, bool parallel = true);

double batch_loss(const Mlp& m, std::span<const double> x, std::span<const LabelSet> labels);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const Mlp& m, AdamConfig cfg);
    void step(Mlp& m, const MlpGradient& g);

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_w_, v_w_, m_b_, v_b_;
};

struct TrainSpec {
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    AdamConfig adam{};
    std::uint64_t seed = 7;
    std::optional<std::size_t> early_stop_patience;
    std::vector<std::size_t> hidden{512, 256};
    bool parallel = true;

    nlohmann::json to_json() const;
    static TrainSpec from_json(const nlohmann::json& j);
};

/// Dense feature rows with their label sets, ids in [0, num_classes).
struct TrainingData {
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;
    std::vector<LabelSet> labels;
    std::vector<std::string> entities;  // optional, parallel to labels

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(features).subspan(i * dim, dim);
    }
};

struct EpochReport {
    std::size_t epoch = 0;
    double train_loss = 0;
    std::optional<double> validation_micro_f1;
};

using EpochCallback = std::function<void(std::size_t epoch, const Mlp& model)>;

struct ClassifierResult {
    Mlp model;
    std::vector<EpochReport> history;
    std::size_t selected_epoch = 0;
};

/// Mini-batch Adam with a per-epoch seeded shuffle. With validation data the
/// parameters of the epoch with the best validation micro-F1 are returned.
ClassifierResult train_classifier(const TrainingData& train, const TrainingData* validation,
                                  OutputHead head, const TrainSpec& spec,
                                  const EpochCallback& on_epoch = {});

/// Softmax: argmax, lowest id on ties. Sigmoid: every class with
/// sigmoid(s) >= 0.5, or the single best class when none qualifies.
LabelSet predict(const Mlp& m, std::span<const double> x);
LabelSet predict_from_logits(std::span<const double> logits, OutputHead head);

/// Leveled single-parent class taxonomy; roots sit at level 1.
class TypeHierarchy {
public:
    TypeHierarchy() = default;

    /// (class, parent) pairs; a root has no parent. Ids follow sorted names.
    /// Throws CyclicHierarchy, or InconsistentHierarchy for conflicting or
    /// dangling parents.
    static TypeHierarchy from_parents(
        const std::vector<std::pair<std::string, std::optional<std::string>>>& entries);

    std::size_t size() const noexcept { return names_.size(); }
    std::size_t depth() const noexcept { return by_level_.size(); }
    const std::string& name(ClassId c) const { return names_.at(c); }
    std::optional<ClassId> find(std::string_view name) const;
    std::optional<ClassId> parent(ClassId c) const { return parent_.at(c); }
    std::size_t level(ClassId c) const { return level_.at(c); }
    const std::vector<ClassId>& classes_at_level(std::size_t level) const {
        return by_level_.at(level - 1);
    }
    const std::vector<ClassId>& children(ClassId c) const { return children_.at(c); }
    std::optional<ClassId> ancestor_at_level(ClassId c, std::size_t level) const;
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Stable digest of the taxonomy, used to tie checkpoints to it.
    std::string digest() const;

private:
    std::vector<std::string> names_;
    std::vector<std::optional<ClassId>> parent_;
    std::vector<std::size_t> level_;
    std::vector<std::vector<ClassId>> children_;
    std::vector<std::vector<ClassId>> by_level_;
};

/// TSV `class \t parent`; a line with only a class declares a root.
TypeHierarchy load_hierarchy(std::istream& in);
TypeHierarchy load_hierarchy(const std::filesystem::path& path);

/// Restricts labels to `level` by ancestor projection. Examples without a
/// label at that depth are dropped. Labels are remapped to positions in
/// `classes` (the hierarchy's classes at that level).
TrainingData project_to_level(const TrainingData& data, const TypeHierarchy& h, std::size_t level);

struct LevelModel {
    std::size_t level = 0;
    std::vector<ClassId> classes;  // local output index -> hierarchy class id
    Mlp model;
};

struct LplModel {
    std::vector<LevelModel> levels;
};

/// One independent flat classifier per hierarchy level. `train` labels are
/// hierarchy class ids. Throws InconsistentHierarchy for labels outside it.
LplModel train_lpl(const TrainingData& train, const TrainingData* validation,
                   const TypeHierarchy& h, OutputHead head, const TrainSpec& spec,
                   const std::function<void(std::size_t level, std::size_t epoch, const Mlp&)>&
                       on_epoch = {});

/// Keeps level predictions while each is a child of the previous one and
/// stops at the first that is not. The result is a root-anchored chain
/// (empty if the level-1 prediction is not a root).
std::vector<ClassId> repair_path(const TypeHierarchy& h, std::span<const ClassId> per_level);

std::vector<ClassId> predict_hierarchical(const LplModel& model, const TypeHierarchy& h,
                                          std::span<const double> x);

/// First line: JSON header (caller metadata plus model dims/heads). Then two
/// lines per layer: weights, biases. Values use round-trip formatting.
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     std::span<const Mlp> models);

struct Checkpoint {
    nlohmann::json meta;
    std::vector<Mlp> models;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace grand
