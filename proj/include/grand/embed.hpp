#pragma once

#include "grand/graph.hpp"
#include "grand/util.hpp"
#include "grand/vector_table.hpp"
#include "grand/walks.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace grand {

class Vocabulary {
public:
    Vocabulary() = default;

    /// Orders entries by (count desc, token asc) and assigns dense ids.
    static Vocabulary from_counts(std::vector<std::pair<std::string, std::uint64_t>> entries);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
    std::uint64_t count(std::uint32_t id) const { return counts_.at(id); }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::optional<std::uint32_t> find(std::string_view token) const;

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Tokens below `min_count` are dropped. When `graph` is given every token
/// must name an entity or relation of it (TokenNotInGraph otherwise).
/// Throws EmptyCorpus when nothing survives.
Vocabulary build_vocab(const TextCorpus& corpus, std::uint64_t min_count,
                       const KnowledgeGraph* graph = nullptr);

/// Unigram^power noise distribution for negative sampling.
class NegativeSampler {
public:
    explicit NegativeSampler(const Vocabulary& vocab, double power = 0.75);
    std::uint32_t operator()(Rng& rng) const { return dist_(rng); }
    double probability(std::uint32_t id) const { return probabilities_.at(id); }

private:
    mutable std::discrete_distribution<std::uint32_t> dist_;
    std::vector<double> probabilities_;
};

enum class Architecture { SkipGram, Cbow };

struct TrainConfig {
    std::size_t dim = 200;
    std::size_t epochs = 5;
    std::uint32_t window = 5;
    std::uint32_t negatives = 5;
    double lr_initial = 0.025;
    double lr_final = 0.0001;
    bool order_aware = false;
    Architecture architecture = Architecture::SkipGram;
    std::uint64_t seed = 1;
    std::uint64_t min_count = 1;
    double subsample = 0.0;  // 0 disables frequent-token subsampling
    int threads = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Input vectors plus one output matrix (classic) or 2*window output
/// matrices indexed by signed context offset (order-aware).
class EmbeddingMatrix {
public:
    EmbeddingMatrix(Vocabulary vocab, TrainConfig config);

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const TrainConfig& config() const noexcept { return config_; }
    std::size_t dim() const noexcept { return config_.dim; }

    std::span<double> input(std::uint32_t token) {
        return {input_.data() + std::size_t{token} * dim(), dim()};
    }
    std::span<const double> input(std::uint32_t token) const {
        return {input_.data() + std::size_t{token} * dim(), dim()};
    }

    std::size_t num_output_matrices() const noexcept { return output_.size(); }
    /// 0 in classic mode; offsets -w..-1 map to 0..w-1 and 1..w to w..2w-1.
    std::size_t output_matrix_index(int offset) const;
    std::span<double> output(std::size_t matrix, std::uint32_t token) {
        return {output_[matrix].data() + std::size_t{token} * dim(), dim()};
    }
    std::span<const double> output(std::size_t matrix, std::uint32_t token) const {
        return {output_[matrix].data() + std::size_t{token} * dim(), dim()};
    }

    /// Uniform in [-0.5/dim, 0.5/dim] for inputs, zeros for outputs.
    void initialize(std::uint64_t seed);
    bool all_finite() const;

    VectorTable input_table() const;

private:
    Vocabulary vocab_;
    TrainConfig config_;
    std::vector<double> input_;
    std::vector<std::vector<double>> output_;
};

/// Positive context and its negatives at one signed offset from the center.
struct PairSample {
    int offset = 1;
    std::uint32_t context = 0;
    std::vector<std::uint32_t> negatives;
};

/// Frozen skip-gram micro-batch: one center token against several pairs.
struct MicroBatch {
    std::uint32_t center = 0;
    std::vector<PairSample> pairs;
};

/// Negative-sampling loss: -log s(u.v) - sum log s(-u.v_neg), summed over pairs.
double microbatch_loss(const EmbeddingMatrix& m, const MicroBatch& batch);

struct SparseGradient {
    std::map<std::uint32_t, std::vector<double>> input;
    std::map<std::pair<std::size_t, std::uint32_t>, std::vector<double>> output;
};

/// Analytic gradient of microbatch_loss; shared rows accumulate.
SparseGradient microbatch_gradient(const EmbeddingMatrix& m, const MicroBatch& batch);

/// One in-place SGD update for a skip-gram pair (word2vec ordering: output
/// rows move first, the center row once at the end). Returns the pre-update
/// loss of the pair.
double apply_pair_update(EmbeddingMatrix& m, std::uint32_t center, const PairSample& pair,
                         double lr);

/// Fixed (non-shrunk) context window: calls f(i, j, offset) for every center
/// position i and context position j = i + offset, 0 < |offset| <= window.
template <class F>
void for_each_context_pair(std::size_t length, std::uint32_t window, F&& f) {
    const auto w = static_cast<std::int64_t>(window);
    const auto n = static_cast<std::int64_t>(length);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t r = -w; r <= w; ++r) {
            if (r == 0) continue;
            const auto j = i + r;
            if (j < 0 || j >= n) continue;
            f(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<int>(r));
        }
    }
}

class LinearDecay {
public:
    LinearDecay(double initial, double final_rate, std::uint64_t total_steps)
        : initial_(initial), final_(final_rate), total_(total_steps) {}
    double at(std::uint64_t step) const;

private:
    double initial_;
    double final_;
    std::uint64_t total_;
};

/// Observes every positive pair the trainer consumes: center token, context
/// token and the output matrix the pair was scored against.
using PairObserver = std::function<void(std::uint32_t center, std::uint32_t context,
                                        std::size_t output_matrix)>;

struct TrainOptions {
    PairObserver observer;
};

struct TrainResult {
    EmbeddingMatrix model;
    std::vector<double> epoch_loss;  // mean loss per positive pair
    std::uint64_t total_steps = 0;
};

TrainResult train(const TextCorpus& corpus, const TrainConfig& cfg, const TrainOptions& opts = {});

void save_embeddings(const EmbeddingMatrix& m, std::ostream& out);
/// Writes `path` plus a `<path>.json` sidecar with the training config.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

EmbeddingMatrix load_embeddings(std::istream& in, std::optional<TrainConfig> config = {});
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace grand
