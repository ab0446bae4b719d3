#include "grand/embed.hpp"

#include "grand/error.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace grand {

namespace {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
#pragma omp simd reduction(+ : s)
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

// One logistic update of `out` against the center row `u`. Accumulates the
// center's step into `work`. Returns the loss before the update.
inline double logistic_step(const double* u, double* out, double label, double lr,
                            double* work, std::size_t dim) {
    const double f = dot(u, out, dim);
    const double loss = label > 0 ? -log_sigmoid(f) : -log_sigmoid(-f);
    const double g = (label - sigmoid(f)) * lr;
#pragma omp simd
    for (std::size_t k = 0; k < dim; ++k) work[k] += g * out[k];
#pragma omp simd
    for (std::size_t k = 0; k < dim; ++k) out[k] += g * u[k];
    return loss;
}

std::string_view arch_name(Architecture a) { return a == Architecture::Cbow ? "cbow" : "sg"; }

}  // namespace

Vocabulary Vocabulary::from_counts(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    v.tokens_.reserve(entries.size());
    v.counts_.reserve(entries.size());
    for (auto& [tok, count] : entries) {
        if (count == 0) throw Error("vocabulary count must be positive for " + tok);
        v.index_.emplace(tok, static_cast<std::uint32_t>(v.tokens_.size()));
        v.tokens_.push_back(std::move(tok));
        v.counts_.push_back(count);
    }
    return v;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocab(const TextCorpus& corpus, std::uint64_t min_count,
                       const KnowledgeGraph* graph) {
    std::vector<std::uint64_t> counts(corpus.distinct_tokens(), 0);
    for (std::size_t s = 0; s < corpus.size(); ++s)
        for (auto id : corpus.sentence(s)) ++counts[id];
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (std::uint32_t id = 0; id < counts.size(); ++id) {
        if (counts[id] < std::max<std::uint64_t>(min_count, 1)) continue;
        const auto& tok = corpus.token(id);
        if (graph && !graph->find_entity(tok) && !graph->find_relation(tok))
            throw TokenNotInGraph(tok);
        entries.emplace_back(tok, counts[id]);
    }
    if (entries.empty()) throw EmptyCorpus();
    return Vocabulary::from_counts(std::move(entries));
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double power) {
    if (vocab.empty()) throw EmptyCorpus();
    std::vector<double> weights(vocab.size());
    for (std::uint32_t i = 0; i < vocab.size(); ++i)
        weights[i] = std::pow(static_cast<double>(vocab.count(i)), power);
    dist_ = std::discrete_distribution<std::uint32_t>(weights.begin(), weights.end());
    probabilities_ = dist_.probabilities();
}

void TrainConfig::validate() const {
    if (dim == 0) throw Error("embedding dim must be positive");
    if (window == 0) throw Error("window must be positive");
    if (lr_initial <= 0 || lr_final < 0) throw Error("learning rates must be positive");
    if (order_aware && architecture == Architecture::Cbow)
        throw Error("order-aware training is only defined for skip-gram");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"dim", dim},
            {"epochs", epochs},
            {"window", window},
            {"negatives", negatives},
            {"lr_initial", lr_initial},
            {"lr_final", lr_final},
            {"order_aware", order_aware},
            {"architecture", arch_name(architecture)},
            {"seed", seed},
            {"min_count", min_count},
            {"subsample", subsample}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.dim = j.value("dim", c.dim);
    c.epochs = j.value("epochs", c.epochs);
    c.window = j.value("window", c.window);
    c.negatives = j.value("negatives", c.negatives);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.lr_final = j.value("lr_final", c.lr_final);
    c.order_aware = j.value("order_aware", c.order_aware);
    auto arch = j.value("architecture", std::string("sg"));
    if (arch == "sg") c.architecture = Architecture::SkipGram;
    else if (arch == "cbow") c.architecture = Architecture::Cbow;
    else throw FormatError("unknown architecture '" + arch + "'");
    c.seed = j.value("seed", c.seed);
    c.min_count = j.value("min_count", c.min_count);
    c.subsample = j.value("subsample", c.subsample);
    return c;
}

EmbeddingMatrix::EmbeddingMatrix(Vocabulary vocab, TrainConfig config)
    : vocab_(std::move(vocab)), config_(std::move(config)) {
    config_.validate();
    const std::size_t rows = vocab_.size() * config_.dim;
    input_.assign(rows, 0.0);
    output_.assign(config_.order_aware ? 2 * config_.window : 1, std::vector<double>(rows, 0.0));
}

std::size_t EmbeddingMatrix::output_matrix_index(int offset) const {
    if (!config_.order_aware) return 0;
    const int w = static_cast<int>(config_.window);
    if (offset == 0 || offset < -w || offset > w)
        throw Error("context offset out of window: " + std::to_string(offset));
    return static_cast<std::size_t>(offset < 0 ? offset + w : offset + w - 1);
}

void EmbeddingMatrix::initialize(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1e17));
    const double bound = 0.5 / static_cast<double>(dim());
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : input_) v = u(rng);
    for (auto& m : output_) std::fill(m.begin(), m.end(), 0.0);
}

bool EmbeddingMatrix::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(input_) && std::all_of(output_.begin(), output_.end(), finite);
}

VectorTable EmbeddingMatrix::input_table() const {
    VectorTable t(dim());
    for (std::uint32_t i = 0; i < vocab_.size(); ++i) t.put(vocab_.token(i), input(i));
    return t;
}

double microbatch_loss(const EmbeddingMatrix& m, const MicroBatch& batch) {
    const auto u = m.input(batch.center);
    double loss = 0;
    for (const auto& p : batch.pairs) {
        const auto mat = m.output_matrix_index(p.offset);
        loss -= log_sigmoid(dot(u.data(), m.output(mat, p.context).data(), m.dim()));
        for (auto neg : p.negatives)
            loss -= log_sigmoid(-dot(u.data(), m.output(mat, neg).data(), m.dim()));
    }
    return loss;
}

SparseGradient microbatch_gradient(const EmbeddingMatrix& m, const MicroBatch& batch) {
    const auto dim = m.dim();
    const auto u = m.input(batch.center);
    SparseGradient g;
    auto& gu = g.input.try_emplace(batch.center, dim, 0.0).first->second;
    auto accumulate = [&](std::size_t mat, std::uint32_t token, double label) {
        const auto v = m.output(mat, token);
        const double coeff = sigmoid(dot(u.data(), v.data(), dim)) - label;
        auto& gv = g.output.try_emplace({mat, token}, dim, 0.0).first->second;
        for (std::size_t k = 0; k < dim; ++k) {
            gu[k] += coeff * v[k];
            gv[k] += coeff * u[k];
        }
    };
    for (const auto& p : batch.pairs) {
        const auto mat = m.output_matrix_index(p.offset);
        accumulate(mat, p.context, 1.0);
        for (auto neg : p.negatives) accumulate(mat, neg, 0.0);
    }
    return g;
}

double apply_pair_update(EmbeddingMatrix& m, std::uint32_t center, const PairSample& pair,
                         double lr) {
    const auto dim = m.dim();
    const auto mat = m.output_matrix_index(pair.offset);
    auto u = m.input(center);
    std::vector<double> work(dim, 0.0);
    double loss = logistic_step(u.data(), m.output(mat, pair.context).data(), 1.0, lr,
                                work.data(), dim);
    for (auto neg : pair.negatives)
        loss += logistic_step(u.data(), m.output(mat, neg).data(), 0.0, lr, work.data(), dim);
    for (std::size_t k = 0; k < dim; ++k) u[k] += work[k];
    return loss;
}

double LinearDecay::at(std::uint64_t step) const {
    if (total_ == 0) return initial_;
    const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_));
    return initial_ - (initial_ - final_) * frac;
}

namespace {

// Sentences re-expressed as vocabulary ids, with below-min-count tokens removed.
struct IdCorpus {
    std::vector<std::uint32_t> ids;
    std::vector<std::size_t> offsets{0};

    std::size_t size() const { return offsets.size() - 1; }
    std::span<const std::uint32_t> sentence(std::size_t i) const {
        return std::span<const std::uint32_t>(ids).subspan(offsets[i], offsets[i + 1] - offsets[i]);
    }
};

IdCorpus to_ids(const TextCorpus& corpus, const Vocabulary& vocab) {
    std::vector<std::int64_t> remap(corpus.distinct_tokens(), -1);
    for (std::uint32_t t = 0; t < corpus.distinct_tokens(); ++t) {
        if (auto id = vocab.find(corpus.token(t))) remap[t] = *id;
    }
    IdCorpus out;
    out.ids.reserve(corpus.total_tokens());
    out.offsets.reserve(corpus.size() + 1);
    for (std::size_t s = 0; s < corpus.size(); ++s) {
        for (auto t : corpus.sentence(s)) {
            if (remap[t] >= 0) out.ids.push_back(static_cast<std::uint32_t>(remap[t]));
        }
        out.offsets.push_back(out.ids.size());
    }
    return out;
}

class Trainer {
public:
    Trainer(EmbeddingMatrix& model, const IdCorpus& corpus, const TrainConfig& cfg,
            const TrainOptions& opts)
        : m_(model), corpus_(corpus), cfg_(cfg), opts_(opts),
          sampler_(model.vocab()),
          decay_(cfg.lr_initial, cfg.lr_final, cfg.epochs * corpus.ids.size()) {
        if (cfg.subsample > 0) {
            const double total = static_cast<double>(corpus.ids.size());
            keep_prob_.resize(model.vocab().size());
            for (std::uint32_t i = 0; i < keep_prob_.size(); ++i) {
                const double f = static_cast<double>(model.vocab().count(i));
                const double t = cfg.subsample * total;
                keep_prob_[i] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
            }
        }
    }

    std::vector<double> run() {
        std::vector<double> losses;
        const int threads = std::max(1, cfg_.threads);
        const std::size_t n = corpus_.size();
        for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
            double loss_sum = 0;
            std::uint64_t pair_count = 0;
#pragma omp parallel num_threads(threads) reduction(+ : loss_sum, pair_count)
            {
                const int t = omp_get_thread_num();
                const int nt = omp_get_num_threads();
                Rng rng(derive_seed(cfg_.seed, epoch * 1000003ULL + static_cast<std::uint64_t>(t)));
                NegativeSampler sampler = sampler_;
                Scratch scratch(m_.dim());
                const std::size_t begin = n * static_cast<std::size_t>(t) / nt;
                const std::size_t end = n * static_cast<std::size_t>(t + 1) / nt;
                for (std::size_t s = begin; s < end; ++s) {
                    const double lr = decay_.at(processed_.load(std::memory_order_relaxed));
                    auto sentence = filtered(corpus_.sentence(s), rng, scratch.kept);
                    auto [l, c] = cfg_.architecture == Architecture::SkipGram
                                      ? skipgram_sentence(sentence, lr, rng, sampler, scratch)
                                      : cbow_sentence(sentence, lr, rng, sampler, scratch);
                    loss_sum += l;
                    pair_count += c;
                    processed_.fetch_add(corpus_.sentence(s).size(), std::memory_order_relaxed);
                }
            }
            if (!std::isfinite(loss_sum) || !m_.all_finite())
                throw NonFiniteUpdate("non-finite parameter after epoch " + std::to_string(epoch + 1));
            losses.push_back(pair_count ? loss_sum / static_cast<double>(pair_count) : 0.0);
        }
        return losses;
    }

    std::uint64_t total_steps() const { return processed_.load(); }

private:
    struct Scratch {
        explicit Scratch(std::size_t dim) : work(dim), hidden(dim) {}
        std::vector<double> work;
        std::vector<double> hidden;
        std::vector<std::uint32_t> kept;
    };

    std::span<const std::uint32_t> filtered(std::span<const std::uint32_t> sentence, Rng& rng,
                                            std::vector<std::uint32_t>& kept) const {
        if (keep_prob_.empty()) return sentence;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        kept.clear();
        for (auto id : sentence) {
            if (keep_prob_[id] >= u(rng)) kept.push_back(id);
        }
        return kept;
    }

    std::pair<double, std::uint64_t> skipgram_sentence(std::span<const std::uint32_t> sentence,
                                                       double lr, Rng& rng,
                                                       NegativeSampler& sampler, Scratch& s) {
        const auto dim = m_.dim();
        double loss = 0;
        std::uint64_t pairs = 0;
        for_each_context_pair(sentence.size(), cfg_.window, [&](std::size_t i, std::size_t j, int r) {
            const auto center = sentence[i];
            const auto context = sentence[j];
            const auto mat = m_.output_matrix_index(r);
            if (opts_.observer) opts_.observer(center, context, mat);
            double* u = m_.input(center).data();
            std::fill(s.work.begin(), s.work.end(), 0.0);
            loss += logistic_step(u, m_.output(mat, context).data(), 1.0, lr, s.work.data(), dim);
            for (std::uint32_t k = 0; k < cfg_.negatives; ++k) {
                const auto neg = sampler(rng);
                if (neg == context) continue;
                loss += logistic_step(u, m_.output(mat, neg).data(), 0.0, lr, s.work.data(), dim);
            }
#pragma omp simd
            for (std::size_t k = 0; k < dim; ++k) u[k] += s.work[k];
            ++pairs;
        });
        return {loss, pairs};
    }

    std::pair<double, std::uint64_t> cbow_sentence(std::span<const std::uint32_t> sentence,
                                                   double lr, Rng& rng, NegativeSampler& sampler,
                                                   Scratch& s) {
        const auto dim = m_.dim();
        const auto w = static_cast<std::int64_t>(cfg_.window);
        const auto n = static_cast<std::int64_t>(sentence.size());
        double loss = 0;
        std::uint64_t positives = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            const auto center = sentence[i];
            std::fill(s.hidden.begin(), s.hidden.end(), 0.0);
            std::size_t count = 0;
            for (std::int64_t j = std::max<std::int64_t>(0, i - w); j <= std::min(n - 1, i + w); ++j) {
                if (j == i) continue;
                if (opts_.observer) opts_.observer(center, sentence[j], 0);
                const auto in = m_.input(sentence[j]);
                for (std::size_t k = 0; k < dim; ++k) s.hidden[k] += in[k];
                ++count;
            }
            if (count == 0) continue;
            for (auto& h : s.hidden) h /= static_cast<double>(count);
            std::fill(s.work.begin(), s.work.end(), 0.0);
            loss += logistic_step(s.hidden.data(), m_.output(0, center).data(), 1.0, lr,
                                  s.work.data(), dim);
            for (std::uint32_t k = 0; k < cfg_.negatives; ++k) {
                const auto neg = sampler(rng);
                if (neg == center) continue;
                loss += logistic_step(s.hidden.data(), m_.output(0, neg).data(), 0.0, lr,
                                      s.work.data(), dim);
            }
            const double share = 1.0 / static_cast<double>(count);
            for (std::int64_t j = std::max<std::int64_t>(0, i - w); j <= std::min(n - 1, i + w); ++j) {
                if (j == i) continue;
                auto in = m_.input(sentence[j]);
                for (std::size_t k = 0; k < dim; ++k) in[k] += share * s.work[k];
            }
            ++positives;
        }
        return {loss, positives};
    }

    EmbeddingMatrix& m_;
    const IdCorpus& corpus_;
    const TrainConfig& cfg_;
    const TrainOptions& opts_;
    NegativeSampler sampler_;
    LinearDecay decay_;
    std::vector<double> keep_prob_;
    std::atomic<std::uint64_t> processed_{0};
};

}  // namespace

TrainResult train(const TextCorpus& corpus, const TrainConfig& cfg, const TrainOptions& opts) {
    cfg.validate();
    auto vocab = build_vocab(corpus, cfg.min_count);
    auto ids = to_ids(corpus, vocab);
    TrainResult result{EmbeddingMatrix(std::move(vocab), cfg), {}, 0};
    result.model.initialize(cfg.seed);
    Trainer trainer(result.model, ids, cfg, opts);
    result.epoch_loss = trainer.run();
    result.total_steps = trainer.total_steps();
    return result;
}

void save_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
    write_vector_text(out, m.input_table());
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    save_embeddings(m, out);
    std::ofstream side(sidecar_path(path));
    if (!side) throw IoError("cannot write " + sidecar_path(path).string());
    side << nlohmann::json{{"train_config", m.config().to_json()}}.dump(2) << '\n';
}

EmbeddingMatrix load_embeddings(std::istream& in, std::optional<TrainConfig> config) {
    auto table = read_vector_text(in);
    TrainConfig cfg = config.value_or(TrainConfig{});
    if (config && config->dim != table.dim()) throw DimMismatch(config->dim, table.dim());
    cfg.dim = table.dim();
    if (cfg.dim == 0) throw FormatError("embedding dim must be positive");
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    // Counts are not persisted; file order is kept by giving earlier rows
    // larger pseudo-counts.
    const auto n = table.size();
    for (std::size_t i = 0; i < n; ++i) entries.emplace_back(table.key(i), n - i);
    EmbeddingMatrix m(Vocabulary::from_counts(std::move(entries)), cfg);
    for (std::size_t i = 0; i < n; ++i) {
        auto dst = m.input(static_cast<std::uint32_t>(i));
        auto src = table.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return m;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::optional<TrainConfig> cfg;
    if (std::ifstream side(sidecar_path(path)); side) {
        auto j = nlohmann::json::parse(side, nullptr, false);
        if (j.is_discarded() || !j.contains("train_config"))
            throw FormatError("bad sidecar " + sidecar_path(path).string());
        cfg = TrainConfig::from_json(j["train_config"]);
    }
    return load_embeddings(in, cfg);
}

}  // namespace grand
