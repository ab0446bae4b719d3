#pragma once

#include "grand/classify.hpp"
#include "grand/embed.hpp"
#include "grand/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string_view>
#include <vector>

// Reference implementations the library is checked against. They are written
// independently of the library code paths they verify.
namespace grand::testing {

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / scale;
}

inline double central_difference(double& param, double h, const std::function<double()>& loss) {
    const double saved = param;
    param = saved + h;
    const double up = loss();
    param = saved - h;
    const double down = loss();
    param = saved;
    return (up - down) / (2 * h);
}

inline TextCorpus corpus_of(const std::vector<std::vector<std::string_view>>& sentences) {
    TextCorpus c;
    for (const auto& s : sentences) c.add_sentence(s);
    return c;
}

/// Worst relative error between microbatch_gradient and central differences
/// over every parameter row the batch touches.
inline double embedding_gradient_error(EmbeddingMatrix& m, const MicroBatch& batch, double h = 1e-4) {
    const auto grad = microbatch_gradient(m, batch);
    auto loss = [&] { return microbatch_loss(m, batch); };
    double worst = 0;
    auto in = m.input(batch.center);
    const auto& gin = grad.input.at(batch.center);
    for (std::size_t k = 0; k < m.dim(); ++k)
        worst = std::max(worst, relative_error(gin[k], central_difference(in[k], h, loss)));
    for (const auto& [key, g] : grad.output) {
        auto out = m.output(key.first, key.second);
        for (std::size_t k = 0; k < m.dim(); ++k)
            worst = std::max(worst, relative_error(g[k], central_difference(out[k], h, loss)));
    }
    return worst;
}

/// Fills every parameter of `m` with U(-scale, scale) draws.
inline void randomize(EmbeddingMatrix& m, Rng& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::uint32_t t = 0; t < m.vocab().size(); ++t) {
        for (auto& v : m.input(t)) v = u(rng);
        for (std::size_t mat = 0; mat < m.num_output_matrices(); ++mat)
            for (auto& v : m.output(mat, t)) v = u(rng);
    }
}

inline MicroBatch random_microbatch(const EmbeddingMatrix& m, Rng& rng) {
    const auto v = static_cast<std::uint32_t>(m.vocab().size());
    const int w = static_cast<int>(m.config().window);
    std::uniform_int_distribution<std::uint32_t> tok(0, v - 1);
    std::uniform_int_distribution<int> off(1, w);
    std::uniform_int_distribution<int> npairs(1, 4);
    MicroBatch b;
    b.center = tok(rng);
    const int n = npairs(rng);
    for (int i = 0; i < n; ++i) {
        PairSample p;
        p.offset = (rng() & 1) ? off(rng) : -off(rng);
        p.context = tok(rng);
        for (std::uint32_t k = 0; k < m.config().negatives; ++k) p.negatives.push_back(tok(rng));
        b.pairs.push_back(std::move(p));
    }
    return b;
}

/// Worst relative error between loss_and_gradient and central differences
/// over every weight and bias of the network.
inline double mlp_gradient_error(Mlp& m, std::span<const double> x, std::span<const LabelSet> labels,
                                 double h = 1e-4) {
    MlpGradient g(m);
    loss_and_gradient(m, x, labels, g, false);
    auto loss = [&] { return batch_loss(m, x, labels); };
    double worst = 0;
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
        auto& layer = m.layers()[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            worst = std::max(worst, relative_error(g.weights[l][i], central_difference(layer.weights[i], h, loss)));
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            worst = std::max(worst, relative_error(g.bias[l][i], central_difference(layer.bias[i], h, loss)));
    }
    return worst;
}

struct OracleMetrics {
    double accuracy = 0;
    double micro_f1 = 0;
    double macro_f1 = 0;
};

/// Counts membership class by class and example by example, straight from
/// the definitions of TP, FP and FN.
inline OracleMetrics brute_force_metrics(const std::vector<LabelSet>& pred,
                                         const std::vector<LabelSet>& gold, std::size_t num_classes) {
    OracleMetrics out;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        exact += std::set<ClassId>(pred[i].begin(), pred[i].end()) ==
                 std::set<ClassId>(gold[i].begin(), gold[i].end());
    out.accuracy = gold.empty() ? 0.0 : double(exact) / double(gold.size());

    std::size_t TP = 0, FP = 0, FN = 0;
    double macro = 0;
    for (ClassId c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool in_pred = std::find(pred[i].begin(), pred[i].end(), c) != pred[i].end();
            const bool in_gold = std::find(gold[i].begin(), gold[i].end(), c) != gold[i].end();
            if (in_pred && in_gold) ++tp;
            else if (in_pred) ++fp;
            else if (in_gold) ++fn;
        }
        TP += tp;
        FP += fp;
        FN += fn;
        if (tp + fp + fn == 0) macro += 1.0;
        else macro += 2.0 * double(tp) / double(2 * tp + fp + fn);
    }
    out.macro_f1 = num_classes ? macro / double(num_classes) : 1.0;
    out.micro_f1 = TP + FP + FN == 0 ? 1.0 : 2.0 * double(TP) / double(2 * TP + FP + FN);
    return out;
}

}  // namespace grand::testing

namespace grand::testing {

/// Random forest of classes where each class picks an earlier class as parent
/// (or none), so the result is acyclic by construction.
inline TypeHierarchy random_hierarchy(Rng& rng, std::size_t max_classes = 12) {
    const std::size_t n = 1 + rng() % max_classes;
    std::vector<std::pair<std::string, std::optional<std::string>>> entries;
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::string> parent;
        if (i > 0 && rng() % 4 != 0) parent = "c" + std::to_string(rng() % i);
        entries.emplace_back("c" + std::to_string(i), parent);
    }
    return TypeHierarchy::from_parents(entries);
}

/// One random linear model per hierarchy level.
inline LplModel random_lpl(Rng& rng, const TypeHierarchy& h, std::size_t input_dim) {
    std::uniform_real_distribution<double> u(-1, 1);
    LplModel model;
    for (std::size_t level = 1; level <= h.depth(); ++level) {
        const auto& classes = h.classes_at_level(level);
        Mlp m({input_dim, classes.size()}, OutputHead::Softmax);
        for (auto& w : m.layers()[0].weights) w = u(rng);
        for (auto& b : m.layers()[0].bias) b = u(rng);
        model.levels.push_back({level, classes, std::move(m)});
    }
    return model;
}

/// Level-by-level argmax then a walk down the hierarchy that stops at the
/// first prediction that is not a child of the accepted class.
inline std::vector<ClassId> reference_hierarchical(const LplModel& model, const TypeHierarchy& h,
                                                   std::span<const double> x) {
    std::vector<ClassId> path;
    for (const auto& level : model.levels) {
        const auto& layer = level.model.layers()[0];
        std::size_t best = 0;
        double best_score = 0;
        for (std::size_t j = 0; j < layer.out; ++j) {
            double s = layer.bias[j];
            for (std::size_t i = 0; i < layer.in; ++i) s += x[i] * layer.weight(i, j);
            if (j == 0 || s > best_score) {
                best = j;
                best_score = s;
            }
        }
        const ClassId c = level.classes[best];
        const auto parent = h.parent(c);
        if (path.empty() ? parent.has_value() : parent != path.back()) break;
        path.push_back(c);
    }
    return path;
}

/// Root first, each element the parent of the next.
inline bool is_root_anchored_chain(const TypeHierarchy& h, const std::vector<ClassId>& path) {
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] >= h.size()) return false;
        const auto parent = h.parent(path[i]);
        if (i == 0 ? parent.has_value() : parent != path[i - 1]) return false;
    }
    return true;
}

}  // namespace grand::testing
