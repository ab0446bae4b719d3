#include "grand/eval.hpp"

#include "grand/error.hpp"

#include <algorithm>
#include <cmath>

namespace grand {

void PredictionSet::add(LabelSet pred, LabelSet truth) {
    std::sort(pred.begin(), pred.end());
    pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
    predicted.push_back(std::move(pred));
    gold.push_back(std::move(truth));
}

double f1_score(const ClassCounts& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

std::vector<ClassCounts> per_class_counts(const PredictionSet& p, std::size_t num_classes) {
    std::vector<ClassCounts> counts(num_classes);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& pred = p.predicted[i];
        const auto& gold = p.gold[i];
        // Both sets are sorted; walk them together.
        std::size_t a = 0, b = 0;
        while (a < pred.size() || b < gold.size()) {
            if (b == gold.size() || (a < pred.size() && pred[a] < gold[b])) {
                ++counts.at(pred[a++]).fp;
            } else if (a == pred.size() || gold[b] < pred[a]) {
                ++counts.at(gold[b++]).fn;
            } else {
                ++counts.at(pred[a]).tp;
                ++a;
                ++b;
            }
        }
    }
    return counts;
}

double accuracy(const PredictionSet& p) {
    if (p.size() == 0) return 1.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hits += p.predicted[i] == p.gold[i];
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

double micro_f1(const PredictionSet& p, std::size_t num_classes) {
    ClassCounts pooled;
    for (const auto& c : per_class_counts(p, num_classes)) {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
    }
    return f1_score(pooled);
}

double macro_f1(const PredictionSet& p, std::size_t num_classes) {
    if (num_classes == 0) return 1.0;
    double sum = 0;
    for (const auto& c : per_class_counts(p, num_classes)) sum += f1_score(c);
    return sum / static_cast<double>(num_classes);
}

Metrics evaluate(const PredictionSet& p, std::size_t num_classes) {
    Metrics m;
    m.per_class = per_class_counts(p, num_classes);
    m.accuracy = accuracy(p);
    ClassCounts pooled;
    double sum = 0;
    for (const auto& c : m.per_class) {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
        sum += f1_score(c);
    }
    m.micro_f1 = f1_score(pooled);
    m.macro_f1 = num_classes ? sum / static_cast<double>(num_classes) : 1.0;
    return m;
}

nlohmann::json Metrics::to_json(const std::vector<std::string>& class_names) const {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const auto& k = per_class[c];
        nlohmann::json row{{"class", c < class_names.size() ? nlohmann::json(class_names[c])
                                                            : nlohmann::json(c)},
                           {"tp", k.tp},
                           {"fp", k.fp},
                           {"fn", k.fn},
                           {"f1", f1_score(k)}};
        per.push_back(std::move(row));
    }
    return {{"accuracy", accuracy}, {"micro_f1", micro_f1}, {"macro_f1", macro_f1},
            {"per_class", per}};
}

nlohmann::json WeightReport::to_json() const {
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [name, frac] : fractions) parts[name] = frac;
    return {{"epoch", epoch}, {"fractions", parts}};
}

WeightReport weight_group_analysis(const Mlp& m, const SegmentMap& segments, std::size_t epoch) {
    const auto& first = m.layers().front();
    if (segment_span(segments) != first.in) throw DimMismatch(first.in, segment_span(segments));
    WeightReport report;
    report.epoch = epoch;
    std::vector<double> sums;
    double total = 0;
    for (const auto& seg : segments) {
        double s = 0;
        for (std::size_t k = seg.offset; k < seg.offset + seg.length; ++k)
            for (std::size_t j = 0; j < first.out; ++j) s += std::abs(first.weight(k, j));
        sums.push_back(s);
        total += s;
    }
    for (std::size_t i = 0; i < segments.size(); ++i)
        report.fractions.emplace_back(segments[i].part, total > 0 ? sums[i] / total : 0.0);
    return report;
}

}  // namespace grand
