#pragma once

#include "grand/classify.hpp"
#include "grand/represent.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace grand {

struct PredictionSet {
    std::vector<LabelSet> predicted;
    std::vector<LabelSet> gold;

    void add(LabelSet pred, LabelSet truth);
    std::size_t size() const noexcept { return gold.size(); }
};

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// F1 of one count triple; a class with no TP, FP or FN scores 1.
double f1_score(const ClassCounts& c);

std::vector<ClassCounts> per_class_counts(const PredictionSet& p, std::size_t num_classes);

/// Exact set match rate.
double accuracy(const PredictionSet& p);
double micro_f1(const PredictionSet& p, std::size_t num_classes);
double macro_f1(const PredictionSet& p, std::size_t num_classes);

struct Metrics {
    double accuracy = 0;
    double micro_f1 = 0;
    double macro_f1 = 0;
    std::vector<ClassCounts> per_class;

    nlohmann::json to_json(const std::vector<std::string>& class_names = {}) const;
};

Metrics evaluate(const PredictionSet& p, std::size_t num_classes);

/// Share of first-layer |weight| mass attached to each input segment.
struct WeightReport {
    std::size_t epoch = 0;
    std::vector<std::pair<std::string, double>> fractions;

    nlohmann::json to_json() const;
};

/// Throws DimMismatch when the segments do not span the model input.
WeightReport weight_group_analysis(const Mlp& m, const SegmentMap& segments, std::size_t epoch);

}  // namespace grand
