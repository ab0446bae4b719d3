#pragma once

#include "grand/dataset.hpp"
#include "grand/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace grand {

/// Typed entities of `coarse x subtypes` classes, each subtype with its own
/// predicates and attribute pool. Attribute objects are sinks. Subtype edges
/// point into a sibling's pool with probability `sibling_target`, so the
/// neighbour signal for the fine classes is noisier than the predicate signal.
/// Entity-to-entity links use shared predicates and prefer same-type targets.
struct SyntheticSpec {
    std::size_t coarse = 3;
    std::size_t subtypes = 2;
    std::size_t per_subtype = 150;
    std::size_t coarse_predicates = 3;
    std::size_t subtype_predicates = 2;
    std::size_t generic_predicates = 3;
    std::size_t coarse_pool = 8;
    std::size_t subtype_pool = 8;
    std::size_t shared_pool = 30;
    std::size_t coarse_edges = 2;
    std::size_t subtype_edges = 2;
    std::size_t generic_edges = 2;
    double coarse_shared = 0.2;   // coarse edge lands in the shared pool
    double sibling_target = 0.35;  // subtype edge lands in the sibling pool
    double subtype_shared = 0.2;   // subtype edge lands in the shared pool
    double link_same_subtype = 0.4;  // entity-to-entity link stays within the subtype
    double link_same_coarse = 0.2;   // ... or within the coarse type
    std::uint64_t seed = 1;
};

struct SyntheticKg {
    std::vector<Triple> triples;
    RawLabels fine;    // entity -> subtype name
    RawLabels coarse;  // entity -> coarse name
    std::vector<std::pair<std::string, std::optional<std::string>>> hierarchy;
};

SyntheticKg generate_synthetic(const SyntheticSpec& spec);

/// Writes graph.nt, labels_fine.tsv, labels_coarse.tsv and hierarchy.tsv.
void write_synthetic(const SyntheticKg& kg, const std::filesystem::path& dir);

/// Experiment over the files written by write_synthetic: order-aware
/// skip-gram (dim 64) on classic, entity and predicate walks; concatenated
/// and entity-only features; coarse, fine and hierarchical classifiers, plus a
/// one-layer coarse classifier whose weight groups are reported.
nlohmann::json synthetic_experiment(const std::string& output_dir = "run");

}  // namespace grand
