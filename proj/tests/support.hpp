#pragma once

#include "grand/graph.hpp"
#include "grand/util.hpp"

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace grand::testing {

inline std::string iri(const std::string& local) { return "http://x/" + local; }

inline KnowledgeGraph graph_of(const std::vector<std::array<const char*, 3>>& spo) {
    std::vector<Triple> triples;
    for (const auto& t : spo) triples.push_back({iri(t[0]), iri(t[1]), iri(t[2])});
    return build_graph(triples);
}

inline EntityId entity(const KnowledgeGraph& g, const std::string& local) {
    return *g.find_entity(iri(local));
}

/// Random multigraph with up to `max_entities` entities and a handful of relations.
inline std::vector<Triple> random_triples(Rng& rng, std::size_t max_entities = 50) {
    std::uniform_int_distribution<std::size_t> n_dist(1, max_entities);
    const std::size_t n = n_dist(rng);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> rel(0, 4);
    std::uniform_int_distribution<std::size_t> edges(0, 3 * n);
    std::vector<Triple> triples;
    const std::size_t m = edges(rng);
    for (std::size_t i = 0; i < m; ++i)
        triples.push_back({iri("e" + std::to_string(pick(rng))), iri("r" + std::to_string(rel(rng))),
                           iri("e" + std::to_string(pick(rng)))});
    // Make sure every entity exists even without edges.
    if (triples.empty()) triples.push_back({iri("e0"), iri("r0"), iri("e0")});
    return triples;
}

class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("grand-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace grand::testing
