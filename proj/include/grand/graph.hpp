#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace grand {

// Entity and relation ids live in separate namespaces; distinct enum types
// keep them from being mixed up.
enum class EntityId : std::uint32_t {};
enum class RelationId : std::uint32_t {};

constexpr std::uint32_t index_of(EntityId e) noexcept { return static_cast<std::uint32_t>(e); }
constexpr std::uint32_t index_of(RelationId r) noexcept { return static_cast<std::uint32_t>(r); }

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;

    auto operator<=>(const Triple&) const = default;
};

struct ParseReport {
    std::size_t lines = 0;
    std::size_t triples = 0;
    std::size_t literals_skipped = 0;
    std::size_t blank_nodes_skipped = 0;
    std::size_t malformed = 0;
    std::vector<std::size_t> malformed_lines;  // first few offending line numbers

    nlohmann::json to_json() const;
};

enum class ParseMode { Lenient, Strict };

struct ParseResult {
    std::vector<Triple> triples;
    ParseReport report;
};

/// Streams N-Triples from `in`. Literal-object statements are counted and
/// dropped; blank nodes are skipped in lenient mode and rejected in strict
/// mode. Strict mode throws MalformedLine on the first bad line.
ParseResult parse_ntriples(std::istream& in, ParseMode mode = ParseMode::Lenient);

/// Opens `path`, transparently inflating gzip input (detected by magic bytes).
ParseResult parse_ntriples_file(const std::filesystem::path& path,
                                ParseMode mode = ParseMode::Lenient);

struct Edge {
    RelationId relation;
    EntityId target;

    auto operator<=>(const Edge&) const = default;
};

/// Bidirectional IRI <-> dense id table.
class Interner {
public:
    std::uint32_t intern(std::string_view iri);
    std::optional<std::uint32_t> find(std::string_view iri) const;
    const std::string& at(std::uint32_t id) const { return strings_.at(id); }
    std::size_t size() const noexcept { return strings_.size(); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::vector<std::string> strings_;
    std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

/// Immutable directed labeled multigraph with CSR outgoing adjacency.
/// Safe to share across reader threads once built.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    std::size_t num_entities() const noexcept { return entities_.size(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    /// Sorted (relation, target) slice; throws UnknownEntity for bad ids.
    std::span<const Edge> out_neighbors(EntityId e) const;
    std::size_t out_degree(EntityId e) const { return out_neighbors(e).size(); }

    const std::string& entity_iri(EntityId e) const;
    const std::string& relation_iri(RelationId r) const { return relations_.at(index_of(r)); }
    std::optional<EntityId> find_entity(std::string_view iri) const;
    std::optional<RelationId> find_relation(std::string_view iri) const;

    /// Retained triples in (subject id, relation id, target id) order.
    std::vector<Triple> triples() const;

private:
    friend KnowledgeGraph build_graph(std::span<const Triple>,
                                      const std::unordered_set<std::string>&);
    Interner entities_;
    Interner relations_;
    std::vector<std::size_t> offsets_{0};
    std::vector<Edge> edges_;
};

/// Interns subjects/objects as entities and predicates as relations, in order
/// of first appearance. Duplicate triples collapse; triples whose predicate is
/// listed in `excluded_predicates` are dropped before interning.
KnowledgeGraph build_graph(std::span<const Triple> triples,
                           const std::unordered_set<std::string>& excluded_predicates = {});

std::span<const Edge> out_neighbors(const KnowledgeGraph& g, EntityId e);

void write_ntriples(const KnowledgeGraph& g, std::ostream& out);

}  // namespace grand
