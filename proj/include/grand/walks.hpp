#pragma once

#include "grand/graph.hpp"
#include "grand/util.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grand {

enum class TokenKind : std::uint8_t { Entity, Relation };

struct WalkToken {
    TokenKind kind;
    std::uint32_t id;

    static constexpr WalkToken entity(EntityId e) { return {TokenKind::Entity, index_of(e)}; }
    static constexpr WalkToken relation(RelationId r) { return {TokenKind::Relation, index_of(r)}; }

    bool operator==(const WalkToken&) const = default;
    auto operator<=>(const WalkToken&) const = default;
};

struct Walk {
    std::vector<WalkToken> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool operator==(const Walk&) const = default;
    auto operator<=>(const Walk&) const = default;
};

enum class WalkStrategy { Classic, EntityOnly, PredicateOnly };

WalkStrategy parse_walk_strategy(std::string_view name);
std::string_view to_string(WalkStrategy s);

struct WalkConfig {
    std::uint32_t depth = 8;
    std::uint32_t walks_per_entity = 500;
    WalkStrategy strategy = WalkStrategy::Classic;
    std::uint64_t seed = 0;
    bool dedup = true;
    int threads = 0;  // 0: OpenMP default

    void validate() const;
};

struct WalkCorpus {
    std::vector<Walk> walks;
    WalkConfig source_config;

    std::size_t total_tokens() const;
};

/// Entity, Relation, Entity, ... starting and ending with an entity.
bool is_classic_walk(const Walk& w);

/// Forward uniform random walks from `start`. A walk stops early at a sink.
/// With dedup, draws up to 3x walks_per_entity attempts collecting distinct
/// walks; without, exactly walks_per_entity attempts. Order of first draw is
/// preserved.
std::vector<Walk> generate_classic_walks(const KnowledgeGraph& g, EntityId start,
                                         const WalkConfig& cfg, Rng& rng);

Walk derive_entity_walk(const Walk& w);
Walk derive_predicate_walk(const Walk& w);

/// Per-entity generator seed; independent of worker scheduling.
std::uint64_t entity_walk_seed(std::uint64_t seed, EntityId e);

/// Walks for every entity under cfg.strategy, merged in entity-id order.
/// Parallel over entities; output is identical to generate_corpus_serial.
WalkCorpus generate_corpus(const KnowledgeGraph& g, const WalkConfig& cfg);
WalkCorpus generate_corpus_serial(const KnowledgeGraph& g, const WalkConfig& cfg);

/// Classic walks generated once and all three strategy corpora derived from
/// them, so trainings over different strategies see the same underlying walks.
struct WalkCorpora {
    WalkCorpus classic;
    WalkCorpus entity;
    WalkCorpus predicate;
};
WalkCorpora generate_all_corpora(const KnowledgeGraph& g, const WalkConfig& cfg);

/// One walk per line, tokens are IRIs separated by single spaces.
void write_corpus(const WalkCorpus& c, const KnowledgeGraph& g, std::ostream& out);

/// Interned token sequences read from a corpus file. Tokens are plain strings
/// until resolved against a graph or turned into a vocabulary.
class TextCorpus {
public:
    std::size_t size() const noexcept { return offsets_.size() - 1; }
    std::size_t total_tokens() const noexcept { return ids_.size(); }
    std::size_t distinct_tokens() const noexcept { return table_.size(); }

    std::span<const std::uint32_t> sentence(std::size_t i) const {
        return std::span<const std::uint32_t>(ids_).subspan(offsets_[i],
                                                            offsets_[i + 1] - offsets_[i]);
    }
    const std::string& token(std::uint32_t id) const { return table_.at(id); }

    void add_sentence(std::span<const std::string_view> tokens);

    static TextCorpus from_walks(const WalkCorpus& c, const KnowledgeGraph& g);

private:
    Interner table_;
    std::vector<std::uint32_t> ids_;
    std::vector<std::size_t> offsets_{0};
};

TextCorpus read_corpus(std::istream& in);

/// Maps each token back to graph ids; the token kinds are inferred from the
/// strategy's layout. Throws TokenNotInGraph.
WalkCorpus resolve_corpus(const TextCorpus& text, const KnowledgeGraph& g,
                          WalkStrategy strategy);

}  // namespace grand
