#include "grand/walks.hpp"

#include "grand/error.hpp"

#include <omp.h>

#include <istream>
#include <ostream>
#include <unordered_set>

namespace grand {

namespace {

struct WalkHash {
    std::size_t operator()(const Walk& w) const noexcept {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (const auto& t : w.tokens) {
            h ^= (static_cast<std::uint64_t>(t.id) << 1) | static_cast<std::uint64_t>(t.kind);
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

void dedup_in_place(std::vector<Walk>& walks) {
    std::unordered_set<Walk, WalkHash> seen;
    seen.reserve(walks.size() * 2);
    std::vector<Walk> kept;
    kept.reserve(walks.size());
    for (auto& w : walks) {
        if (seen.insert(w).second) kept.push_back(std::move(w));
    }
    walks = std::move(kept);
}

Walk random_walk(const KnowledgeGraph& g, EntityId start, std::uint32_t depth, Rng& rng) {
    Walk w;
    w.tokens.reserve(2 * depth + 1);
    w.tokens.push_back(WalkToken::entity(start));
    EntityId current = start;
    for (std::uint32_t hop = 0; hop < depth; ++hop) {
        auto edges = g.out_neighbors(current);
        if (edges.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        const Edge& e = edges[pick(rng)];
        w.tokens.push_back(WalkToken::relation(e.relation));
        w.tokens.push_back(WalkToken::entity(e.target));
        current = e.target;
    }
    return w;
}

void require_classic(const Walk& w) {
    if (!is_classic_walk(w)) throw NotClassicWalk("walk does not alternate entity/relation");
}

std::vector<Walk> apply_strategy(std::vector<Walk> classic, WalkStrategy strategy, bool dedup) {
    if (strategy == WalkStrategy::Classic) return classic;
    std::vector<Walk> out;
    out.reserve(classic.size());
    for (const auto& w : classic) {
        out.push_back(strategy == WalkStrategy::EntityOnly ? derive_entity_walk(w)
                                                           : derive_predicate_walk(w));
    }
    if (dedup) dedup_in_place(out);
    return out;
}

std::vector<Walk> entity_block(const KnowledgeGraph& g, EntityId e, const WalkConfig& cfg) {
    Rng rng(entity_walk_seed(cfg.seed, e));
    return apply_strategy(generate_classic_walks(g, e, cfg, rng), cfg.strategy, cfg.dedup);
}

WalkCorpus merge_blocks(std::vector<std::vector<Walk>>& blocks, const WalkConfig& cfg) {
    WalkCorpus corpus;
    corpus.source_config = cfg;
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.size();
    corpus.walks.reserve(total);
    for (auto& b : blocks) {
        for (auto& w : b) corpus.walks.push_back(std::move(w));
    }
    return corpus;
}

}  // namespace

WalkStrategy parse_walk_strategy(std::string_view name) {
    if (name == "classic") return WalkStrategy::Classic;
    if (name == "entity" || name == "e") return WalkStrategy::EntityOnly;
    if (name == "predicate" || name == "p") return WalkStrategy::PredicateOnly;
    throw Error("unknown walk strategy '" + std::string(name) + "'");
}

std::string_view to_string(WalkStrategy s) {
    switch (s) {
        case WalkStrategy::Classic: return "classic";
        case WalkStrategy::EntityOnly: return "entity";
        case WalkStrategy::PredicateOnly: return "predicate";
    }
    return "classic";
}

void WalkConfig::validate() const {
    if (depth < 1) throw Error("walk depth must be >= 1");
    if (walks_per_entity < 1) throw Error("walks per entity must be >= 1");
}

std::size_t WalkCorpus::total_tokens() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
}

bool is_classic_walk(const Walk& w) {
    if (w.tokens.empty() || w.tokens.size() % 2 == 0) return false;
    for (std::size_t i = 0; i < w.tokens.size(); ++i) {
        auto expected = (i % 2 == 0) ? TokenKind::Entity : TokenKind::Relation;
        if (w.tokens[i].kind != expected) return false;
    }
    return true;
}

std::vector<Walk> generate_classic_walks(const KnowledgeGraph& g, EntityId start,
                                         const WalkConfig& cfg, Rng& rng) {
    g.out_neighbors(start);  // validates the id
    std::vector<Walk> walks;
    if (!cfg.dedup) {
        walks.reserve(cfg.walks_per_entity);
        for (std::uint32_t i = 0; i < cfg.walks_per_entity; ++i)
            walks.push_back(random_walk(g, start, cfg.depth, rng));
        return walks;
    }
    std::unordered_set<Walk, WalkHash> seen;
    const std::uint64_t max_attempts = 3ULL * cfg.walks_per_entity;
    for (std::uint64_t attempt = 0;
         attempt < max_attempts && walks.size() < cfg.walks_per_entity; ++attempt) {
        auto w = random_walk(g, start, cfg.depth, rng);
        if (seen.insert(w).second) walks.push_back(std::move(w));
    }
    return walks;
}

Walk derive_entity_walk(const Walk& w) {
    require_classic(w);
    Walk out;
    out.tokens.reserve(w.size() / 2 + 1);
    for (std::size_t i = 0; i < w.size(); i += 2) out.tokens.push_back(w.tokens[i]);
    return out;
}

Walk derive_predicate_walk(const Walk& w) {
    require_classic(w);
    Walk out;
    out.tokens.reserve(w.size() / 2 + 1);
    out.tokens.push_back(w.tokens.front());
    for (std::size_t i = 1; i < w.size(); i += 2) out.tokens.push_back(w.tokens[i]);
    return out;
}

std::uint64_t entity_walk_seed(std::uint64_t seed, EntityId e) {
    return derive_seed(seed, index_of(e));
}

WalkCorpus generate_corpus_serial(const KnowledgeGraph& g, const WalkConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<Walk>> blocks(g.num_entities());
    for (std::uint32_t e = 0; e < g.num_entities(); ++e)
        blocks[e] = entity_block(g, EntityId{e}, cfg);
    return merge_blocks(blocks, cfg);
}

WalkCorpus generate_corpus(const KnowledgeGraph& g, const WalkConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::int64_t>(g.num_entities());
    std::vector<std::vector<Walk>> blocks(g.num_entities());
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::int64_t e = 0; e < n; ++e)
        blocks[e] = entity_block(g, EntityId{static_cast<std::uint32_t>(e)}, cfg);
    return merge_blocks(blocks, cfg);
}

WalkCorpora generate_all_corpora(const KnowledgeGraph& g, const WalkConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::int64_t>(g.num_entities());
    std::vector<std::vector<Walk>> classic(g.num_entities()), entity(g.num_entities()),
        predicate(g.num_entities());
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        EntityId e{static_cast<std::uint32_t>(i)};
        Rng rng(entity_walk_seed(cfg.seed, e));
        classic[i] = generate_classic_walks(g, e, cfg, rng);
        entity[i] = apply_strategy(classic[i], WalkStrategy::EntityOnly, cfg.dedup);
        predicate[i] = apply_strategy(classic[i], WalkStrategy::PredicateOnly, cfg.dedup);
    }
    auto with = [&](WalkStrategy s) {
        auto c = cfg;
        c.strategy = s;
        return c;
    };
    return {merge_blocks(classic, with(WalkStrategy::Classic)),
            merge_blocks(entity, with(WalkStrategy::EntityOnly)),
            merge_blocks(predicate, with(WalkStrategy::PredicateOnly))};
}

void write_corpus(const WalkCorpus& c, const KnowledgeGraph& g, std::ostream& out) {
    std::string line;
    for (const auto& w : c.walks) {
        line.clear();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) line.push_back(' ');
            const auto& t = w.tokens[i];
            line += t.kind == TokenKind::Entity ? g.entity_iri(EntityId{t.id})
                                                : g.relation_iri(RelationId{t.id});
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out) throw IoError("failed writing corpus");
}

void TextCorpus::add_sentence(std::span<const std::string_view> tokens) {
    for (auto t : tokens) ids_.push_back(table_.intern(t));
    offsets_.push_back(ids_.size());
}

TextCorpus TextCorpus::from_walks(const WalkCorpus& c, const KnowledgeGraph& g) {
    TextCorpus text;
    std::vector<std::string_view> tokens;
    for (const auto& w : c.walks) {
        tokens.clear();
        for (const auto& t : w.tokens) {
            tokens.push_back(t.kind == TokenKind::Entity ? std::string_view(g.entity_iri(EntityId{t.id}))
                                                         : std::string_view(g.relation_iri(RelationId{t.id})));
        }
        text.add_sentence(tokens);
    }
    return text;
}

TextCorpus read_corpus(std::istream& in) {
    TextCorpus text;
    std::string line;
    std::vector<std::string_view> tokens;
    while (std::getline(in, line)) {
        tokens.clear();
        std::string_view rest = line;
        if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
        for (auto tok : split(rest, ' ')) {
            if (!tok.empty()) tokens.push_back(tok);
        }
        if (tokens.empty()) continue;
        text.add_sentence(tokens);
    }
    if (in.bad()) throw IoError("failed reading corpus");
    return text;
}

WalkCorpus resolve_corpus(const TextCorpus& text, const KnowledgeGraph& g, WalkStrategy strategy) {
    WalkCorpus corpus;
    corpus.source_config.strategy = strategy;
    corpus.walks.reserve(text.size());
    auto entity = [&](const std::string& iri) {
        auto e = g.find_entity(iri);
        if (!e) throw TokenNotInGraph(iri);
        return WalkToken::entity(*e);
    };
    auto relation = [&](const std::string& iri) {
        auto r = g.find_relation(iri);
        if (!r) throw TokenNotInGraph(iri);
        return WalkToken::relation(*r);
    };
    for (std::size_t s = 0; s < text.size(); ++s) {
        Walk w;
        auto ids = text.sentence(s);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto& tok = text.token(ids[i]);
            bool is_entity = false;
            switch (strategy) {
                case WalkStrategy::Classic: is_entity = (i % 2 == 0); break;
                case WalkStrategy::EntityOnly: is_entity = true; break;
                case WalkStrategy::PredicateOnly: is_entity = (i == 0); break;
            }
            w.tokens.push_back(is_entity ? entity(tok) : relation(tok));
        }
        corpus.walks.push_back(std::move(w));
    }
    return corpus;
}

}  // namespace grand
