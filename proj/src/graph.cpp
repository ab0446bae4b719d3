#include "grand/graph.hpp"

#include "grand/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <streambuf>

namespace grand {

nlohmann::json ParseReport::to_json() const {
    return {{"lines", lines},
            {"triples", triples},
            {"literals_skipped", literals_skipped},
            {"blank_nodes_skipped", blank_nodes_skipped},
            {"malformed", malformed}};
}

namespace {

enum class TermKind { Iri, BlankNode, Literal };

struct Term {
    TermKind kind;
    std::string_view text;
};

struct LineError {
    std::string reason;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

void skip_ws(std::string_view line, std::size_t& pos) {
    while (pos < line.size() && is_space(line[pos])) ++pos;
}

// Reads one term starting at `pos`. Returns nullopt and fills `err` on a
// grammar violation.
std::optional<Term> read_term(std::string_view line, std::size_t& pos, LineError& err) {
    if (pos >= line.size()) {
        err.reason = "unexpected end of line";
        return std::nullopt;
    }
    char c = line[pos];
    if (c == '<') {
        auto close = line.find('>', pos + 1);
        if (close == std::string_view::npos) {
            err.reason = "unterminated IRI";
            return std::nullopt;
        }
        auto iri = line.substr(pos + 1, close - pos - 1);
        if (iri.empty() || std::any_of(iri.begin(), iri.end(), [](char ch) {
                return ch == ' ' || ch == '\t' || ch == '<' || ch == '"';
            })) {
            err.reason = "invalid IRI";
            return std::nullopt;
        }
        pos = close + 1;
        return Term{TermKind::Iri, iri};
    }
    if (c == '_' && pos + 1 < line.size() && line[pos + 1] == ':') {
        auto start = pos;
        pos += 2;
        while (pos < line.size() && !is_space(line[pos])) ++pos;
        if (pos == start + 2) {
            err.reason = "empty blank node label";
            return std::nullopt;
        }
        return Term{TermKind::BlankNode, line.substr(start, pos - start)};
    }
    if (c == '"') {
        auto start = pos++;
        bool closed = false;
        while (pos < line.size()) {
            if (line[pos] == '\\') {
                pos += 2;
                continue;
            }
            if (line[pos] == '"') {
                closed = true;
                ++pos;
                break;
            }
            ++pos;
        }
        if (!closed) {
            err.reason = "unterminated literal";
            return std::nullopt;
        }
        if (pos < line.size() && line[pos] == '@') {
            ++pos;
            while (pos < line.size() && !is_space(line[pos]) && line[pos] != '.') ++pos;
        } else if (line.substr(pos, 2) == "^^") {
            pos += 2;
            LineError dt_err;
            auto dt = read_term(line, pos, dt_err);
            if (!dt || dt->kind != TermKind::Iri) {
                err.reason = "invalid literal datatype";
                return std::nullopt;
            }
        }
        return Term{TermKind::Literal, line.substr(start, pos - start)};
    }
    err.reason = "unexpected character '" + std::string(1, c) + "'";
    return std::nullopt;
}

enum class LineKind { Skip, Triple, Literal, BlankNode, Malformed };

struct LineOutcome {
    LineKind kind = LineKind::Skip;
    Triple triple;
    std::string reason;
};

LineOutcome parse_line(std::string_view line) {
    LineOutcome out;
    std::size_t pos = 0;
    skip_ws(line, pos);
    if (pos == line.size() || line[pos] == '#') return out;

    LineError err;
    std::array<Term, 3> terms{};
    for (std::size_t i = 0; i < 3; ++i) {
        auto t = read_term(line, pos, err);
        if (!t) {
            out.kind = LineKind::Malformed;
            out.reason = err.reason;
            return out;
        }
        terms[i] = *t;
        skip_ws(line, pos);
    }
    if (pos >= line.size() || line[pos] != '.') {
        out.kind = LineKind::Malformed;
        out.reason = "missing terminating '.'";
        return out;
    }
    ++pos;
    skip_ws(line, pos);
    if (pos < line.size() && line[pos] != '#') {
        out.kind = LineKind::Malformed;
        out.reason = "trailing content after '.'";
        return out;
    }
    if (terms[0].kind == TermKind::Literal || terms[1].kind != TermKind::Iri) {
        out.kind = LineKind::Malformed;
        out.reason = "subject must be a node and predicate an IRI";
        return out;
    }
    if (terms[2].kind == TermKind::Literal) {
        out.kind = LineKind::Literal;
        return out;
    }
    if (terms[0].kind == TermKind::BlankNode || terms[2].kind == TermKind::BlankNode) {
        out.kind = LineKind::BlankNode;
        return out;
    }
    out.kind = LineKind::Triple;
    out.triple = {std::string(terms[0].text), std::string(terms[1].text),
                  std::string(terms[2].text)};
    return out;
}

// Minimal istream adapter over a zlib gzFile.
class GzStreamBuf : public std::streambuf {
public:
    explicit GzStreamBuf(const std::filesystem::path& path)
        : file_(gzopen(path.c_str(), "rb")) {
        if (!file_) throw IoError("cannot open " + path.string());
    }
    ~GzStreamBuf() override {
        if (file_) gzclose(file_);
    }
    GzStreamBuf(const GzStreamBuf&) = delete;
    GzStreamBuf& operator=(const GzStreamBuf&) = delete;

protected:
    int_type underflow() override {
        if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
        int n = gzread(file_, buffer_.data(), static_cast<unsigned>(buffer_.size()));
        if (n < 0) throw IoError("gzip read error");
        if (n == 0) return traits_type::eof();
        setg(buffer_.data(), buffer_.data(), buffer_.data() + n);
        return traits_type::to_int_type(*gptr());
    }

private:
    gzFile file_;
    std::array<char, 1 << 16> buffer_{};
};

bool has_gzip_magic(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    return probe.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

constexpr std::size_t kMaxRecordedMalformed = 32;

}  // namespace

ParseResult parse_ntriples(std::istream& in, ParseMode mode) {
    ParseResult result;
    auto& rep = result.report;
    std::string line;
    while (std::getline(in, line)) {
        ++rep.lines;
        auto outcome = parse_line(line);
        switch (outcome.kind) {
            case LineKind::Skip:
                break;
            case LineKind::Triple:
                ++rep.triples;
                result.triples.push_back(std::move(outcome.triple));
                break;
            case LineKind::Literal:
                ++rep.literals_skipped;
                break;
            case LineKind::BlankNode:
                if (mode == ParseMode::Strict) throw MalformedLine(rep.lines, "blank node");
                ++rep.blank_nodes_skipped;
                break;
            case LineKind::Malformed:
                if (mode == ParseMode::Strict) throw MalformedLine(rep.lines, outcome.reason);
                ++rep.malformed;
                if (rep.malformed_lines.size() < kMaxRecordedMalformed)
                    rep.malformed_lines.push_back(rep.lines);
                break;
        }
    }
    if (in.bad()) throw IoError("read error while parsing N-Triples");
    return result;
}

ParseResult parse_ntriples_file(const std::filesystem::path& path, ParseMode mode) {
    if (has_gzip_magic(path)) {
        GzStreamBuf buf(path);
        std::istream in(&buf);
        return parse_ntriples(in, mode);
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_ntriples(in, mode);
}

std::uint32_t Interner::intern(std::string_view iri) {
    if (auto it = index_.find(iri); it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(strings_.size());
    strings_.emplace_back(iri);
    index_.emplace(strings_.back(), id);
    return id;
}

std::optional<std::uint32_t> Interner::find(std::string_view iri) const {
    if (auto it = index_.find(iri); it != index_.end()) return it->second;
    return std::nullopt;
}

std::span<const Edge> KnowledgeGraph::out_neighbors(EntityId e) const {
    auto i = index_of(e);
    if (i >= entities_.size()) throw UnknownEntity(i);
    return std::span<const Edge>(edges_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

const std::string& KnowledgeGraph::entity_iri(EntityId e) const {
    if (index_of(e) >= entities_.size()) throw UnknownEntity(index_of(e));
    return entities_.at(index_of(e));
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view iri) const {
    if (auto id = entities_.find(iri)) return EntityId{*id};
    return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view iri) const {
    if (auto id = relations_.find(iri)) return RelationId{*id};
    return std::nullopt;
}

std::vector<Triple> KnowledgeGraph::triples() const {
    std::vector<Triple> out;
    out.reserve(edges_.size());
    for (std::uint32_t s = 0; s < entities_.size(); ++s) {
        for (const auto& edge : out_neighbors(EntityId{s})) {
            out.push_back({entities_.at(s), relations_.at(index_of(edge.relation)),
                           entities_.at(index_of(edge.target))});
        }
    }
    return out;
}

KnowledgeGraph build_graph(std::span<const Triple> triples,
                           const std::unordered_set<std::string>& excluded_predicates) {
    KnowledgeGraph g;
    std::vector<std::pair<std::uint32_t, Edge>> raw;
    raw.reserve(triples.size());
    for (const auto& t : triples) {
        if (excluded_predicates.contains(t.predicate)) continue;
        auto s = g.entities_.intern(t.subject);
        auto r = g.relations_.intern(t.predicate);
        auto o = g.entities_.intern(t.object);
        raw.push_back({s, Edge{RelationId{r}, EntityId{o}}});
    }
    std::sort(raw.begin(), raw.end());
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

    const auto n = g.entities_.size();
    g.offsets_.assign(n + 1, 0);
    for (const auto& [s, edge] : raw) ++g.offsets_[s + 1];
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.edges_.reserve(raw.size());
    for (const auto& [s, edge] : raw) g.edges_.push_back(edge);
    return g;
}

std::span<const Edge> out_neighbors(const KnowledgeGraph& g, EntityId e) {
    return g.out_neighbors(e);
}

void write_ntriples(const KnowledgeGraph& g, std::ostream& out) {
    for (const auto& t : g.triples())
        out << '<' << t.subject << "> <" << t.predicate << "> <" << t.object << "> .\n";
}

}  // namespace grand
