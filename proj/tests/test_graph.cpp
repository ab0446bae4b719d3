#include "grand/error.hpp"
#include "grand/graph.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

using namespace grand;
using grand::testing::entity;
using grand::testing::graph_of;
using grand::testing::iri;

namespace {

ParseResult parse(const std::string& text, ParseMode mode = ParseMode::Lenient) {
    std::istringstream in(text);
    return parse_ntriples(in, mode);
}

}  // namespace

TEST_CASE("parse a single IRI triple") {
    auto r = parse("<http://x/A> <http://x/p> <http://x/B> .\n");
    REQUIRE(r.triples.size() == 1);
    CHECK(r.triples[0] == Triple{iri("A"), iri("p"), iri("B")});
    CHECK(r.report.triples == 1);
}

TEST_CASE("literal objects are counted and dropped") {
    auto r = parse("<http://x/A> <http://x/desc> \"hello\" .\n"
                   "<http://x/A> <http://x/desc> \"hi \\\" there\"@en .\n"
                   "<http://x/A> <http://x/n> \"3\"^^<http://www.w3.org/2001/XMLSchema#int> .\n");
    CHECK(r.triples.empty());
    CHECK(r.report.literals_skipped == 3);
}

TEST_CASE("strict mode rejects a truncated statement") {
    try {
        parse("<http://x/A> <http://x/p>\n", ParseMode::Strict);
        FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
        CHECK(e.line() == 1);
    }
}

TEST_CASE("lenient mode reports and continues") {
    auto r = parse("# comment\n\n<http://x/A> <http://x/p>\n<http://x/A> <http://x/p> <http://x/B> .\n"
                   "<http://x/A> <http://x/p> <http://x/B>\n");
    CHECK(r.triples.size() == 1);
    CHECK(r.report.malformed == 2);
    CHECK(r.report.malformed_lines == std::vector<std::size_t>{3, 5});
}

TEST_CASE("blank nodes: skipped when lenient, rejected when strict") {
    const std::string text = "_:b0 <http://x/p> <http://x/B> .\n<http://x/A> <http://x/p> _:b1 .\n";
    auto r = parse(text);
    CHECK(r.triples.empty());
    CHECK(r.report.blank_nodes_skipped == 2);
    CHECK_THROWS_AS(parse(text, ParseMode::Strict), MalformedLine);
}

TEST_CASE("gzip input is inflated transparently") {
    grand::testing::TempDir dir;
    const auto path = dir / "g.nt.gz";
    const std::string text = "<http://x/A> <http://x/p> <http://x/B> .\n<http://x/B> <http://x/q> <http://x/C> .\n";
    gzFile f = gzopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
    auto r = parse_ntriples_file(path);
    CHECK(r.triples.size() == 2);
    CHECK_THROWS_AS(parse_ntriples_file(dir / "missing.nt"), IoError);
}

TEST_CASE("build_graph construction examples") {
    auto g = graph_of({{"A", "p", "B"}, {"B", "q", "C"}});
    CHECK(g.num_entities() == 3);
    CHECK(g.num_relations() == 2);
    CHECK(g.out_degree(entity(g, "A")) == 1);

    auto dup = graph_of({{"A", "p", "B"}, {"A", "p", "B"}});
    CHECK(dup.out_degree(entity(dup, "A")) == 1);
    CHECK(dup.num_edges() == 1);

    auto empty = build_graph(std::vector<Triple>{});
    CHECK(empty.num_entities() == 0);
    CHECK(empty.num_edges() == 0);
}

TEST_CASE("out_neighbors examples") {
    auto g = graph_of({{"A", "p", "B"}});
    auto a = g.out_neighbors(entity(g, "A"));
    REQUIRE(a.size() == 1);
    CHECK(a[0].relation == *g.find_relation(iri("p")));
    CHECK(a[0].target == entity(g, "B"));
    CHECK(g.out_neighbors(entity(g, "B")).empty());
    CHECK_THROWS_AS(g.out_neighbors(EntityId{5}), UnknownEntity);

    // Insertion order q before p still yields relation-id order.
    auto h = graph_of({{"A", "p", "B"}, {"A", "q", "C"}, {"A", "p", "A"}});
    auto n = h.out_neighbors(entity(h, "A"));
    REQUIRE(n.size() == 3);
    const auto p = *h.find_relation(iri("p"));
    const auto q = *h.find_relation(iri("q"));
    CHECK(n[0] == Edge{p, entity(h, "A")});
    CHECK(n[1] == Edge{p, entity(h, "B")});
    CHECK(n[2] == Edge{q, entity(h, "C")});
}

TEST_CASE("excluded predicates are dropped before interning") {
    std::vector<Triple> t{{iri("A"), iri("type"), iri("T")}, {iri("A"), iri("p"), iri("B")}};
    auto g = build_graph(t, {iri("type")});
    CHECK(g.num_entities() == 2);
    CHECK(!g.find_entity(iri("T")));
    CHECK(!g.find_relation(iri("type")));
}

TEST_CASE("property: write/parse round trip preserves the triple set") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto triples = grand::testing::random_triples(rng);
        auto g = build_graph(triples);
        std::stringstream ss;
        write_ntriples(g, ss);
        auto back = build_graph(parse_ntriples(ss, ParseMode::Strict).triples);
        auto a = g.triples();
        auto b = back.triples();
        CHECK(std::set<Triple>(a.begin(), a.end()) == std::set<Triple>(b.begin(), b.end()));
        CHECK(std::set<Triple>(a.begin(), a.end()) ==
              std::set<Triple>(triples.begin(), triples.end()));
    }
}

TEST_CASE("property: degree sum equals retained triples and interning is bijective") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        auto triples = grand::testing::random_triples(rng);
        auto g = build_graph(triples);
        std::size_t degree_sum = 0;
        for (std::uint32_t i = 0; i < g.num_entities(); ++i) {
            const EntityId e{i};
            degree_sum += g.out_degree(e);
            CHECK(g.find_entity(g.entity_iri(e)) == e);
            auto n = g.out_neighbors(e);
            CHECK(std::is_sorted(n.begin(), n.end()));
        }
        for (std::uint32_t r = 0; r < g.num_relations(); ++r)
            CHECK(g.find_relation(g.relation_iri(RelationId{r})) == RelationId{r});
        CHECK(degree_sum == std::set<Triple>(triples.begin(), triples.end()).size());
        CHECK(degree_sum == g.num_edges());
    }
}
