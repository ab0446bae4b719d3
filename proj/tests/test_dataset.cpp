#include "grand/dataset.hpp"
#include "grand/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace grand;

namespace {

RawLabels ten_entities() {
    RawLabels rows;
    for (int i = 0; i < 10; ++i) rows.push_back({"http://x/e" + std::to_string(i), {i % 2 ? "B" : "A"}});
    return rows;
}

std::set<std::string> entities_of(const std::vector<LabeledExample>& xs) {
    std::set<std::string> out;
    for (const auto& x : xs) out.insert(x.entity);
    return out;
}

TypeHierarchy small_hierarchy() {
    return TypeHierarchy::from_parents({{"A", std::nullopt}, {"A.1", "A"}, {"B", std::nullopt}});
}

}  // namespace

TEST_CASE("automatic split sizes and disjointness") {
    DatasetOptions opts;
    opts.split_seed = 5;
    auto ds = make_dataset(ten_entities(), std::nullopt, opts);
    CHECK(ds.train.size() == 5);
    CHECK(ds.test.size() == 3);
    CHECK(ds.validation.size() == 2);
    auto tr = entities_of(ds.train), te = entities_of(ds.test), va = entities_of(ds.validation);
    std::set<std::string> all = tr;
    all.insert(te.begin(), te.end());
    all.insert(va.begin(), va.end());
    CHECK(all.size() == 10);
    CHECK(ds.class_names == std::vector<std::string>{"A", "B"});

    auto again = make_dataset(ten_entities(), std::nullopt, opts);
    CHECK(ds.all_entities() == again.all_entities());
    opts.split_seed = 6;
    CHECK(make_dataset(ten_entities(), std::nullopt, opts).all_entities() != ds.all_entities());

    CHECK(auto_split_sizes(100).train == 50);
    CHECK(auto_split_sizes(100).test == 30);
    CHECK(auto_split_sizes(100).validation == 20);
}

TEST_CASE("label file parsing merges repeated entities") {
    std::istringstream in("# comment\nhttp://x/a\tB,A\nhttp://x/b\tA\nhttp://x/a\tC\n");
    auto rows = read_labels(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].second == std::vector<std::string>{"A", "B", "C"});
    std::istringstream bad("http://x/a A\n");
    CHECK_THROWS_AS(read_labels(bad), FormatError);
}

TEST_CASE("hierarchy-aware datasets") {
    RawLabels rows{{"http://x/a", {"A.1"}}, {"http://x/b", {"B"}}, {"http://x/c", {"Z"}}};
    DatasetOptions opts;
    opts.regime = Regime::Hierarchical;
    try {
        make_dataset(rows, small_hierarchy(), opts);
        FAIL("expected UnknownClass");
    } catch (const UnknownClass& e) {
        CHECK(std::string(e.what()).find("Z") != std::string::npos);
    }
    rows.pop_back();
    auto ds = make_dataset(rows, small_hierarchy(), opts);
    CHECK(ds.class_names == small_hierarchy().names());

    DatasetOptions level;
    level.label_level = 2;
    auto l2 = make_dataset(rows, small_hierarchy(), level);
    CHECK(l2.all_entities() == std::vector<std::string>{"http://x/a"});
    CHECK(l2.class_names == std::vector<std::string>{"A.1"});

    level.label_level = 1;
    auto l1 = make_dataset(rows, small_hierarchy(), level);
    CHECK(l1.class_names == std::vector<std::string>{"A", "B"});

    CHECK_THROWS_AS(make_dataset(rows, std::nullopt, opts), Error);
}

TEST_CASE("explicit splits") {
    DatasetOptions opts;
    opts.train_entities = {"http://x/e0", "http://x/e1"};
    opts.test_entities = {"http://x/e2"};
    opts.validation_entities = {"http://x/e3", "http://x/unlabeled"};
    auto ds = make_dataset(ten_entities(), std::nullopt, opts);
    CHECK(ds.train.size() == 2);
    CHECK(ds.test.size() == 1);
    CHECK(ds.validation.size() == 1);

    opts.test_entities.push_back("http://x/e1");
    CHECK_THROWS_AS(make_dataset(ten_entities(), std::nullopt, opts), OverlapSplit);
}

TEST_CASE("multi-class regime rejects multi-label rows") {
    RawLabels rows{{"http://x/a", {"A", "B"}}};
    CHECK_THROWS_AS(make_dataset(rows, std::nullopt, DatasetOptions{}), Error);
    DatasetOptions ml;
    ml.regime = Regime::MultiLabel;
    auto ds = make_dataset(rows, std::nullopt, ml);
    CHECK(ds.num_classes() == 2);
    CHECK(parse_regime("lpl") == Regime::Hierarchical);
    CHECK_THROWS_AS(parse_regime("flat"), Error);
}

TEST_CASE("feature gathering reports missing entities") {
    VectorTable t(2);
    const double v[] = {1, 2};
    t.put("http://x/a", v);
    std::vector<LabeledExample> xs{{"http://x/a", {0}}};
    auto data = to_training_data(xs, t, 3);
    CHECK(data.size() == 1);
    CHECK(data.num_classes == 3);
    xs.push_back({"http://x/b", {1}});
    try {
        to_training_data(xs, t, 3);
        FAIL("expected MissingFeature");
    } catch (const MissingFeature& e) {
        CHECK(std::string(e.what()).find("http://x/b") != std::string::npos);
    }
}
