#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lemda/dataset.hpp"
#include "lemda/error.hpp"
#include "support.hpp"

using namespace lemda;

namespace {

std::vector<ColumnSchema> flgs_schema() {
    return {{"Flgs", ColumnKind::categorical}, {"Rate", ColumnKind::numeric},
            {"Label", ColumnKind::label}};
}

Dataset read(const std::string& text, const std::vector<ColumnSchema>& schema,
             const LabelMapping& mapping = {}) {
    std::istringstream in(text);
    return read_csv(in, schema, mapping);
}

}  // namespace

TEST(LoadCsv, MinimalThreeRowFile) {
    const auto d = read("Flgs,Rate,Label\ne,1.5,0\ne s,2,1\ne,3e2,0\n", flgs_schema());
    EXPECT_EQ(d.rows(), 3u);
    EXPECT_EQ(d.column("Flgs").text(1), "e s");
    EXPECT_DOUBLE_EQ(d.column("Rate").values[2], 300.0);
    EXPECT_EQ(d.labels(), support::labels_of({0, 1, 0}));
}

TEST(LoadCsv, MissingColumnNamesIt) {
    try {
        read("Flgs,Label\ne,0\n", flgs_schema());
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("Rate"), std::string::npos);
    }
}

TEST(LoadCsv, LabelMappingFiveRows) {
    const auto d = read("Flgs,Rate,Label\na,1,benign\nb,2,attack\na,3,attack\nc,4,benign\na,5,benign\n",
                        flgs_schema(), {"benign", "attack"});
    EXPECT_EQ(d.labels(), support::labels_of({0, 1, 1, 0, 0}));
    EXPECT_EQ(d.attack_count(), 2u);
}

TEST(LoadCsv, UnknownLabelIsLabelError) {
    EXPECT_THROW(read("Flgs,Rate,Label\na,1,0\na,1,2\n", flgs_schema()), LabelError);
}

TEST(LoadCsv, BadNumberReportsRowAndColumn) {
    try {
        read("Flgs,Rate,Label\na,1,0\na,x1,1\n", flgs_schema());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.column(), "Rate");
    }
}

TEST(LoadCsv, QuotedFieldsAndReorderedHeader) {
    const auto d = read("Label,Rate,Flgs\n0,1,\"a,b\"\n1,2,\"say \"\"hi\"\"\"\n", flgs_schema());
    EXPECT_EQ(d.column("Flgs").text(0), "a,b");
    EXPECT_EQ(d.column("Flgs").text(1), "say \"hi\"");
}

TEST(LoadCsv, WriteThenReadRoundTrips) {
    const auto d = read("Flgs,Rate,Label\ne,0.1,0\n\"x,y\",2.5e-7,1\n", flgs_schema());
    std::ostringstream out;
    write_csv(out, d);
    const auto again = read(out.str(), flgs_schema());
    EXPECT_EQ(again.column("Rate").values, d.column("Rate").values);
    EXPECT_EQ(again.column("Flgs").categories, d.column("Flgs").categories);
    EXPECT_EQ(again.labels(), d.labels());
}

TEST(Schema, ParseAndWrite) {
    std::istringstream in("# comment\nSrcAddr=identifier\nRate = numeric\n\nLabel=label\n");
    const auto s = parse_schema(in);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].kind, ColumnKind::identifier);
    EXPECT_EQ(s[1].name, "Rate");
    std::ostringstream out;
    write_schema(out, s);
    std::istringstream back(out.str());
    EXPECT_EQ(parse_schema(back), s);
}

TEST(Schema, RejectsTwoLabels) {
    std::vector<ColumnSchema> s{{"a", ColumnKind::label}, {"b", ColumnKind::label}};
    EXPECT_THROW(validate_schema(s), SchemaError);
}

TEST(DropIdentifiers, NoIdentifiersKeepsFeatures) {
    const auto d = support::numeric_dataset({{1, 2}, {3, 4}}, support::labels_of({0, 1}));
    EXPECT_EQ(drop_identifiers(d).feature_names(), d.feature_names());
}

TEST(DropIdentifiers, RemovesSrcIp) {
    const std::vector<std::string> ips{"10.0.0.1", "10.0.0.2"};
    std::vector<Column> cols{make_categorical("SrcIP", ips, ColumnKind::identifier),
                             make_numeric("Rate", {1, 2})};
    const Dataset d(std::move(cols), "Label", support::labels_of({0, 1}));
    const auto out = drop_identifiers(d);
    ASSERT_EQ(out.column_count(), 1u);
    EXPECT_EQ(out.column(0).name(), "Rate");
    EXPECT_EQ(out.schema().back().name, "Label");
}

TEST(DropIdentifiers, WideFixtureKeepsThirtyFive) {
    // 44 columns: 8 identifier-like, 35 numeric, 1 label.
    std::vector<Column> cols;
    const std::vector<std::string> text{"a", "b", "c"};
    for (int i = 0; i < 8; ++i) {
        cols.push_back(make_categorical("id" + std::to_string(i), text, ColumnKind::identifier));
    }
    for (int i = 0; i < 35; ++i) cols.push_back(make_numeric("m" + std::to_string(i), {1, 2, 3}));
    const Dataset d(std::move(cols), "Label", support::labels_of({0, 1, 0}));
    EXPECT_EQ(d.schema().size(), 44u);
    EXPECT_EQ(drop_identifiers(d).feature_names().size(), 35u);
}

TEST(EncodeCategories, FirstSeenCodes) {
    const std::vector<std::string> proto{"TCP", "UDP", "TCP"};
    const Dataset d({make_categorical("proto", proto)}, "Label", support::labels_of({0, 1, 0}));
    const auto e = encode_categories(d);
    const auto& c = e.column("proto");
    EXPECT_EQ(c.kind(), ColumnKind::numeric);
    EXPECT_EQ(c.values, (std::vector<double>{0, 1, 0}));
    EXPECT_EQ(c.categories, (std::vector<std::string>{"TCP", "UDP"}));
}

TEST(EncodeCategories, AllNumericUnchanged) {
    const auto d = support::numeric_dataset({{1, 2, 3}}, support::labels_of({0, 1, 0}));
    const auto e = encode_categories(d);
    EXPECT_EQ(e.column(0).values, d.column(0).values);
    EXPECT_EQ(e.column(0).kind(), ColumnKind::numeric);
}

TEST(EncodeCategories, ThreeValuesRoundTrip) {
    const std::vector<std::string> v{"x", "y", "z", "x", "x", "z", "y", "y", "x", "z"};
    const Dataset d({make_categorical("c", v)}, "Label", std::vector<std::uint8_t>(10, 0));
    const auto e = encode_categories(d);
    const auto& c = e.column("c");
    for (std::size_t r = 0; r < v.size(); ++r) {
        EXPECT_TRUE(c.values[r] == 0 || c.values[r] == 1 || c.values[r] == 2);
        EXPECT_EQ(c.text(r), v[r]);
    }
}

TEST(SplitFolds, TenRowsTenFolds) {
    const auto d = support::numeric_dataset({std::vector<double>(10, 1.0)},
                                            support::labels_of({0, 0, 0, 0, 1, 1, 0, 0, 0, 0}));
    const auto plan = split_folds(d, 10, 3);
    for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(plan.fold_size(f), 1u);
}

TEST(SplitFolds, TwoAttacksPerFold) {
    std::vector<std::uint8_t> y(100, 0);
    for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i * 5)] = 1;
    const auto d = support::numeric_dataset({std::vector<double>(100, 0.0)}, y);
    const auto plan = split_folds(d, 10, 11);
    for (std::size_t f = 0; f < 10; ++f) {
        std::size_t attacks = 0;
        for (auto r : plan.test_rows(f)) attacks += y[r];
        EXPECT_EQ(attacks, 2u) << "fold " << f;
        EXPECT_EQ(plan.fold_size(f), 10u);
    }
}

TEST(SplitFolds, SameSeedSameAssignments) {
    std::vector<std::uint8_t> y(57, 0);
    for (std::size_t i = 0; i < 57; i += 4) y[i] = 1;
    const auto d = support::numeric_dataset({std::vector<double>(57, 0.0)}, y);
    EXPECT_EQ(split_folds(d, 5, 9).assignments, split_folds(d, 5, 9).assignments);
    EXPECT_NE(split_folds(d, 5, 9).assignments, split_folds(d, 5, 10).assignments);
}

TEST(SplitFolds, KOutOfRange) {
    const auto d = support::numeric_dataset({{1, 2, 3}}, support::labels_of({0, 1, 0}));
    EXPECT_THROW(split_folds(d, 4, 1), ArgumentError);
    EXPECT_THROW(split_folds(d, 1, 1), ArgumentError);
    EXPECT_THROW(split_blocks(d, 4), ArgumentError);
}

TEST(SplitBlocks, ContiguousInOrder) {
    const auto d = support::numeric_dataset({std::vector<double>(23, 0.0)},
                                            std::vector<std::uint8_t>(23, 0));
    const auto plan = split_blocks(d, 4);
    EXPECT_TRUE(plan.contiguous);
    std::size_t next = 0;
    for (std::size_t f = 0; f < 4; ++f) {
        for (auto r : plan.test_rows(f)) EXPECT_EQ(r, next++);
    }
    EXPECT_EQ(next, 23u);
}

TEST(Dataset, SelectRowsKeepsCodeTables) {
    const std::vector<std::string> v{"a", "b", "c"};
    const Dataset d({make_categorical("c", v)}, "Label", support::labels_of({0, 1, 0}));
    const std::vector<std::size_t> rows{2, 0};
    const auto s = d.select_rows(rows);
    EXPECT_EQ(s.column("c").text(0), "c");
    EXPECT_EQ(s.column("c").text(1), "a");
    EXPECT_EQ(s.labels(), support::labels_of({0, 0}));
}
