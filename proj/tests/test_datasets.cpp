#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mcdm/datasets.hpp"
#include "test_support.hpp"

using namespace mcdm;
using mcdm::testing::data_path;

namespace {

DomainConfig supplier() {
    return {load_model(data_path("models/supplier.json")), load_schema(data_path("schemas/supplier.json"))};
}

DomainConfig domain(const std::string& stem) {
    return {load_model(data_path("models/" + stem + ".json")), load_schema(data_path("schemas/" + stem + ".json"))};
}

RawRecord supplier_row(std::string delivery, double profit, std::string mode, std::string market) {
    RawRecord r;
    r.values = {{"Delivery Status", delivery}, {"Profit Margin", profit}, {"Shipping Mode", mode}, {"Market", market}};
    return r;
}

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvalidArgument;  // sentinel: nothing thrown
}

}  // namespace

TEST(IngestCsv, WellFormedRows) {
    std::istringstream in(
        "Delivery Status,Profit Margin,Shipping Mode,Market,Extra\n"
        "Advanced,0.3,Standard,Europe,x\n"
        "\"Late\",-0.2,First,Asia,y\n"
        "Canceled,+1.5,Same Day,USCA,z\n");
    const auto recs = ingest_csv(in, supplier().schema);
    ASSERT_EQ(recs.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(recs[i].row_index, i);
    EXPECT_EQ(std::get<double>(recs[2].at("Profit Margin")), 1.5);
    EXPECT_EQ(std::get<std::string>(recs[1].at("Delivery Status")), "Late");
    EXPECT_THROW(recs[0].at("Extra"), MissingColumnError);
}

TEST(IngestCsv, MissingColumnIsNamed) {
    std::istringstream in("Delivery Status,Profit Margin,Market\nAdvanced,0.3,Europe\n");
    try {
        ingest_csv(in, supplier().schema);
        FAIL();
    } catch (const MissingColumnError& e) {
        EXPECT_EQ(e.column(), "Shipping Mode");
    }
}

TEST(IngestCsv, ParseErrorCarriesRowAndColumn) {
    std::ostringstream os;
    os << "Delivery Status,Profit Margin,Shipping Mode,Market\n";
    for (int i = 0; i < 5; ++i) os << "Late,0.1,First,Asia\n";
    os << "Late,abc,First,Asia\n";
    std::istringstream in(os.str());
    try {
        ingest_csv(in, supplier().schema);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 5u);
        EXPECT_EQ(e.column(), "Profit Margin");
    }
}

TEST(IngestCsv, EmptyInputs) {
    std::istringstream empty("");
    EXPECT_EQ(kind_of([&] { ingest_csv(empty, supplier().schema); }), ErrorKind::EmptyFile);
    std::istringstream header_only("Delivery Status,Profit Margin,Shipping Mode,Market\n");
    EXPECT_EQ(kind_of([&] { ingest_csv(header_only, supplier().schema); }), ErrorKind::EmptyFile);
}

TEST(MapSupplier, BundledLevels) {
    const auto cfg = supplier();
    const auto a = map_supplier(supplier_row("Advanced", 0.3, "Standard", "Europe"), cfg.model, cfg.schema);
    EXPECT_EQ(a.level("Delivery Status"), "Advanced");
    EXPECT_EQ(a.level("Profit Margin"), "0 to 0.5");
    EXPECT_EQ(a.level("Shipping Mode"), "Standard");
    EXPECT_EQ(a.level("Market"), "Europe");

    const auto b = map_supplier(supplier_row("canceled", -2.0, "same day", "ASIA"), cfg.model, cfg.schema);
    EXPECT_EQ(b.level("Delivery Status"), "Canceled");
    EXPECT_EQ(b.level("Profit Margin"), "< -1");
    EXPECT_EQ(b.level("Shipping Mode"), "Same Day");
    EXPECT_EQ(b.level("Market"), "Asia");
}

TEST(MapSupplier, BinsAreLowerInclusive) {
    const auto cfg = supplier();
    const auto at = [&](double v) {
        return map_supplier(supplier_row("Late", v, "First", "Asia"), cfg.model, cfg.schema).level("Profit Margin");
    };
    EXPECT_EQ(at(-1.0), "-1 to -0.5");
    EXPECT_EQ(at(-0.5), "-0.5 to 0");
    EXPECT_EQ(at(0.0), "0 to 0.5");
    EXPECT_EQ(at(1.0), "> 1");
}

TEST(MapSupplier, PrintedGapIsUnmappable) {
    const auto cfg = supplier();
    EXPECT_EQ(kind_of([&] { map_supplier(supplier_row("Late", 0.75, "First", "Asia"), cfg.model, cfg.schema); }),
              ErrorKind::UnmappableLevel);
    EXPECT_EQ(kind_of([&] { map_supplier(supplier_row("Lost", 0.1, "First", "Asia"), cfg.model, cfg.schema); }),
              ErrorKind::UnmappableLevel);
    const auto fixed = load_model(data_path("models/supplier_corrected.json"));
    EXPECT_EQ(map_supplier(supplier_row("Late", 0.75, "First", "Asia"), fixed, cfg.schema).level("Profit Margin"),
              "> 0.5");
}

TEST(MapSupplier, DatasetSpellings) {
    const auto model = load_model(data_path("models/supplier.json"));
    const auto schema = load_schema(data_path("schemas/supplier_dataco.json"));
    std::istringstream in(
        "Delivery Status,Order Item Profit Ratio,Shipping Mode,Market\n"
        "Advance shipping,0.2,Standard Class,Pacific Asia\n"
        "Shipping canceled,-0.7,Same Day,LATAM\n");
    const auto recs = ingest_csv(in, schema);
    const auto m = map_supplier(recs[0], model, schema);
    EXPECT_EQ(m.level("Delivery Status"), "Advanced");
    EXPECT_EQ(m.level("Shipping Mode"), "Standard");
    EXPECT_EQ(m.level("Market"), "Asia");
    EXPECT_EQ(map_supplier(recs[1], model, schema).level("Delivery Status"), "Canceled");
}

TEST(AnchoredGrade, RankToGrade) {
    const auto model = load_model(data_path("models/supplier.json"));
    // Five profit levels over four grades: ranks 0..4 -> 0, 1, 2, 2, 3 (halves up).
    const auto& pm = model.dimension("Profit Margin");
    const auto order = pm.rank_order();
    const std::vector<std::size_t> expected = {0, 1, 2, 2, 3};
    for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(anchored_grade(pm, order[k], 4), expected[k]);
    // Four delivery levels map one-to-one.
    const auto& ds = model.dimension("Delivery Status");
    const auto o2 = ds.rank_order();
    for (std::size_t k = 0; k < o2.size(); ++k) EXPECT_EQ(anchored_grade(ds, o2[k], 4), k);
    EXPECT_EQ(ds.criteria[o2[0]].name, "Advanced");
}

TEST(GroundTruth, SupplierTopLevelsAreGood) {
    const auto cfg = supplier();
    EXPECT_EQ(ground_truth(supplier_row("Advanced", 2.0, "Standard", "USCA"), cfg), "Good");
    EXPECT_EQ(ground_truth(supplier_row("Canceled", -3.0, "Same Day", "Asia"), cfg), "Poor");
}

TEST(GroundTruth, PureFunctionOfLevels) {
    const auto cfg = supplier();
    EXPECT_EQ(ground_truth(supplier_row("Late", 0.1, "First", "Africa"), cfg),
              ground_truth(supplier_row("late", 0.4, "FIRST", "africa"), cfg));
}

TEST(GroundTruth, AirQualityLabels) {
    const auto cfg = domain("air_quality");
    RawRecord r;
    r.values = {{"Air Quality", std::string(" hazardous ")}};
    EXPECT_EQ(ground_truth(r, cfg), "Hazardous");
    r.values["Air Quality"] = std::string("excellent");
    EXPECT_EQ(kind_of([&] { ground_truth(r, cfg); }), ErrorKind::UnknownLabel);
}

TEST(GroundTruth, CustomerSatisfactionScoreBins) {
    const auto cfg = domain("customer_satisfaction");
    RawRecord r;
    r.values = {{"SatisfactionScore", 90.0}};
    EXPECT_EQ(ground_truth(r, cfg), "Good");
    r.values["SatisfactionScore"] = 70.0;
    EXPECT_EQ(ground_truth(r, cfg), "Fair");
    r.values["SatisfactionScore"] = 12.0;
    EXPECT_EQ(ground_truth(r, cfg), "Poor");
}

TEST(Fixtures, DeterministicBytes) {
    const auto cfg = supplier();
    std::ostringstream a, b;
    write_examples_csv(a, synthesize_fixtures(cfg, 10, 7), cfg.schema);
    write_examples_csv(b, synthesize_fixtures(cfg, 10, 7), cfg.schema);
    EXPECT_EQ(a.str(), b.str());
    std::ostringstream c;
    write_examples_csv(c, synthesize_fixtures(cfg, 10, 8), cfg.schema);
    EXPECT_NE(a.str(), c.str());
}

TEST(Fixtures, SupplierSeedOneCoversAllGrades) {
    const auto cfg = supplier();
    const auto ex = synthesize_fixtures(cfg, 500, 1);
    ASSERT_EQ(ex.size(), 500u);
    std::set<std::string> seen;
    for (const auto& e : ex) seen.insert(e.grade);
    EXPECT_EQ(seen.size(), 4u);
}

TEST(Fixtures, ZeroCountRejected) {
    EXPECT_EQ(kind_of([&] { synthesize_fixtures(supplier(), 0, 1); }), ErrorKind::InvalidArgument);
}

TEST(Fixtures, CsvRoundTripIsTotal) {
    // Fixture values always fall inside printed bins, so ingest -> map ->
    // ground truth reproduces every grade.
    for (const char* stem : {"supplier", "air_quality", "customer_satisfaction"}) {
        const auto cfg = domain(stem);
        const auto ex = synthesize_fixtures(cfg, 300, 4);
        std::stringstream csv;
        write_examples_csv(csv, ex, cfg.schema);
        const auto back = label_records(ingest_csv(csv, cfg.schema), cfg, "roundtrip");
        ASSERT_EQ(back.size(), ex.size());
        for (std::size_t i = 0; i < ex.size(); ++i) {
            ASSERT_EQ(back[i].grade, ex[i].grade) << stem << " row " << i;
            ASSERT_EQ(back[i].mapped.levels, ex[i].mapped.levels);
        }
    }
}

TEST(Split, ExactPartition) {
    const auto ex = synthesize_fixtures(supplier(), 10, 2);
    const auto s = split(ex, 0.8, 3);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.test.size(), 2u);
    std::set<std::size_t> rows;
    for (const auto* part : {&s.train, &s.test}) {
        for (const auto& e : *part) EXPECT_TRUE(rows.insert(e.mapped.row_index).second);
    }
    EXPECT_EQ(rows.size(), 10u);
    const auto again = split(ex, 0.8, 3);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(again.train[i].mapped.row_index, s.train[i].mapped.row_index);
    EXPECT_THROW(split(ex, 1.0, 3), Error);
}

TEST(Split, FiveHundredOfSixHundred) {
    const auto ex = synthesize_fixtures(supplier(), 600, 1);
    EXPECT_EQ(split(ex, 5.0 / 6.0, 1).train.size(), 500u);
    EXPECT_EQ(split_count(ex, 500, 1).test.size(), 100u);
}
