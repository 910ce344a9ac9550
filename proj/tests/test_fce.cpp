#include <gtest/gtest.h>

#include "mcdm/datasets.hpp"
#include "mcdm/fce.hpp"
#include "test_support.hpp"

using namespace mcdm;
using mcdm::testing::data_path;

namespace {

const GradeSet& four() {
    static const GradeSet g({"Good", "Fair", "Average", "Poor"});
    return g;
}

WeightVector wv(std::vector<double> v) { return WeightVector::checked(std::move(v)); }

}  // namespace

TEST(GradeSet, DefaultsAndValidation) {
    EXPECT_EQ(four().values(), (std::vector<double>{4, 3, 2, 1}));
    EXPECT_THROW(GradeSet({"only"}), Error);
    EXPECT_THROW(GradeSet({"a", "A"}), Error);
    EXPECT_THROW(GradeSet({"a", "b"}, {1, 2}), Error);
    EXPECT_EQ(four().index_of("  fair "), 1u);
    try {
        four().index_of("Excellent");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownLabel);
    }
}

TEST(FuzzyRatingMatrix, RowsMustBeDistributions) {
    EXPECT_NO_THROW(FuzzyRatingMatrix::from_rows({{0.5, 0.5}}));
    EXPECT_THROW(FuzzyRatingMatrix::from_rows({{0.5, 0.6}}), Error);
    EXPECT_THROW(FuzzyRatingMatrix::from_rows({{1.5, -0.5}}), Error);
}

TEST(Synthesize, DegenerateWeightSelectsRow) {
    const auto b = synthesize(wv({1, 0}), FuzzyRatingMatrix::from_rows({{0.7, 0.3}, {0.1, 0.9}}),
                              SynthesisOperator::WeightedAverage);
    EXPECT_NEAR(b[0], 0.7, 1e-15);
    EXPECT_NEAR(b[1], 0.3, 1e-15);
}

TEST(Synthesize, IdentityReturnsWeights) {
    const auto b = synthesize(wv({0.6, 0.4}), FuzzyRatingMatrix::from_rows({{1, 0}, {0, 1}}),
                              SynthesisOperator::WeightedAverage);
    EXPECT_NEAR(b[0], 0.6, 1e-15);
    EXPECT_NEAR(b[1], 0.4, 1e-15);
}

TEST(Synthesize, MinMaxLattice) {
    // raw (max(min(.5,.8),min(.5,.4)), max(min(.5,.2),min(.5,.6))) = (.5,.5)
    const auto b = synthesize(wv({0.5, 0.5}), FuzzyRatingMatrix::from_rows({{0.8, 0.2}, {0.4, 0.6}}),
                              SynthesisOperator::MinMax);
    EXPECT_DOUBLE_EQ(b[0], 0.5);
    EXPECT_DOUBLE_EQ(b[1], 0.5);
}

TEST(Synthesize, ProductMaxNormalizes) {
    // raw (max(.4,.2), max(.1,.3)) = (.4,.3) -> (4/7, 3/7)
    const auto b = synthesize(wv({0.5, 0.5}), FuzzyRatingMatrix::from_rows({{0.8, 0.2}, {0.4, 0.6}}),
                              SynthesisOperator::ProductMax);
    EXPECT_NEAR(b[0], 4.0 / 7, 1e-15);
    EXPECT_NEAR(b[1], 3.0 / 7, 1e-15);
}

TEST(Synthesize, DimensionMismatch) {
    try {
        synthesize(wv({0.5, 0.5}), FuzzyRatingMatrix::from_rows({{1, 0}}), SynthesisOperator::WeightedAverage);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

TEST(Synthesize, WeightedAveragePreservesStochasticity) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = 1 + rng.below(8);
        const auto g = 2 + rng.below(5);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < m; ++i) rows.push_back(mcdm::testing::random_row(rng, g));
        const auto b = synthesize(WeightVector::checked(mcdm::testing::random_weights(rng, m)),
                                  FuzzyRatingMatrix::from_rows(rows), SynthesisOperator::WeightedAverage);
        double s = 0.0;
        for (double v : b) s += v;
        ASSERT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Defuzzify, Examples) {
    EXPECT_DOUBLE_EQ(defuzzify(wv({1, 0, 0, 0}), four()), 4.0);
    EXPECT_DOUBLE_EQ(defuzzify(wv({0.25, 0.25, 0.25, 0.25}), four()), 2.5);
    EXPECT_NEAR(defuzzify(wv({0.6, 0.3, 0.1, 0}), four()), 3.5, 1e-15);
    EXPECT_THROW(defuzzify(wv({0.5, 0.5}), four()), Error);
}

TEST(Defuzzify, StaysWithinValueRange) {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const double s = defuzzify(WeightVector::checked(mcdm::testing::random_row(rng, 4)), four());
        ASSERT_GE(s, 1.0);
        ASSERT_LE(s, 4.0);
    }
}

TEST(GradeOf, NearestWithTiesToBetter) {
    EXPECT_EQ(grade_of(4.0, four()), "Good");
    EXPECT_EQ(grade_of(2.49, four()), "Average");
    EXPECT_EQ(grade_of(2.5, four()), "Fair");
    EXPECT_EQ(grade_of(-10.0, four()), "Poor");
}

TEST(GradeOf, OneHotRoundTrip) {
    for (std::size_t j = 0; j < four().size(); ++j) {
        EXPECT_EQ(grade_of(defuzzify(WeightVector::checked(one_hot(4, j)), four()), four()), four().label(j));
    }
}

TEST(EvaluateHierarchical, Unanimity) {
    Rng rng(1);
    const auto m = mcdm::testing::random_model(rng);
    FactorRatings r;
    for (const auto& d : m.dimensions) {
        for (const auto& c : d.criteria) r[{d.name, c.name}] = one_hot(4, 0);
    }
    for (auto op : {SynthesisOperator::WeightedAverage, SynthesisOperator::MinMax, SynthesisOperator::ProductMax}) {
        const auto v = evaluate_hierarchical(m, r, op);
        EXPECT_DOUBLE_EQ(v.membership[0], 1.0);
        EXPECT_EQ(v.grade, m.grades.label(0));
    }
}

TEST(EvaluateHierarchical, SingleCriterionIdentity) {
    DecisionModel m;
    m.name = "one";
    m.grades = four();
    m.dimensions.push_back({"d", 1.0, {{"c", 1.0, {}}}, {}});
    const std::vector<double> row = {0.1, 0.2, 0.3, 0.4};
    const auto v = evaluate_hierarchical(m, {{{"d", "c"}, row}}, SynthesisOperator::WeightedAverage);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(v.membership[j], row[j], 1e-15);
}

TEST(EvaluateHierarchical, MissingRatingNamesPair) {
    DecisionModel m;
    m.name = "one";
    m.grades = four();
    m.dimensions.push_back({"d", 1.0, {{"c", 1.0, {}}}, {}});
    try {
        evaluate_hierarchical(m, {}, SynthesisOperator::WeightedAverage);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingRating);
        EXPECT_NE(std::string(e.what()).find("(d, c)"), std::string::npos);
    }
}

TEST(EvaluateHierarchical, SupplierTopLevelsGradeGood) {
    const auto model = load_model(data_path("models/supplier.json"));
    MappedRecord rec{"hand", 0, {{"Delivery Status", "Advanced"}, {"Profit Margin", "> 1"},
                                 {"Shipping Mode", "Standard"}, {"Market", "USCA"}}};
    const auto ratings = level_ratings(model, rec);
    // Every row of every dimension is the top level's anchor, grade 0.
    for (const auto& [key, row] : ratings) EXPECT_EQ(row, one_hot(4, 0)) << key.first << "/" << key.second;
    const auto v = evaluate_hierarchical(model, ratings, SynthesisOperator::WeightedAverage);
    EXPECT_NEAR(v.membership[0], 1.0, 1e-12);
    EXPECT_EQ(v.grade, "Good");
}

TEST(EvaluateHierarchical, FlatEquivalence) {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = mcdm::testing::random_model(rng);
        FactorRatings r;
        std::vector<std::vector<double>> flat_rows;
        std::vector<double> flat_w;
        for (const auto& o : compose_overall(m)) {
            auto row = mcdm::testing::random_row(rng, 4);
            r[{o.dimension, o.criterion}] = row;
            flat_rows.push_back(row);
            flat_w.push_back(o.weight);
        }
        const auto hier = evaluate_hierarchical(m, r, SynthesisOperator::WeightedAverage);
        const auto flat = synthesize(WeightVector::checked(flat_w), FuzzyRatingMatrix::from_rows(flat_rows),
                                     SynthesisOperator::WeightedAverage);
        for (std::size_t j = 0; j < 4; ++j) ASSERT_NEAR(hier.membership[j], flat[j], 1e-9);
    }
}
