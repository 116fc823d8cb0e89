#include "soilfuse/core.hpp"
#include "soilfuse/text.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace soilfuse;
using namespace soilfuse::testing;

TEST(GeoPoint, BoundsAreInclusive) {
    EXPECT_TRUE(is_valid({180.0, 90.0}));
    EXPECT_TRUE(is_valid({-180.0, -90.0}));
    EXPECT_FALSE(is_valid({180.0001, 0.0}));
    EXPECT_FALSE(is_valid({0.0, -90.5}));
    EXPECT_FALSE(is_valid({std::nan(""), 0.0}));
    EXPECT_EQ(error_code_of([] { make_point(200.0, 0.0); }), ErrorCode::InvalidValue);
}

TEST(LocationKey, RoundsToFiveDecimals) {
    EXPECT_EQ(location_key({10.0012, 50.0034}), "10.00120,50.00340");
    EXPECT_EQ(location_key({-3.123456, -0.000004}), "-3.12346,0.00000");
    EXPECT_EQ(location_key({10.000004, 50.0}), "10.00000,50.00000");
    EXPECT_NE(location_key({10.00001, 50.0}), location_key({10.0, 50.0}));
}

TEST(LocationKey, NearbyPointsShareAKey) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lon(-170, 170), jitter(-4e-7, 4e-7);
    for (int i = 0; i < 1000; ++i) {
        const double base = std::round(lon(rng) * 1e5) / 1e5;
        EXPECT_EQ(location_key({base, 45.0}), location_key({base + jitter(rng), 45.0}));
    }
}

TEST(FeatureDef, Checks) {
    EXPECT_NO_THROW(check_feature_def(scalar_feature("oc")));
    EXPECT_NO_THROW(check_feature_def(vector_feature("precip", 12)));
    EXPECT_EQ(error_code_of([] { check_feature_def(vector_feature("v", 1)); }), ErrorCode::InvalidValue);
    EXPECT_EQ(error_code_of([] { check_feature_def(categorical_feature("lc", {})); }), ErrorCode::InvalidValue);
    EXPECT_EQ(error_code_of([] { check_feature_def(categorical_feature("lc", {"a", "a"})); }),
              ErrorCode::InvalidValue);
    auto f = scalar_feature("oc");
    f.vocabulary = {"x"};
    EXPECT_EQ(error_code_of([&] { check_feature_def(f); }), ErrorCode::InvalidValue);
    EXPECT_EQ(error_code_of([] { check_feature_def(scalar_feature("")); }), ErrorCode::InvalidValue);
}

TEST(ValidateCell, AcceptsMatchingModalities) {
    EXPECT_TRUE(validate_cell(scalar_feature("oc"), 1.5));
    EXPECT_TRUE(validate_cell(vector_feature("p", 3), std::vector<double>{1, 2, 3}));
    EXPECT_TRUE(validate_cell(categorical_feature("lc", {"forest", "crop"}), Category{"crop"}));
    EXPECT_TRUE(validate_cell(text_feature("t"), Text{"notes"}));
    EXPECT_TRUE(validate_cell(scalar_feature("oc"), Missing{}));
}

TEST(ValidateCell, ReportsViolations) {
    EXPECT_EQ(validate_cell(scalar_feature("oc"), Text{"1.5"}).violation, "modality mismatch");
    EXPECT_EQ(validate_cell(vector_feature("p", 12), std::vector<double>(11, 0.0)).violation, "length mismatch");
    EXPECT_EQ(validate_cell(categorical_feature("lc", {"forest"}), Category{"desert"}).violation,
              "label not in vocabulary");
    EXPECT_EQ(validate_cell(scalar_feature("oc"), std::numeric_limits<double>::infinity()).violation,
              "non-finite number");
    EXPECT_EQ(validate_cell(scalar_feature("oc"), std::vector<double>{1.0}).violation, "modality mismatch");
}

TEST(FusedTable, RejectsInvalidCells) {
    auto s = make_sample("a", 1, 1);
    s.cells["oc"] = observed(Text{"high"});
    EXPECT_EQ(error_code_of([&] { FusedTable({scalar_feature("oc")}, {s}); }), ErrorCode::InvalidValue);
    s.cells["oc"] = observed(2.0);
    s.cells["nope"] = observed(1.0);
    EXPECT_EQ(error_code_of([&] { FusedTable({scalar_feature("oc")}, {s}); }), ErrorCode::UnknownFeature);
}

TEST(FusedTable, RejectsDuplicateIds) {
    EXPECT_EQ(error_code_of([] { FusedTable({scalar_feature("oc"), scalar_feature("oc")}, {}); }),
              ErrorCode::InvalidValue);
    EXPECT_EQ(error_code_of([] { FusedTable({}, {make_sample("a", 0, 0), make_sample("a", 1, 1)}); }),
              ErrorCode::InvalidValue);
}

TEST(FusedTable, SampleStructuredCellsHaveZeroDistance) {
    auto s = make_sample("a", 1, 1);
    s.cells["oc"] = observed(2.0);
    s.cells["oc"].provenance.alignment_distance_m = 12.0;
    EXPECT_EQ(error_code_of([&] { FusedTable({scalar_feature("oc")}, {s}); }), ErrorCode::InvalidValue);
    s.cells["oc"].provenance.source_kind = SourceKind::MapStructured;
    EXPECT_NO_THROW(FusedTable({scalar_feature("oc")}, {s}));
    s.cells["oc"].provenance.alignment_distance_m = -1.0;
    EXPECT_EQ(error_code_of([&] { FusedTable({scalar_feature("oc")}, {s}); }), ErrorCode::InvalidValue);
}

TEST(FusedTable, SortsSamplesAndDropsMissing) {
    auto b = make_sample("b", 1, 1);
    auto a = make_sample("a", 2, 2);
    a.cells["oc"] = observed(Missing{});
    FusedTable t({scalar_feature("oc")}, {b, a});
    ASSERT_EQ(t.samples().size(), 2u);
    EXPECT_EQ(t.samples()[0].sample_id, "a");
    EXPECT_TRUE(t.samples()[0].cells.empty());
    EXPECT_EQ(t.sample_position("b"), 1u);
    EXPECT_EQ(t.find_sample("zz"), nullptr);
    ASSERT_NE(t.find_feature("oc"), nullptr);
}

TEST(FusedTable, LocationIndexGroupsCollocatedSamples) {
    FusedTable t({}, {make_sample("x2", 10.0012, 50.0034), make_sample("x1", 10.0012, 50.0034),
                      make_sample("y", 10.5, 50.5)});
    const auto& idx = t.location_index();
    ASSERT_EQ(idx.size(), 2u);
    EXPECT_EQ(idx.at("10.00120,50.00340"), (std::vector<std::string>{"x1", "x2"}));
}

TEST(Codebook, CodeCannotBeMappedAndMissing) {
    Codebook cb{"lc", {{"1", "crop"}, {"-9", "x"}}, {"-9"}};
    EXPECT_EQ(error_code_of([&] { check_codebook(cb); }), ErrorCode::InvalidValue);
}

TEST(RasterGrid, ConstructionChecks) {
    EXPECT_EQ(error_code_of([] { RasterGrid(0, 2, 0, 0, 1, -9999, {}); }), ErrorCode::MalformedHeader);
    EXPECT_EQ(error_code_of([] { RasterGrid(2, 2, 0, 0, 0, -9999, {1, 2, 3, 4}); }), ErrorCode::MalformedHeader);
    EXPECT_EQ(error_code_of([] { RasterGrid(2, 2, 0, 0, 1, -9999, {1, 2, 3}); }), ErrorCode::ShapeMismatch);
    EXPECT_EQ(error_code_of([] { RasterGrid(1, 1, 0, 0, 1, -9999, {std::nan("")}); }), ErrorCode::NonNumericCell);
}

TEST(RasterGrid, RowZeroIsNorth) {
    RasterGrid g(2, 3, 10.0, 40.0, 0.5, -9999, {1, 2, 3, 4, 5, -9999});
    EXPECT_EQ(g.cell_center(0, 0), (GeoPoint{10.25, 41.25}));
    EXPECT_EQ(g.cell_center(2, 1), (GeoPoint{10.75, 40.25}));
    EXPECT_TRUE(g.is_nodata(2, 1));
    EXPECT_EQ(g.data_cell_count(), 5u);
}

TEST(Schema, MapTargetsMustBeScalar) {
    FusionSchema s;
    s.dataset_id = "m";
    s.kind = SourceKind::MapStructured;
    s.features = {vector_feature("v", 2)};
    ColumnMap cm;
    cm.source_columns = {"a", "b"};
    cm.target_feature_id = "v";
    s.column_maps = {cm};
    EXPECT_EQ(error_code_of([&] { check_schema(s); }), ErrorCode::SchemaMismatch);
}

TEST(Schema, SourceColumnCountFollowsVectorDim) {
    FusionSchema s;
    s.dataset_id = "t";
    s.features = {vector_feature("v", 3)};
    ColumnMap cm;
    cm.source_columns = {"a", "b"};
    cm.target_feature_id = "v";
    s.column_maps = {cm};
    EXPECT_EQ(error_code_of([&] { check_schema(s); }), ErrorCode::SchemaMismatch);
    s.column_maps[0].source_columns.push_back("c");
    EXPECT_NO_THROW(check_schema(s));
    s.column_maps[0].scale = 0.0;
    EXPECT_EQ(error_code_of([&] { check_schema(s); }), ErrorCode::SchemaMismatch);
}

TEST(Text, ParseDoubleIsStrict) {
    EXPECT_EQ(text::parse_double(" 6.5 "), 6.5);
    EXPECT_FALSE(text::parse_double("6.5x"));
    EXPECT_FALSE(text::parse_double(""));
    EXPECT_FALSE(text::parse_double("nan"));
    EXPECT_EQ(text::parse_double("-1e3"), -1000.0);
}

TEST(Text, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = d(rng);
        EXPECT_EQ(text::parse_double(text::format_double(v)), v);
    }
    EXPECT_EQ(text::format_double(0.0), "0");
    EXPECT_EQ(text::format_double(2.5), "2.5");
}

TEST(Text, CsvQuotingRoundTrips) {
    const std::vector<std::string> row{"plain", "a,b", "say \"hi\"", "two\nlines", ""};
    const auto parsed = text::parse_csv(text::csv_line(row) + "\n");
    ASSERT_EQ(parsed.size(), 1u);
    EXPECT_EQ(parsed[0], row);
}
