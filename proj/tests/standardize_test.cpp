#include "soilfuse/schema_io.hpp"
#include "soilfuse/standardize.hpp"
#include "soilfuse/text.hpp"
#include "support.hpp"

#include <random>

using namespace soilfuse;
using namespace soilfuse::testing;

namespace {

const Codebook kLandCover{"lc", {{"1", "cropland"}, {"2", "forest"}}, {"-999"}};

FusionSchema ph_schema() {
    FusionSchema s;
    s.dataset_id = "survey";
    s.georef_columns = GeorefColumns{"lon", "lat"};
    s.record_id_column = "id";
    s.features = {scalar_feature("ph")};
    ColumnMap cm;
    cm.source_columns = {"ph"};
    cm.target_feature_id = "ph";
    cm.invalid_rules = {{InvalidRule::Kind::EqualsSentinel, 0.0}};
    s.column_maps = {cm};
    return s;
}

FusionSchema mixed_schema() {
    FusionSchema s;
    s.dataset_id = "mixed";
    s.georef_columns = GeorefColumns{"lon", "lat"};
    s.record_id_column = "id";
    s.features = {scalar_feature("oc", "carbon", "%"), categorical_feature("lc", {"cropland", "forest"}),
                  text_feature("notes")};
    ColumnMap oc;
    oc.source_columns = {"oc_gkg"};
    oc.target_feature_id = "oc";
    oc.scale = 0.1;
    oc.missing_codes = {"-999"};
    oc.invalid_rules = {{InvalidRule::Kind::Below, 0.0}};
    ColumnMap lc;
    lc.source_columns = {"lc"};
    lc.target_feature_id = "lc";
    lc.codebook_ref = "lc";
    ColumnMap notes;
    notes.source_columns = {"notes"};
    notes.target_feature_id = "notes";
    s.column_maps = {oc, lc, notes};
    return s;
}

std::size_t observed_values(const StandardizeResult& r) {
    std::size_t n = 0;
    for (const auto& rec : r.records)
        for (const auto& [col, v] : rec.values)
            if (!std::holds_alternative<Missing>(v)) ++n;
    return n;
}

std::size_t set_missing_issues(const StandardizeResult& r) {
    std::size_t n = 0;
    for (const auto& i : r.issues)
        if (i.action == IssueAction::SetMissing) ++n;
    return n;
}

} // namespace

TEST(ApplyCodebook, MapsDeclaredAndUnknownCodes) {
    EXPECT_EQ(apply_codebook("1", kLandCover), "cropland");
    EXPECT_EQ(apply_codebook("-999", kLandCover), std::nullopt);
    EXPECT_EQ(error_code_of([] { apply_codebook("7", kLandCover); }), ErrorCode::UnknownCode);
}

TEST(DetectInvalidNumeric, SentinelAndStrictThresholds) {
    const std::vector<InvalidRule> zero{{InvalidRule::Kind::EqualsSentinel, 0.0}};
    EXPECT_EQ(detect_invalid_numeric(0.0, zero), std::nullopt);
    EXPECT_EQ(detect_invalid_numeric(6.5, zero), 6.5);
    const std::vector<InvalidRule> below{{InvalidRule::Kind::Below, 0.0}};
    EXPECT_EQ(detect_invalid_numeric(-1.0, below), std::nullopt);
    EXPECT_EQ(detect_invalid_numeric(0.0, below), 0.0);
    const std::vector<InvalidRule> above{{InvalidRule::Kind::Above, 14.0}};
    EXPECT_EQ(detect_invalid_numeric(14.0, above), 14.0);
    EXPECT_EQ(detect_invalid_numeric(14.1, above), std::nullopt);
}

TEST(ConvertUnit, Examples) {
    EXPECT_DOUBLE_EQ(convert_unit(25.0, 0.1, 0.0), 2.5);
    EXPECT_DOUBLE_EQ(convert_unit(0.0, 1.0, 273.15), 273.15);
    EXPECT_EQ(convert_unit(3.75, 1.0, 0.0), 3.75);
}

TEST(ConvertUnit, IsAffineInItsInput) {
    // f(a + b t) - f(a) must equal t (f(a + b) - f(a)) up to rounding.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 1000; ++i) {
        const double scale = u(rng), offset = u(rng), a = u(rng), b = u(rng), t = u(rng);
        const double lhs = convert_unit(a + b * t, scale, offset) - convert_unit(a, scale, offset);
        const double rhs = t * (convert_unit(a + b, scale, offset) - convert_unit(a, scale, offset));
        const double s = std::abs(scale), o = std::abs(offset);
        const double tol = 16 * std::numeric_limits<double>::epsilon() *
                           (s * (std::abs(a) + std::abs(b * t)) + o + std::abs(t) * (s * (std::abs(a) + std::abs(b)) + o));
        EXPECT_NEAR(lhs, rhs, tol);
    }
}

TEST(PortableRaster, ParsesHandWrittenGrid) {
    const auto g = parse_portable_raster(
        "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -9999\n1 2\n-9999 4\n");
    EXPECT_EQ(g.ncols(), 2u);
    EXPECT_EQ(g.data_cell_count(), 3u);
    EXPECT_TRUE(g.is_nodata(1, 0));
    EXPECT_EQ(g.at(0, 1), 2.0);
}

TEST(PortableRaster, HeaderAndShapeErrors) {
    EXPECT_EQ(error_code_of([] {
                  parse_portable_raster("ncols 0\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -1\n");
              }),
              ErrorCode::MalformedHeader);
    EXPECT_EQ(error_code_of([] {
                  parse_portable_raster("nrows 1\nncols 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -1\n5\n");
              }),
              ErrorCode::MalformedHeader);
    EXPECT_EQ(error_code_of([] {
                  parse_portable_raster(
                      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -1\n1 2\n");
              }),
              ErrorCode::ShapeMismatch);
    EXPECT_EQ(error_code_of([] {
                  parse_portable_raster(
                      "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -1\n1 2 3\n");
              }),
              ErrorCode::ShapeMismatch);
    EXPECT_EQ(error_code_of([] {
                  parse_portable_raster(
                      "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -1\n1 abc\n");
              }),
              ErrorCode::NonNumericCell);
}

TEST(PortableRaster, WriteThenParseIsExact) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-500, 500);
    std::vector<double> v(12);
    for (auto& x : v) x = u(rng);
    v[5] = -9999;
    RasterGrid g(4, 3, 9.99, 49.99, 0.01, -9999, v);
    EXPECT_EQ(parse_portable_raster(write_portable_raster(g)), g);
}

TEST(StandardizeTable, PhSentinelBecomesMissing) {
    const auto raw = parse_raw_table("id,lon,lat,ph\na,10,50,6.5\nb,10.1,50,0.0\nc,10.2,50,7.1\n");
    const auto r = standardize_table(raw, ph_schema(), {});
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.records[0].values.at("ph"), StdValue(6.5));
    EXPECT_EQ(r.records[1].values.at("ph"), StdValue(Missing{}));
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].row, 1u);
    EXPECT_EQ(r.issues[0].column, "ph");
    EXPECT_EQ(r.issues[0].raw, "0.0");
    EXPECT_EQ(r.issues[0].action, IssueAction::SetMissing);
    EXPECT_EQ(r.records[2].georef, (GeoPoint{10.2, 50}));
}

TEST(StandardizeTable, EmptyTableIsVacuous) {
    const auto r = standardize_table(RawTable{}, ph_schema(), {});
    EXPECT_TRUE(r.records.empty());
    EXPECT_TRUE(r.issues.empty());
}

TEST(StandardizeTable, UnknownCodeIsReported) {
    const auto raw = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,25,7,x\n");
    const auto r = standardize_table(raw, mixed_schema(), {{"lc", kLandCover}});
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].values.at("lc"), StdValue(Missing{}));
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].rule, "unknown-code");
    EXPECT_EQ(r.issues[0].raw, "7");
}

TEST(StandardizeTable, DeclaredMissingPrecedesInvalidRules) {
    const auto raw = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,-999,-999,\nb,1,1,-5,1,ok\n");
    const auto r = standardize_table(raw, mixed_schema(), {{"lc", kLandCover}});
    EXPECT_EQ(r.declared_missing, 3u);
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].row, 1u);
    EXPECT_EQ(r.issues[0].rule, "below(0)");
}

TEST(StandardizeTable, ConvertsAndResolvesLabels) {
    const auto raw = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,25,2,\"loam, wet\"\n");
    const auto r = standardize_table(raw, mixed_schema(), {{"lc", kLandCover}});
    EXPECT_EQ(r.records[0].values.at("oc_gkg"), StdValue(2.5));
    EXPECT_EQ(r.records[0].values.at("lc"), StdValue(Category{"forest"}));
    EXPECT_EQ(r.records[0].values.at("notes"), StdValue(Text{"loam, wet"}));
}

TEST(StandardizeTable, BadGeorefIsDroppedWithIssue) {
    const auto raw = parse_raw_table("id,lon,lat,ph\na,200,50,6.5\nb,,,7\n");
    const auto r = standardize_table(raw, ph_schema(), {});
    EXPECT_FALSE(r.records[0].georef);
    EXPECT_FALSE(r.records[1].georef);
    ASSERT_EQ(r.issues.size(), 2u);
    EXPECT_EQ(r.issues[0].action, IssueAction::DroppedGeoref);
}

TEST(StandardizeTable, HeaderMismatchIsFatal) {
    const auto raw = parse_raw_table("id,lon,lat,pH\na,1,1,6\n");
    EXPECT_EQ(error_code_of([&] { standardize_table(raw, ph_schema(), {}); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(error_code_of([] { parse_raw_table("a,b\n1,2,3\n"); }), ErrorCode::ShapeMismatch);
    const auto ok = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,1,1,x\n");
    EXPECT_EQ(error_code_of([&] { standardize_table(ok, mixed_schema(), {}); }), ErrorCode::SchemaMismatch);
}

TEST(StandardizeTable, NoSilentLoss) {
    std::mt19937_64 rng(21);
    const std::vector<std::string> oc_pool{"25", "-999", "", "-3", "abc", "0", "12.5", "1e2"};
    const std::vector<std::string> lc_pool{"1", "2", "-999", "7", "", "x"};
    const std::vector<std::string> notes_pool{"", "dry", "wet, stony"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string csv = "id,lon,lat,oc_gkg,lc,notes\n";
        const int rows = static_cast<int>(rng() % 30);
        for (int r = 0; r < rows; ++r) {
            csv += text::csv_line({"r" + std::to_string(r), "1", "2", oc_pool[rng() % oc_pool.size()],
                                   lc_pool[rng() % lc_pool.size()], notes_pool[rng() % notes_pool.size()]});
        }
        const auto res = standardize_table(parse_raw_table(csv), mixed_schema(), {{"lc", kLandCover}});
        EXPECT_EQ(res.input_cells, static_cast<std::size_t>(rows) * 3);
        EXPECT_EQ(res.input_cells, observed_values(res) + set_missing_issues(res) + res.declared_missing);
    }
}

TEST(StandardizeTable, IdempotentOnStandardizedOutput) {
    const auto raw = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,25,2,stony\nb,2,2,-999,1,\nc,3,3,4,7,x\n");
    auto first = standardize_table(raw, mixed_schema(), {{"lc", kLandCover}});
    const auto table = make_standardized_table(mixed_schema(), first.records);
    const auto again_raw = parse_raw_table(write_standardized_csv(table));

    // Identity schema over the standardized columns: no codebooks, rules or scaling.
    FusionSchema identity = mixed_schema();
    identity.georef_columns = GeorefColumns{"lon", "lat"};
    identity.record_id_column = "record_id";
    for (auto& cm : identity.column_maps) {
        cm.scale = 1.0;
        cm.offset = 0.0;
        cm.codebook_ref.reset();
        cm.missing_codes.clear();
        cm.invalid_rules.clear();
    }
    const auto second = standardize_table(again_raw, identity, {});
    ASSERT_EQ(second.records.size(), first.records.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        EXPECT_EQ(second.records[i].values, first.records[i].values) << i;
        EXPECT_EQ(second.records[i].georef, first.records[i].georef);
    }
    EXPECT_TRUE(second.issues.empty());
}

TEST(StandardizedTable, CsvAndSidecarRoundTrip) {
    const auto raw = parse_raw_table("id,lon,lat,oc_gkg,lc,notes\na,1,1,25,2,stony\nb,2,2,-999,1,\n");
    const auto res = standardize_table(raw, mixed_schema(), {{"lc", kLandCover}});
    const auto table = make_standardized_table(mixed_schema(), res.records);
    const auto back = read_standardized(write_standardized_csv(table), write_standardized_sidecar(table));
    EXPECT_EQ(back.dataset_id, "mixed");
    EXPECT_EQ(back.columns, table.columns);
    EXPECT_EQ(back.records, table.records);
    EXPECT_EQ(back.meta.at("lc").codebook, std::optional<std::string>("lc"));
    EXPECT_EQ(back.meta.at("oc_gkg").unit, "%");
}

TEST(StandardizeRaster, InvalidCellsBecomeNodataThenConvert) {
    RasterGrid g(3, 1, 0, 0, 1, -9999, {0.0, 25.0, -9999});
    ColumnMap cm;
    cm.source_columns = {"grid.asc"};
    cm.target_feature_id = "oc";
    cm.scale = 0.1;
    cm.invalid_rules = {{InvalidRule::Kind::EqualsSentinel, 0.0}};
    std::vector<Issue> issues;
    const auto out = standardize_raster(g, cm, &issues);
    EXPECT_TRUE(out.is_nodata(0, 0));
    EXPECT_DOUBLE_EQ(out.at(0, 1), 2.5);
    EXPECT_TRUE(out.is_nodata(0, 2));
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].row, 0u);
}

TEST(SchemaIo, FixtureSchemasParse) {
    const auto schemas = load_schema_dir(fixture("corpus/schemas"));
    ASSERT_EQ(schemas.size(), 2u);
    EXPECT_EQ(schemas[0].dataset_id, "eu_dem");
    EXPECT_EQ(schemas[1].dataset_id, "lucas_topsoil");
    const auto& lucas = schemas[1];
    EXPECT_EQ(lucas.effective_namespace(), "lucas");
    ASSERT_EQ(lucas.column_maps.size(), 5u);
    EXPECT_EQ(lucas.column_maps[4].source_columns.size(), 12u);
    EXPECT_EQ(write_schema(parse_schema(write_schema(lucas))), write_schema(lucas));
    const auto books = load_codebook_dir(fixture("corpus/schemas"));
    EXPECT_EQ(books.at("lucas_lc").mapping.at("2"), "forest");
}

TEST(SchemaIo, RejectsMalformedDocuments) {
    EXPECT_EQ(error_code_of([] { parse_schema("{not json"); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(error_code_of([] { parse_schema(R"({"dataset_id":"x","kind":"gridded"})"); }),
              ErrorCode::SchemaMismatch);
}
