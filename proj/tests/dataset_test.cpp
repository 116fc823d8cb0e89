#include "soilfuse/dataset.hpp"
#include "soilfuse/text.hpp"
#include "support.hpp"

#include <algorithm>
#include <set>

using namespace soilfuse;
using namespace soilfuse::testing;

namespace {

// Random table: a few surveys, mixed modalities, map-structured cells with
// random distances and random holes.
FusedTable random_table(std::mt19937_64& rng, std::size_t n_samples) {
    std::vector<FeatureDef> features{scalar_feature("ph", "chemical"), scalar_feature("oc", "carbon"),
                                     scalar_feature("elev", "topography_geology"),
                                     categorical_feature("lc", {"crop", "forest", "grass"}), vector_feature("pr", 3),
                                     text_feature("notes")};
    std::uniform_real_distribution<double> u(0, 1), coord(-5, 5), dist(0, 400);
    const std::vector<std::string> surveys{"S2009", "S2015", "S2018"};
    std::vector<Sample> samples;
    const double density = u(rng);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto s = make_sample("s" + std::to_string(i), coord(rng), coord(rng), surveys[rng() % surveys.size()]);
        auto maybe = [&] { return u(rng) < density; };
        if (maybe()) s.cells["ph"] = observed(4 + 4 * u(rng));
        if (maybe()) s.cells["oc"] = observed(u(rng) * 10);
        if (maybe()) s.cells["elev"] = observed(100 + 500 * u(rng), "dem", 1e-3 + dist(rng));
        if (maybe()) s.cells["lc"] = observed(Category{features[3].vocabulary[rng() % 3]});
        if (maybe()) s.cells["pr"] = observed(std::vector<double>{u(rng), u(rng), u(rng)});
        if (maybe()) s.cells["notes"] = observed(Text{"n" + std::to_string(i)});
        samples.push_back(std::move(s));
    }
    return FusedTable(features, samples);
}

FusedTable golden_table() { return import_dictionary(text::read_file(golden("fused.json"))); }

} // namespace

TEST(Availability, Examples) {
    std::vector<Sample> samples;
    for (int i = 0; i < 4; ++i) {
        auto s = make_sample("s" + std::to_string(i), i, i);
        if (i < 3) s.cells["ph"] = observed(6.0);
        s.cells["all"] = observed(1.0);
        samples.push_back(s);
    }
    FusedTable t({scalar_feature("ph"), scalar_feature("all"), scalar_feature("none")}, samples);
    const auto a = compute_availability(t);
    EXPECT_EQ(a.per_feature.at("ph"), 0.75);
    EXPECT_EQ(a.per_feature.at("all"), 1.0);
    EXPECT_EQ(a.per_feature.at("none"), 0.0);
    EXPECT_EQ(a.histogram.size(), 10u);
    EXPECT_EQ(a.histogram[0] + a.histogram[7] + a.histogram[9], 3u);
}

TEST(Availability, MatchesBruteForceCounts) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_table(rng, 1 + rng() % 40);
        const auto a = compute_availability(t);
        std::map<std::string, std::size_t> survey_n;
        for (const auto& s : t.samples()) ++survey_n[s.source_survey];
        for (const auto& f : t.features()) {
            std::size_t hits = 0;
            for (const auto& s : t.samples()) hits += s.find(f.id) != nullptr;
            EXPECT_EQ(a.per_feature.at(f.id), static_cast<double>(hits) / t.samples().size());
        }
        for (const auto& [survey, n] : survey_n) {
            std::map<std::string, std::vector<double>> theme_fracs;
            for (const auto& f : t.features()) {
                std::size_t hits = 0;
                for (const auto& s : t.samples())
                    if (s.source_survey == survey && s.find(f.id)) ++hits;
                theme_fracs[f.theme].push_back(static_cast<double>(hits) / n);
            }
            for (const auto& [theme, fracs] : theme_fracs) {
                double sum = 0;
                for (double x : fracs) sum += x;
                EXPECT_DOUBLE_EQ(a.matrix.at({theme, survey}), sum / fracs.size());
            }
        }
        std::size_t total = 0;
        for (auto c : a.histogram) total += c;
        EXPECT_EQ(total, t.features().size());
    }
}

TEST(Alignment, Summaries) {
    std::vector<Sample> samples;
    for (int i = 0; i < 3; ++i) {
        auto s = make_sample("s" + std::to_string(i), i, i);
        s.cells["elev"] = observed(1.0, "dem", 10.0 * (i + 1));
        s.cells["ph"] = observed(6.0);
        samples.push_back(s);
    }
    FusedTable t({scalar_feature("elev"), scalar_feature("ph"), scalar_feature("empty")}, samples);
    const auto e = summarize_alignment(t, "elev");
    ASSERT_TRUE(e);
    EXPECT_EQ(e->min, 10.0);
    EXPECT_EQ(e->mean, 20.0);
    EXPECT_EQ(e->max, 30.0);
    const auto p = summarize_alignment(t, "ph");
    EXPECT_EQ(p->max, 0.0);
    EXPECT_FALSE(summarize_alignment(t, "empty"));
    EXPECT_EQ(error_code_of([&] { summarize_alignment(t, "zz"); }), ErrorCode::UnknownFeature);
}

TEST(Dictionary, GoldenIsAFixedPoint) {
    const std::string doc = text::read_file(golden("fused.json"));
    EXPECT_EQ(export_dictionary(import_dictionary(doc)), doc);
}

TEST(Dictionary, EmptyTable) {
    const auto doc = export_dictionary(FusedTable{});
    EXPECT_NE(doc.find("\"samples\": {}"), std::string::npos);
    EXPECT_EQ(import_dictionary(doc), FusedTable{});
}

TEST(Dictionary, RoundTripPreservesEverything) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const auto t = random_table(rng, rng() % 25);
        const auto doc = export_dictionary(t);
        const auto back = import_dictionary(doc);
        EXPECT_EQ(back, t);
        EXPECT_EQ(export_dictionary(back), doc);
    }
}

TEST(Dictionary, MissingAssetWarnsButKeepsReference) {
    FeatureDef photo = scalar_feature("photo", "ASSETS");
    photo.modality = Modality::ImageRef;
    auto s = make_sample("s", 1, 1);
    s.cells["photo"] = observed(ImageRef{"photos/none.jpg"});
    FusedTable t({photo}, {s});
    std::vector<std::string> warnings;
    ScratchDir dir("assets");
    const auto doc = export_dictionary(t, {dir.str()}, &warnings);
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_NE(doc.find("photos/none.jpg"), std::string::npos);
}

TEST(Dictionary, RejectsMalformedDocuments) {
    EXPECT_THROW(import_dictionary("{}"), Error);
    EXPECT_THROW(import_dictionary("[1,2"), Error);
}

TEST(FlatExport, GoldenCsvAndVectorExpansion) {
    const auto flat = export_flat_table(golden_table());
    EXPECT_EQ(flat.csv, text::read_file(golden("flat.csv")));
    EXPECT_EQ(flat.columns_json, text::read_file(golden("flat.columns.json")));
    const auto header = text::parse_csv(flat.csv).at(0);
    const auto n = std::count_if(header.begin(), header.end(),
                                 [](const std::string& c) { return c.rfind("precip_monthly_", 0) == 0; });
    EXPECT_EQ(n, 12);
    EXPECT_EQ(header.back(), "elevation");
}

TEST(FlatExport, ColumnMetadata) {
    const auto flat = export_flat_table(golden_table());
    const auto rows = text::parse_csv(flat.csv);
    ASSERT_EQ(rows.size(), 7u);
    // P2-2015 has its pH sentinel removed: an empty cell, not a zero.
    const auto& header = rows[0];
    const auto ph = std::find(header.begin(), header.end(), "ph_h2o") - header.begin();
    EXPECT_EQ(rows[3][0], "lucas:P2-2015");
    EXPECT_EQ(rows[3][ph], "");
    EXPECT_NE(flat.columns_json.find("\"sources\": [\n        \"eu_dem\"\n      ]"), std::string::npos);
}

TEST(Filter, BoundaryExamples) {
    std::vector<Sample> samples;
    for (int i = 0; i < 100; ++i) {
        auto s = make_sample("s" + std::to_string(i), i * 0.01, 0);
        if (i < 49) s.cells["a49"] = observed(1.0 * i);
        if (i < 50) s.cells["a50"] = observed(1.0 * i);
        if (i < 90) s.cells["txt"] = observed(Text{"x"});
        s.cells["map"] = observed(1.0 * i, "dem", i == 7 ? 250.0 : 50.0);
        s.cells["flat"] = observed(3.0);
        samples.push_back(s);
    }
    FusedTable t({scalar_feature("a49"), scalar_feature("a50"), text_feature("txt"), scalar_feature("map"),
                  scalar_feature("flat")},
                 samples);
    const auto r = filter_training_view(t);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_EQ(r.kept[0].id, "a50");
    std::map<std::string, std::string> rule;
    for (const auto& e : r.excluded) rule[e.feature_id] = e.rule;
    EXPECT_EQ(rule.at("a49"), "availability");
    EXPECT_EQ(rule.at("txt"), "modality");
    EXPECT_EQ(rule.at("map"), "alignment");
    EXPECT_EQ(rule.at("flat"), "constant");
    EXPECT_NE(write_exclusion_report(r.excluded).find("a49,availability"), std::string::npos);
}

TEST(Filter, SurvivorsSatisfyEveryRule) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = random_table(rng, 2 + rng() % 30);
        const auto r = filter_training_view(t);
        const auto a = compute_availability(t);
        EXPECT_EQ(r.kept.size() + r.excluded.size(), t.features().size());
        for (const auto& f : r.kept) {
            EXPECT_GE(a.per_feature.at(f.id), 0.5);
            EXPECT_NE(f.modality, Modality::Text);
            for (const auto& s : t.samples())
                if (const Cell* c = s.find(f.id)) EXPECT_LE(c->provenance.alignment_distance_m, 200.0);
        }
    }
}

TEST(Split, CollocatedSamplesShareTags) {
    std::vector<Sample> samples;
    for (int i = 0; i < 100; ++i) {
        samples.push_back(make_sample("a" + std::to_string(i), i * 0.1, 1));
        if (i % 3 == 0) samples.push_back(make_sample("b" + std::to_string(i), i * 0.1, 1));
    }
    FusedTable t({}, samples);
    const auto tags = split_by_location(t, 0.1, 1234);
    EXPECT_EQ(tags, split_by_location(t, 0.1, 1234));
    std::set<std::string> eval_keys;
    std::map<std::string, SplitTag> by_key;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const auto key = location_key(t.samples()[i].location);
        auto [it, fresh] = by_key.emplace(key, tags[i]);
        EXPECT_EQ(it->second, tags[i]);
        if (tags[i] == SplitTag::Eval) eval_keys.insert(key);
    }
    EXPECT_EQ(eval_keys.size(), 10u);
    EXPECT_NE(tags, split_by_location(t, 0.1, 1235));
    EXPECT_THROW(split_by_location(t, 1.0, 1), Error);
}

TEST(ZScore, PopulationStatistics) {
    TrainingView v;
    v.sample_ids = {"a", "b", "c", "d"};
    v.numeric_columns = {"x"};
    v.numeric_feature = {"x"};
    v.numeric = Matrix<double>(4, 1);
    v.numeric_mask = Matrix<std::uint8_t>(4, 1, 1);
    v.numeric(0, 0) = 1;
    v.numeric(1, 0) = 2;
    v.numeric(2, 0) = 3;
    v.numeric(3, 0) = 10;
    v.split = {SplitTag::Train, SplitTag::Train, SplitTag::Train, SplitTag::Eval};
    const auto z = fit_apply_zscore(v);
    EXPECT_DOUBLE_EQ(z.stats.mean[0], 2.0);
    EXPECT_NEAR(z.stats.std[0], 0.816496580927726, 1e-12);
    EXPECT_NEAR(z.view.numeric(2, 0), 1.224744871391589, 1e-12);
    EXPECT_NEAR(z.view.numeric(3, 0), 8.0 / 0.816496580927726, 1e-9);

    const auto again = fit_apply_zscore(z.view);
    EXPECT_NEAR(again.stats.mean[0], 0.0, 1e-12);
    EXPECT_NEAR(again.stats.std[0], 1.0, 1e-12);

    v.numeric(1, 0) = 1;
    v.numeric(2, 0) = 1;
    EXPECT_EQ(error_code_of([&] { fit_apply_zscore(v); }), ErrorCode::ConstantColumn);
}

TEST(ZScore, TrainSplitIsStandardizedEvalIsNot) {
    const auto t = golden_table();
    const auto kept = filter_training_view(t).kept;
    const auto view = build_training_view(t, kept, split_by_location(t, 0.4, 7));
    const auto z = fit_apply_zscore(view);
    for (std::size_t c = 0; c < z.view.numeric.cols; ++c) {
        double sum = 0, sq = 0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < z.view.numeric.rows; ++r) {
            if (!z.view.numeric_mask(r, c) || z.view.split[r] != SplitTag::Train) continue;
            sum += z.view.numeric(r, c);
            sq += z.view.numeric(r, c) * z.view.numeric(r, c);
            ++n;
        }
        const double mean = sum / n;
        EXPECT_NEAR(mean, 0.0, 1e-9) << z.view.numeric_columns[c];
        EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 1.0, 1e-9) << z.view.numeric_columns[c];
    }
    // Masked cells are left at 0 and keep their mask.
    EXPECT_EQ(z.view.numeric_mask, view.numeric_mask);
}

TEST(TrainingView, ShapesAndModalities) {
    const auto t = golden_table();
    const auto kept = filter_training_view(t).kept;
    std::vector<std::string> ids;
    for (const auto& f : kept) ids.push_back(f.id);
    EXPECT_EQ(ids, (std::vector<std::string>{"oc", "ph_h2o", "land_cover", "precip_monthly"}));
    const auto v = build_training_view(t, kept, std::vector<SplitTag>(t.samples().size(), SplitTag::Train));
    EXPECT_EQ(v.numeric.rows, 6u);
    EXPECT_EQ(v.numeric.cols, 14u);
    EXPECT_EQ(v.numeric_mask.cols, v.numeric.cols);
    EXPECT_EQ(v.categorical.cols, 1u);
    EXPECT_EQ(v.categorical(5, 0), 1);
    EXPECT_EQ(v.categorical_mask(4, 0), 0);
    EXPECT_EQ(v.categorical(4, 0), -1);
    EXPECT_THROW(build_training_view(t, {*t.find_feature("site_description")}, v.split), Error);
}

TEST(TrainingView, FilesRoundTrip) {
    const auto t = golden_table();
    auto kept = filter_training_view(t, {0.1, 1000.0, {Modality::Text}, true}).kept;
    const auto z = fit_apply_zscore(build_training_view(t, kept, split_by_location(t, 0.4, 7)));
    ScratchDir dir("view");
    write_training_view(z.view, z.stats, dir.str());
    const auto back = read_training_view(dir.str());
    EXPECT_EQ(back.view.sample_ids, z.view.sample_ids);
    EXPECT_EQ(back.view.numeric_columns, z.view.numeric_columns);
    EXPECT_EQ(back.view.numeric, z.view.numeric);
    EXPECT_EQ(back.view.numeric_mask, z.view.numeric_mask);
    EXPECT_EQ(back.view.categorical, z.view.categorical);
    EXPECT_EQ(back.view.visual_refs, z.view.visual_refs);
    EXPECT_EQ(back.view.split, z.view.split);
    EXPECT_EQ(back.view.kept_features, z.view.kept_features);
    EXPECT_EQ(back.stats.mean, z.stats.mean);
    EXPECT_EQ(back.stats.std, z.stats.std);
    ASSERT_EQ(back.view.visual_features.size(), 1u);
    EXPECT_EQ(back.view.visual_refs[0][1], std::optional<std::string>("photos/P1-2015.jpg"));
}
