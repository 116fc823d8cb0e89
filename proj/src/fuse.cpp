#include "soilfuse/fuse.hpp"

#include "soilfuse/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

namespace soilfuse {

namespace fs = std::filesystem;

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
    constexpr double kRad = std::numbers::pi / 180.0;
    const double phi1 = a.lat * kRad;
    const double phi2 = b.lat * kRad;
    const double dphi = (b.lat - a.lat) * kRad;
    const double dlambda = (b.lon - a.lon) * kRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

ScreenVerdict screen_dataset(const ScreeningMeta& meta) {
    if (meta.resolution_m && *meta.resolution_m > kMaxResolutionM) return {false, "coarse resolution"};
    if (meta.is_long_term_projection) return {false, "long-term projection"};
    if (meta.kind == SourceKind::SampleStructured && !meta.has_georef) return {false, "no georeference"};
    return {};
}

ScreeningMeta screening_meta(const FusionSchema& schema) {
    ScreeningMeta m;
    m.kind = schema.kind;
    m.has_georef = schema.kind == SourceKind::MapStructured || schema.georef_columns.has_value();
    m.resolution_m = schema.resolution_m;
    m.is_long_term_projection = schema.long_term_projection;
    return m;
}

std::optional<std::pair<std::size_t, std::size_t>> nearest_cell(const RasterGrid& grid, const GeoPoint& p) {
    const double cs = grid.cellsize();
    const double x = (p.lon - grid.xllcorner()) / cs;
    const double y = (p.lat - grid.yllcorner()) / cs;
    const auto nc = static_cast<double>(grid.ncols());
    const auto nr = static_cast<double>(grid.nrows());
    if (!(x >= 0.0 && x <= nc && y >= 0.0 && y <= nr)) return std::nullopt;
    auto col = static_cast<std::size_t>(std::min(std::floor(x), nc - 1.0));
    auto row_from_south = static_cast<std::size_t>(std::min(std::floor(y), nr - 1.0));
    return std::pair{grid.nrows() - 1 - row_from_south, col};
}

std::optional<RasterHit> sample_raster_at(const RasterGrid& grid, const GeoPoint& p) {
    auto cell = nearest_cell(grid, p);
    if (!cell) return std::nullopt;
    const auto [row, col] = *cell;
    if (grid.is_nodata(row, col)) return std::nullopt;
    return RasterHit{grid.at(row, col), haversine_m(p, grid.cell_center(row, col)), row, col};
}

namespace {

struct TableParts {
    std::vector<FeatureDef> features;
    std::vector<Sample> samples;
    std::map<std::string, std::string> owners;

    explicit TableParts(const FusedTable& t) : features(t.features()), samples(t.samples()), owners(t.feature_owners()) {}

    FusedTable build() && { return FusedTable(std::move(features), std::move(samples), std::move(owners)); }

    Sample* find(const std::string& id) {
        auto it = std::lower_bound(samples.begin(), samples.end(), id,
                                   [](const Sample& s, const std::string& key) { return s.sample_id < key; });
        return it != samples.end() && it->sample_id == id ? &*it : nullptr;
    }
};

} // namespace

FusedTable register_features(const FusedTable& table, const FusionSchema& schema) {
    TableParts parts(table);
    for (const auto& def : schema.features) {
        check_feature_def(def);
        const FeatureDef* existing = table.find_feature(def.id);
        if (!existing) {
            parts.features.push_back(def);
            parts.owners[def.id] = schema.dataset_id;
            continue;
        }
        auto owner = table.feature_owners().find(def.id);
        if (owner == table.feature_owners().end() || owner->second != schema.dataset_id) {
            throw Error(ErrorCode::FeatureCollision,
                        "feature '" + def.id + "' is already owned by '" +
                            (owner == table.feature_owners().end() ? std::string("<unowned>") : owner->second) +
                            "', cannot be written by '" + schema.dataset_id + "'");
        }
        if (!(*existing == def)) {
            throw Error(ErrorCode::FeatureCollision, "feature '" + def.id + "' redefined by '" + schema.dataset_id + "'");
        }
    }
    return std::move(parts).build();
}

FusedTable execute_schema(const FusionSchema& schema, const std::vector<StandardizedRecord>& records,
                          const FusedTable& table, FusionReport& report) {
    check_schema(schema);
    if (schema.kind != SourceKind::SampleStructured) {
        throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "' is not sample-structured");
    }
    if (!schema.georef_columns) {
        throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "' declares no georef columns");
    }
    report.dataset_id = schema.dataset_id;
    TableParts parts(register_features(table, schema));
    const Provenance prov{schema.dataset_id, SourceKind::SampleStructured, 0.0};

    std::vector<Sample> created;
    std::map<std::string, std::size_t> created_pos;
    for (const auto& rec : records) {
        if (!rec.georef) {
            ++report.records_skipped;
            continue;
        }
        const std::string id = schema.effective_namespace() + ":" + rec.record_id;
        Sample* sample = parts.find(id);
        if (!sample) {
            auto it = created_pos.find(id);
            sample = it == created_pos.end() ? nullptr : &created[it->second];
        }
        if (sample) {
            if (location_key(sample->location) != location_key(*rec.georef)) {
                report.warnings.push_back("record '" + rec.record_id + "' disagrees with the location of sample '" + id +
                                          "'; skipped");
                ++report.records_skipped;
                continue;
            }
            ++report.samples_extended;
        } else {
            created_pos.emplace(id, created.size());
            created.push_back(Sample{id, *rec.georef, rec.survey, {}});
            sample = &created.back();
            ++report.samples_created;
        }

        for (const auto& cm : schema.column_maps) {
            const FeatureDef& def = *schema.find_feature(cm.target_feature_id);
            auto value_of = [&](const std::string& col) -> const StdValue* {
                auto it = rec.values.find(col);
                return it == rec.values.end() ? nullptr : &it->second;
            };
            CellValue cell = Missing{};
            switch (def.modality) {
            case Modality::ScalarNum:
                if (auto* v = value_of(cm.source_columns.front()); v && std::holds_alternative<double>(*v)) {
                    cell = std::get<double>(*v);
                }
                break;
            case Modality::VectorNum: {
                std::vector<double> vec;
                for (const auto& col : cm.source_columns) {
                    auto* v = value_of(col);
                    if (!v || !std::holds_alternative<double>(*v)) break;
                    vec.push_back(std::get<double>(*v));
                }
                if (vec.size() == def.vector_dim) cell = std::move(vec);
                break;
            }
            case Modality::Categorical:
                if (auto* v = value_of(cm.source_columns.front()); v && std::holds_alternative<Category>(*v)) {
                    cell = std::get<Category>(*v);
                }
                break;
            case Modality::Text:
                if (auto* v = value_of(cm.source_columns.front()); v && std::holds_alternative<Text>(*v)) {
                    cell = std::get<Text>(*v);
                }
                break;
            case Modality::ImageRef:
                if (auto* v = value_of(cm.source_columns.front()); v && std::holds_alternative<Text>(*v)) {
                    cell = ImageRef{std::get<Text>(*v).text};
                }
                break;
            }
            if (is_missing(cell)) {
                sample->cells.erase(def.id);
                ++report.cells_missing;
                continue;
            }
            if (auto verdict = validate_cell(def, cell); !verdict) {
                report.warnings.push_back("record '" + rec.record_id + "', feature '" + def.id + "': " +
                                          verdict.violation + "; set Missing");
                ++report.cells_missing;
                continue;
            }
            sample->cells[def.id] = Cell{std::move(cell), prov};
            ++report.cells_written;
        }
    }
    for (auto& s : created) parts.samples.push_back(std::move(s));
    return std::move(parts).build();
}

FusedTable execute_schema(const FusionSchema& schema, const std::map<std::string, RasterGrid>& rasters,
                          const FusedTable& table, FusionReport& report) {
    check_schema(schema);
    if (schema.kind != SourceKind::MapStructured) {
        throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "' is not map-structured");
    }
    report.dataset_id = schema.dataset_id;
    TableParts parts(register_features(table, schema));

    for (const auto& cm : schema.column_maps) {
        auto it = rasters.find(cm.source_columns.front());
        if (it == rasters.end()) {
            throw Error(ErrorCode::SchemaMismatch,
                        "schema '" + schema.dataset_id + "': raster '" + cm.source_columns.front() + "' not provided");
        }
        const RasterGrid& grid = it->second;
        for (auto& sample : parts.samples) {
            if (!nearest_cell(grid, sample.location)) {
                ++report.out_of_extent;
                continue;
            }
            auto hit = sample_raster_at(grid, sample.location);
            if (!hit) {
                ++report.cells_missing;
                continue;
            }
            sample.cells[cm.target_feature_id] =
                Cell{hit->value, Provenance{schema.dataset_id, SourceKind::MapStructured, hit->alignment_distance_m}};
            ++report.cells_written;
        }
    }
    return std::move(parts).build();
}

FusedTable link_asset(const FusedTable& table, const std::string& sample_id, const std::string& feature_id,
                      const std::string& ref, FusionReport& report) {
    const FeatureDef* def = table.find_feature(feature_id);
    if (!def) throw Error(ErrorCode::UnknownFeature, "unknown feature '" + feature_id + "'");
    if (def->modality != Modality::ImageRef) {
        throw Error(ErrorCode::InvalidValue, "feature '" + feature_id + "' does not hold asset references");
    }
    if (!table.find_sample(sample_id)) throw Error(ErrorCode::UnknownSample, "unknown sample '" + sample_id + "'");

    TableParts parts(table);
    Sample& s = *parts.find(sample_id);
    if (s.cells.count(feature_id)) {
        report.warnings.push_back("asset for sample '" + sample_id + "', feature '" + feature_id + "' relinked");
    }
    auto owner = table.feature_owners().find(feature_id);
    const std::string source = owner == table.feature_owners().end() ? std::string("assets") : owner->second;
    s.cells[feature_id] = Cell{ImageRef{ref}, Provenance{source, SourceKind::SampleStructured, 0.0}};
    ++report.cells_written;
    return std::move(parts).build();
}

LocationIndex build_location_index(const FusedTable& table) { return index_locations(table.samples()); }

CorpusResult fuse_directory(const std::string& std_dir, const std::vector<FusionSchema>& schemas) {
    CorpusResult result;
    std::vector<const FusionSchema*> sample_schemas;
    std::vector<const FusionSchema*> map_schemas;
    for (const auto& s : schemas) {
        ScreenVerdict v = screen_dataset(screening_meta(s));
        result.screening.emplace_back(s.dataset_id, v);
        if (!v.keep) continue;
        (s.kind == SourceKind::SampleStructured ? sample_schemas : map_schemas).push_back(&s);
    }
    const fs::path dir(std_dir);
    for (const FusionSchema* s : sample_schemas) {
        const auto csv = text::read_file((dir / (s->dataset_id + ".csv")).string());
        const auto meta = text::read_file((dir / (s->dataset_id + ".meta.json")).string());
        StandardizedTable st = read_standardized(csv, meta);
        FusionReport report;
        result.table = execute_schema(*s, st.records, result.table, report);
        result.reports.push_back(std::move(report));
    }
    for (const FusionSchema* s : map_schemas) {
        std::map<std::string, RasterGrid> rasters;
        for (const auto& cm : s->column_maps) {
            const auto& name = cm.source_columns.front();
            rasters.emplace(name, parse_portable_raster(text::read_file((dir / (s->dataset_id + "__" + name)).string())));
        }
        FusionReport report;
        result.table = execute_schema(*s, rasters, result.table, report);
        result.reports.push_back(std::move(report));
    }
    const fs::path assets = dir / "assets.csv";
    if (fs::exists(assets)) {
        RawTable links = parse_raw_table(text::read_file(assets.string()));
        auto sid = links.column("sample_id");
        auto fid = links.column("feature_id");
        auto path = links.column("path");
        if (!sid || !fid || !path) throw Error(ErrorCode::SchemaMismatch, "assets.csv needs sample_id,feature_id,path");
        FusionReport report;
        report.dataset_id = "assets";
        for (const auto& row : links.rows) {
            result.table = link_asset(result.table, row[*sid], row[*fid], row[*path], report);
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

std::string write_fusion_report_text(const CorpusResult& result) {
    std::string out = "fusion report\n";
    out += "samples: " + std::to_string(result.table.samples().size()) + "\n";
    out += "features: " + std::to_string(result.table.features().size()) + "\n";
    out += "unique locations: " + std::to_string(result.table.location_index().size()) + "\n";
    out += "screening:\n";
    for (const auto& [id, v] : result.screening) {
        out += "  " + id + ": " + (v.keep ? std::string("keep") : "exclude (" + v.reason + ")") + "\n";
    }
    for (const auto& r : result.reports) {
        out += "dataset " + r.dataset_id + ": created " + std::to_string(r.samples_created) + ", extended " +
               std::to_string(r.samples_extended) + ", skipped " + std::to_string(r.records_skipped) + ", written " +
               std::to_string(r.cells_written) + ", missing " + std::to_string(r.cells_missing) + ", out-of-extent " +
               std::to_string(r.out_of_extent) + "\n";
        for (const auto& w : r.warnings) out += "  warning: " + w + "\n";
    }
    return out;
}

std::string write_fusion_report_csv(const CorpusResult& result) {
    std::string out = text::csv_line({"dataset_id", "samples_created", "samples_extended", "records_skipped",
                                      "cells_written", "cells_missing", "out_of_extent", "warnings"});
    for (const auto& r : result.reports) {
        out += text::csv_line({r.dataset_id, std::to_string(r.samples_created), std::to_string(r.samples_extended),
                               std::to_string(r.records_skipped), std::to_string(r.cells_written),
                               std::to_string(r.cells_missing), std::to_string(r.out_of_extent),
                               std::to_string(r.warnings.size())});
    }
    return out;
}

} // namespace soilfuse
