#include "soilfuse/standardize.hpp"

#include "soilfuse/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace soilfuse {

using nlohmann::json;

std::optional<std::size_t> RawTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

RawTable parse_raw_table(std::string_view csv) {
    auto records = text::parse_csv(csv);
    RawTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    for (auto& h : t.header) h = std::string(text::trim(h));
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) {
            throw Error(ErrorCode::ShapeMismatch, "csv row " + std::to_string(i) + " has " +
                                                      std::to_string(records[i].size()) + " fields, header has " +
                                                      std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

std::optional<std::string> apply_codebook(std::string_view raw, const Codebook& cb) {
    const std::string key(text::trim(raw));
    if (auto it = cb.mapping.find(key); it != cb.mapping.end()) return it->second;
    if (cb.missing_codes.count(key)) return std::nullopt;
    throw Error(ErrorCode::UnknownCode, "code '" + key + "' not in codebook '" + cb.id + "'");
}

std::optional<double> detect_invalid_numeric(double value, std::span<const InvalidRule> rules) {
    for (const auto& r : rules) {
        switch (r.kind) {
        case InvalidRule::Kind::EqualsSentinel:
            if (value == r.threshold) return std::nullopt;
            break;
        case InvalidRule::Kind::Below:
            if (value < r.threshold) return std::nullopt;
            break;
        case InvalidRule::Kind::Above:
            if (value > r.threshold) return std::nullopt;
            break;
        }
    }
    return value;
}

namespace {

const InvalidRule* first_fired(double value, std::span<const InvalidRule> rules) {
    for (const auto& r : rules) {
        if (!detect_invalid_numeric(value, std::span<const InvalidRule>(&r, 1))) return &r;
    }
    return nullptr;
}

} // namespace

RasterGrid parse_portable_raster(std::string_view doc) {
    std::vector<std::string> lines;
    for (auto& l : text::split(doc, '\n')) {
        auto t = text::trim(l);
        lines.emplace_back(t);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    static constexpr const char* kKeys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
    if (lines.size() < 6) throw Error(ErrorCode::MalformedHeader, "raster: header needs six lines");
    double header[6] = {};
    for (int i = 0; i < 6; ++i) {
        std::istringstream ss(lines[i]);
        std::string key, value, extra;
        ss >> key >> value;
        if (key != kKeys[i] || value.empty() || (ss >> extra)) {
            throw Error(ErrorCode::MalformedHeader, std::string("raster: expected '") + kKeys[i] + " <value>' on line " +
                                                        std::to_string(i + 1));
        }
        if (i < 2) {
            auto n = text::parse_int(value);
            if (!n || *n <= 0) throw Error(ErrorCode::MalformedHeader, std::string("raster: ") + kKeys[i] + " must be a positive integer");
            header[i] = static_cast<double>(*n);
        } else {
            auto v = text::parse_double(value);
            if (!v || !std::isfinite(*v)) throw Error(ErrorCode::MalformedHeader, std::string("raster: bad ") + kKeys[i]);
            header[i] = *v;
        }
    }
    if (!(header[4] > 0.0)) throw Error(ErrorCode::MalformedHeader, "raster: cellsize must be positive");

    const auto ncols = static_cast<std::size_t>(header[0]);
    const auto nrows = static_cast<std::size_t>(header[1]);
    if (lines.size() - 6 != nrows) {
        throw Error(ErrorCode::ShapeMismatch, "raster: expected " + std::to_string(nrows) + " rows, found " +
                                                  std::to_string(lines.size() - 6));
    }
    std::vector<double> values;
    values.reserve(ncols * nrows);
    for (std::size_t r = 0; r < nrows; ++r) {
        std::istringstream ss(lines[6 + r]);
        std::string tok;
        std::size_t count = 0;
        while (ss >> tok) {
            auto v = text::parse_double(tok);
            if (!v || (!std::isfinite(*v) && *v != header[5])) {
                throw Error(ErrorCode::NonNumericCell, "raster: non-numeric cell '" + tok + "' in row " + std::to_string(r));
            }
            values.push_back(*v);
            ++count;
        }
        if (count != ncols) {
            throw Error(ErrorCode::ShapeMismatch, "raster: row " + std::to_string(r) + " has " + std::to_string(count) +
                                                      " values, expected " + std::to_string(ncols));
        }
    }
    return RasterGrid(ncols, nrows, header[2], header[3], header[4], header[5], std::move(values));
}

std::string write_portable_raster(const RasterGrid& grid) {
    std::string out;
    out += "ncols " + std::to_string(grid.ncols()) + "\n";
    out += "nrows " + std::to_string(grid.nrows()) + "\n";
    out += "xllcorner " + text::format_double(grid.xllcorner()) + "\n";
    out += "yllcorner " + text::format_double(grid.yllcorner()) + "\n";
    out += "cellsize " + text::format_double(grid.cellsize()) + "\n";
    out += "nodata_value " + text::format_double(grid.nodata_value()) + "\n";
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
        for (std::size_t c = 0; c < grid.ncols(); ++c) {
            if (c) out.push_back(' ');
            out += text::format_double(grid.at(r, c));
        }
        out.push_back('\n');
    }
    return out;
}

StandardizeResult standardize_table(const RawTable& raw, const FusionSchema& schema,
                                    const std::map<std::string, Codebook>& codebooks) {
    if (schema.kind != SourceKind::SampleStructured) {
        throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "' is not sample-structured");
    }
    check_schema(schema);

    auto require = [&](const std::string& col) {
        auto idx = raw.column(col);
        if (!idx) {
            throw Error(ErrorCode::SchemaMismatch,
                        "schema '" + schema.dataset_id + "': column '" + col + "' missing from source header");
        }
        return *idx;
    };

    StandardizeResult out;
    if (raw.header.empty() && raw.rows.empty()) return out;

    std::optional<std::pair<std::size_t, std::size_t>> georef;
    if (schema.georef_columns) georef = {require(schema.georef_columns->lon_col), require(schema.georef_columns->lat_col)};
    std::optional<std::size_t> id_col;
    if (schema.record_id_column) id_col = require(*schema.record_id_column);
    std::optional<std::size_t> survey_col;
    if (schema.survey_column) survey_col = require(*schema.survey_column);

    struct Plan {
        std::size_t index;
        std::string column;
        const ColumnMap* map;
        const FeatureDef* def;
        const Codebook* codebook;
    };
    std::vector<Plan> plans;
    for (const auto& cm : schema.column_maps) {
        const FeatureDef* def = schema.find_feature(cm.target_feature_id);
        const Codebook* cb = nullptr;
        if (cm.codebook_ref) {
            auto it = codebooks.find(*cm.codebook_ref);
            if (it == codebooks.end()) {
                throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "': codebook '" +
                                                           *cm.codebook_ref + "' not provided");
            }
            cb = &it->second;
        }
        for (const auto& col : cm.source_columns) plans.push_back({require(col), col, &cm, def, cb});
    }

    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& row = raw.rows[r];
        StandardizedRecord rec;
        rec.record_id = id_col ? std::string(text::trim(row[*id_col])) : std::to_string(r);
        rec.survey = survey_col ? std::string(text::trim(row[*survey_col]))
                                : (schema.survey.empty() ? schema.dataset_id : schema.survey);
        if (georef) {
            auto lon = text::parse_double(row[georef->first]);
            auto lat = text::parse_double(row[georef->second]);
            if (lon && lat && is_valid(GeoPoint{*lon, *lat})) {
                rec.georef = GeoPoint{*lon, *lat};
            } else {
                out.issues.push_back({r, schema.georef_columns->lon_col + "/" + schema.georef_columns->lat_col,
                                      row[georef->first] + " " + row[georef->second], "invalid georeference",
                                      IssueAction::DroppedGeoref});
            }
        }

        for (const auto& p : plans) {
            ++out.input_cells;
            const std::string cell(text::trim(row[p.index]));
            auto set_missing = [&](std::string rule) {
                rec.values[p.column] = Missing{};
                out.issues.push_back({r, p.column, cell, std::move(rule), IssueAction::SetMissing});
            };
            const auto& declared = p.map->missing_codes;
            if (cell.empty() || std::find(declared.begin(), declared.end(), cell) != declared.end()) {
                rec.values[p.column] = Missing{};
                ++out.declared_missing;
                continue;
            }
            switch (p.def->modality) {
            case Modality::ScalarNum:
            case Modality::VectorNum: {
                auto v = text::parse_double(cell);
                if (!v) {
                    set_missing("non-numeric");
                    break;
                }
                if (!std::isfinite(*v)) {
                    set_missing("non-finite");
                    break;
                }
                if (const InvalidRule* fired = first_fired(*v, p.map->invalid_rules)) {
                    set_missing(describe(*fired));
                    break;
                }
                const double converted = convert_unit(*v, p.map->scale, p.map->offset);
                if (!std::isfinite(converted)) {
                    set_missing("non-finite after conversion");
                    break;
                }
                rec.values[p.column] = converted;
                break;
            }
            case Modality::Categorical: {
                std::optional<std::string> label = cell;
                if (p.codebook) {
                    if (p.codebook->missing_codes.count(cell)) {
                        rec.values[p.column] = Missing{};
                        ++out.declared_missing;
                        break;
                    }
                    try {
                        label = apply_codebook(cell, *p.codebook);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::UnknownCode) throw;
                        set_missing("unknown-code");
                        break;
                    }
                }
                if (!p.def->vocabulary_index(*label)) {
                    set_missing("label not in vocabulary");
                    break;
                }
                rec.values[p.column] = Category{*label};
                break;
            }
            case Modality::Text:
            case Modality::ImageRef:
                rec.values[p.column] = Text{cell};
                break;
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

RasterGrid standardize_raster(const RasterGrid& grid, const ColumnMap& column, std::vector<Issue>* issues) {
    std::vector<double> values = grid.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        double& v = values[i];
        if (v == grid.nodata_value()) continue;
        if (const InvalidRule* fired = first_fired(v, column.invalid_rules)) {
            if (issues) {
                issues->push_back({i, column.source_columns.front(), text::format_double(v), describe(*fired),
                                   IssueAction::SetMissing});
            }
            v = grid.nodata_value();
            continue;
        }
        v = convert_unit(v, column.scale, column.offset);
        if (v == grid.nodata_value() || !std::isfinite(v)) {
            if (issues) {
                issues->push_back({i, column.source_columns.front(), text::format_double(grid.values()[i]),
                                   "converted value collides with nodata", IssueAction::SetMissing});
            }
            v = grid.nodata_value();
        }
    }
    return RasterGrid(grid.ncols(), grid.nrows(), grid.xllcorner(), grid.yllcorner(), grid.cellsize(),
                      grid.nodata_value(), std::move(values));
}

StandardizedTable make_standardized_table(const FusionSchema& schema, std::vector<StandardizedRecord> records) {
    StandardizedTable t;
    t.dataset_id = schema.dataset_id;
    for (const auto& cm : schema.column_maps) {
        const FeatureDef* def = schema.find_feature(cm.target_feature_id);
        for (const auto& col : cm.source_columns) {
            t.columns.push_back(col);
            t.meta[col] = ColumnMeta{def ? def->unit : "", def ? def->modality : Modality::ScalarNum, cm.codebook_ref};
        }
    }
    t.records = std::move(records);
    return t;
}

namespace {

std::string render(const StdValue& v) {
    struct V {
        std::string operator()(const Missing&) const { return ""; }
        std::string operator()(double d) const { return text::format_double(d); }
        std::string operator()(const Category& c) const { return c.label; }
        std::string operator()(const Text& t) const { return t.text; }
    };
    return std::visit(V{}, v);
}

} // namespace

std::string write_standardized_csv(const StandardizedTable& table) {
    std::vector<std::string> header{"record_id", "survey", "lon", "lat"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    std::string out = text::csv_line(header);
    for (const auto& rec : table.records) {
        std::vector<std::string> row{rec.record_id, rec.survey,
                                     rec.georef ? text::format_double(rec.georef->lon) : "",
                                     rec.georef ? text::format_double(rec.georef->lat) : ""};
        for (const auto& col : table.columns) {
            auto it = rec.values.find(col);
            row.push_back(it == rec.values.end() ? "" : render(it->second));
        }
        out += text::csv_line(row);
    }
    return out;
}

std::string write_standardized_sidecar(const StandardizedTable& table) {
    json doc;
    doc["dataset_id"] = table.dataset_id;
    json cols = json::array();
    for (const auto& col : table.columns) {
        const auto& m = table.meta.at(col);
        json c{{"name", col}, {"unit", m.unit}, {"modality", std::string(to_string(m.modality))}};
        c["codebook"] = m.codebook ? json(*m.codebook) : json(nullptr);
        cols.push_back(std::move(c));
    }
    doc["columns"] = std::move(cols);
    return doc.dump(2) + "\n";
}

StandardizedTable read_standardized(std::string_view csv, std::string_view sidecar) {
    StandardizedTable t;
    json doc;
    try {
        doc = json::parse(sidecar);
        t.dataset_id = doc.at("dataset_id").get<std::string>();
        for (const auto& c : doc.at("columns")) {
            const auto name = c.at("name").get<std::string>();
            ColumnMeta m;
            m.unit = c.value("unit", "");
            m.modality = modality_from_string(c.at("modality").get<std::string>());
            if (c.contains("codebook") && !c["codebook"].is_null()) m.codebook = c["codebook"].get<std::string>();
            t.columns.push_back(name);
            t.meta[name] = std::move(m);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("standardized sidecar: ") + e.what());
    }

    RawTable raw = parse_raw_table(csv);
    for (const char* fixed : {"record_id", "survey", "lon", "lat"}) {
        if (!raw.column(fixed)) throw Error(ErrorCode::SchemaMismatch, std::string("standardized table lacks '") + fixed + "'");
    }
    const auto id_col = *raw.column("record_id");
    const auto survey_col = *raw.column("survey");
    const auto lon_col = *raw.column("lon");
    const auto lat_col = *raw.column("lat");
    std::vector<std::size_t> idx;
    for (const auto& col : t.columns) {
        auto i = raw.column(col);
        if (!i) throw Error(ErrorCode::SchemaMismatch, "standardized table lacks column '" + col + "'");
        idx.push_back(*i);
    }
    for (const auto& row : raw.rows) {
        StandardizedRecord rec;
        rec.record_id = row[id_col];
        rec.survey = row[survey_col];
        auto lon = text::parse_double(row[lon_col]);
        auto lat = text::parse_double(row[lat_col]);
        if (lon && lat && is_valid(GeoPoint{*lon, *lat})) rec.georef = GeoPoint{*lon, *lat};
        for (std::size_t k = 0; k < t.columns.size(); ++k) {
            const auto& cell = row[idx[k]];
            const auto& m = t.meta[t.columns[k]];
            StdValue v = Missing{};
            if (!cell.empty()) {
                switch (m.modality) {
                case Modality::ScalarNum:
                case Modality::VectorNum: {
                    auto d = text::parse_double(cell);
                    if (!d || !std::isfinite(*d)) {
                        throw Error(ErrorCode::NonNumericCell, "standardized table: non-numeric '" + cell + "'");
                    }
                    v = *d;
                    break;
                }
                case Modality::Categorical: v = Category{cell}; break;
                case Modality::Text:
                case Modality::ImageRef: v = Text{cell}; break;
                }
            }
            rec.values[t.columns[k]] = std::move(v);
        }
        t.records.push_back(std::move(rec));
    }
    return t;
}

std::string_view to_string(IssueAction a) noexcept {
    return a == IssueAction::SetMissing ? "set_missing" : "dropped_georef";
}

std::string write_issue_report(const std::vector<Issue>& issues) {
    std::string out = text::csv_line({"row", "column", "raw", "rule", "action"});
    for (const auto& i : issues) {
        out += text::csv_line({std::to_string(i.row), i.column, i.raw, i.rule, std::string(to_string(i.action))});
    }
    return out;
}

} // namespace soilfuse
