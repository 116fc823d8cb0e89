#include "soilfuse/dataset.hpp"

#include "soilfuse/standardize.hpp"
#include "soilfuse/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

namespace soilfuse {

using nlohmann::json;
namespace fs = std::filesystem;

AvailabilityStats compute_availability(const FusedTable& table, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::InvalidValue, "histogram needs at least one bin");
    AvailabilityStats stats;
    const auto n = table.samples().size();

    std::map<std::string, std::size_t> observed;
    std::map<std::string, std::map<std::string, std::size_t>> observed_by_survey; // survey -> feature -> count
    std::map<std::string, std::size_t> survey_size;
    for (const auto& s : table.samples()) {
        ++survey_size[s.source_survey];
        auto& by_feature = observed_by_survey[s.source_survey];
        for (const auto& [fid, cell] : s.cells) {
            ++observed[fid];
            ++by_feature[fid];
        }
    }

    for (const auto& f : table.features()) {
        auto it = observed.find(f.id);
        const double count = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        stats.per_feature[f.id] = n == 0 ? 0.0 : count / static_cast<double>(n);
    }

    for (const auto& [survey, size] : survey_size) {
        std::map<std::string, std::pair<double, std::size_t>> theme_acc;
        const auto& by_feature = observed_by_survey[survey];
        for (const auto& f : table.features()) {
            auto it = by_feature.find(f.id);
            const double count = it == by_feature.end() ? 0.0 : static_cast<double>(it->second);
            auto& acc = theme_acc[f.theme];
            acc.first += count / static_cast<double>(size);
            ++acc.second;
        }
        for (const auto& [theme, acc] : theme_acc) {
            stats.matrix[{theme, survey}] = acc.first / static_cast<double>(acc.second);
        }
    }

    stats.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) stats.bin_edges[i] = static_cast<double>(i) / static_cast<double>(bins);
    stats.histogram.assign(bins, 0);
    for (const auto& [fid, frac] : stats.per_feature) {
        auto b = static_cast<std::size_t>(std::floor(frac * static_cast<double>(bins)));
        ++stats.histogram[std::min(b, bins - 1)];
    }
    return stats;
}

std::optional<AlignmentSummary> summarize_alignment(const FusedTable& table, std::string_view feature_id) {
    if (!table.find_feature(feature_id)) {
        throw Error(ErrorCode::UnknownFeature, "unknown feature '" + std::string(feature_id) + "'");
    }
    AlignmentSummary s;
    double sum = 0.0;
    for (const auto& sample : table.samples()) {
        const Cell* c = sample.find(feature_id);
        if (!c) continue;
        const double d = c->provenance.alignment_distance_m;
        if (s.count == 0) {
            s.min = s.max = d;
        } else {
            s.min = std::min(s.min, d);
            s.max = std::max(s.max, d);
        }
        sum += d;
        ++s.count;
    }
    if (s.count == 0) return std::nullopt;
    s.mean = sum / static_cast<double>(s.count);
    return s;
}

namespace {

json feature_json(const FeatureDef& f, const std::map<std::string, std::string>& owners) {
    json j{{"id", f.id}, {"name", f.name}, {"unit", f.unit}, {"theme", f.theme},
           {"modality", std::string(to_string(f.modality))}, {"annotation", f.annotation}};
    if (f.modality == Modality::VectorNum) j["vector_dim"] = f.vector_dim;
    if (f.modality == Modality::Categorical) j["vocabulary"] = f.vocabulary;
    if (auto it = owners.find(f.id); it != owners.end()) j["owner"] = it->second;
    return j;
}

json value_json(const CellValue& v) {
    struct V {
        json operator()(const Missing&) const { return nullptr; }
        json operator()(double d) const { return d; }
        json operator()(const std::vector<double>& d) const { return d; }
        json operator()(const Category& c) const { return c.label; }
        json operator()(const Text& t) const { return t.text; }
        json operator()(const ImageRef& r) const { return r.path; }
    };
    return std::visit(V{}, v);
}

CellValue value_from_json(const FeatureDef& def, const json& j) {
    switch (def.modality) {
    case Modality::ScalarNum: return j.get<double>();
    case Modality::VectorNum: return j.get<std::vector<double>>();
    case Modality::Categorical: return Category{j.get<std::string>()};
    case Modality::Text: return Text{j.get<std::string>()};
    case Modality::ImageRef: return ImageRef{j.get<std::string>()};
    }
    return Missing{};
}

} // namespace

std::string export_dictionary(const FusedTable& table, const DictionaryOptions& options,
                              std::vector<std::string>* warnings) {
    json doc;
    doc["format"] = "soilfuse-dictionary";
    doc["version"] = 1;
    json features = json::array();
    for (const auto& f : table.features()) features.push_back(feature_json(f, table.feature_owners()));
    doc["features"] = std::move(features);

    json samples = json::object();
    for (const auto& s : table.samples()) {
        json entry;
        entry["survey"] = s.source_survey;
        entry["location"] = json{{"lon", s.location.lon}, {"lat", s.location.lat}};
        json cells = json::object();
        for (const auto& [fid, cell] : s.cells) {
            const FeatureDef* def = table.find_feature(fid);
            if (options.asset_root && std::holds_alternative<ImageRef>(cell.value)) {
                const auto& path = std::get<ImageRef>(cell.value).path;
                const fs::path full = fs::path(*options.asset_root) / path;
                if (!fs::exists(full) && warnings) {
                    warnings->push_back("sample '" + s.sample_id + "', feature '" + fid + "': asset '" + path +
                                        "' is not readable");
                }
            }
            cells[fid] = json{{"value", value_json(cell.value)},
                              {"unit", def->unit},
                              {"source_dataset_id", cell.provenance.source_dataset_id},
                              {"source_kind", std::string(to_string(cell.provenance.source_kind))},
                              {"alignment_distance_m", cell.provenance.alignment_distance_m}};
        }
        entry["features"] = std::move(cells);
        samples[s.sample_id] = std::move(entry);
    }
    doc["samples"] = std::move(samples);
    return doc.dump(2) + "\n";
}

FusedTable import_dictionary(std::string_view text_doc) {
    try {
        const json doc = json::parse(text_doc);
        std::vector<FeatureDef> features;
        std::map<std::string, std::string> owners;
        for (const auto& f : doc.at("features")) {
            FeatureDef def;
            def.id = f.at("id").get<std::string>();
            def.name = f.value("name", def.id);
            def.unit = f.value("unit", "");
            def.theme = f.value("theme", "");
            def.modality = modality_from_string(f.at("modality").get<std::string>());
            def.vector_dim = f.value("vector_dim", std::size_t{0});
            if (f.contains("vocabulary")) def.vocabulary = f["vocabulary"].get<std::vector<std::string>>();
            def.annotation = f.value("annotation", "");
            if (f.contains("owner")) owners[def.id] = f["owner"].get<std::string>();
            features.push_back(std::move(def));
        }
        std::map<std::string, const FeatureDef*> by_id;
        for (const auto& f : features) by_id[f.id] = &f;

        std::vector<Sample> samples;
        for (const auto& [sid, entry] : doc.at("samples").items()) {
            Sample s;
            s.sample_id = sid;
            s.source_survey = entry.at("survey").get<std::string>();
            s.location = GeoPoint{entry.at("location").at("lon").get<double>(), entry.at("location").at("lat").get<double>()};
            for (const auto& [fid, cell] : entry.at("features").items()) {
                auto it = by_id.find(fid);
                if (it == by_id.end()) throw Error(ErrorCode::UnknownFeature, "dictionary: unknown feature '" + fid + "'");
                Cell c;
                c.value = value_from_json(*it->second, cell.at("value"));
                c.provenance.source_dataset_id = cell.at("source_dataset_id").get<std::string>();
                c.provenance.source_kind = source_kind_from_string(cell.at("source_kind").get<std::string>());
                c.provenance.alignment_distance_m = cell.at("alignment_distance_m").get<double>();
                s.cells.emplace(fid, std::move(c));
            }
            samples.push_back(std::move(s));
        }
        return FusedTable(std::move(features), std::move(samples), std::move(owners));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("dictionary document: ") + e.what());
    }
}

FlatExport export_flat_table(const FusedTable& table) {
    std::vector<std::string> header{"sample_id", "survey", "lon", "lat"};
    json columns = json::array();
    for (const auto& f : table.features()) {
        std::set<std::string> sources;
        for (const auto& s : table.samples())
            if (const Cell* c = s.find(f.id)) sources.insert(c->provenance.source_dataset_id);
        json alignment = nullptr;
        if (auto a = summarize_alignment(table, f.id)) {
            alignment = json{{"count", a->count}, {"min", a->min}, {"mean", a->mean}, {"max", a->max}};
        }
        const std::size_t dims = f.modality == Modality::VectorNum ? f.vector_dim : 1;
        for (std::size_t k = 0; k < dims; ++k) {
            const std::string name = f.modality == Modality::VectorNum ? f.id + "_" + std::to_string(k + 1) : f.id;
            header.push_back(name);
            json col{{"column", name},
                     {"feature_id", f.id},
                     {"unit", f.unit},
                     {"theme", f.theme},
                     {"modality", std::string(to_string(f.modality))},
                     {"sources", std::vector<std::string>(sources.begin(), sources.end())},
                     {"alignment_m", alignment}};
            col["dim"] = f.modality == Modality::VectorNum ? json(k + 1) : json(nullptr);
            columns.push_back(std::move(col));
        }
    }

    FlatExport out;
    out.csv = text::csv_line(header);
    for (const auto& s : table.samples()) {
        std::vector<std::string> row{s.sample_id, s.source_survey, text::format_double(s.location.lon),
                                     text::format_double(s.location.lat)};
        for (const auto& f : table.features()) {
            const Cell* c = s.find(f.id);
            if (f.modality == Modality::VectorNum) {
                for (std::size_t k = 0; k < f.vector_dim; ++k) {
                    row.push_back(c ? text::format_double(std::get<std::vector<double>>(c->value)[k]) : "");
                }
                continue;
            }
            if (!c) {
                row.emplace_back();
                continue;
            }
            switch (f.modality) {
            case Modality::ScalarNum: row.push_back(text::format_double(std::get<double>(c->value))); break;
            case Modality::Categorical: row.push_back(std::get<Category>(c->value).label); break;
            case Modality::Text: row.push_back(std::get<Text>(c->value).text); break;
            case Modality::ImageRef: row.push_back(std::get<ImageRef>(c->value).path); break;
            case Modality::VectorNum: break;
            }
        }
        out.csv += text::csv_line(row);
    }
    out.columns_json = json{{"columns", std::move(columns)}}.dump(2) + "\n";
    return out;
}

namespace {

bool has_constant_dimension(const FusedTable& table, const FeatureDef& f) {
    const std::size_t dims = f.numeric_dims();
    for (std::size_t k = 0; k < dims; ++k) {
        std::optional<double> first;
        bool varies = false;
        for (const auto& s : table.samples()) {
            const Cell* c = s.find(f.id);
            if (!c) continue;
            const double v = f.modality == Modality::ScalarNum ? std::get<double>(c->value)
                                                               : std::get<std::vector<double>>(c->value)[k];
            if (!first) first = v;
            else if (v != *first) {
                varies = true;
                break;
            }
        }
        if (!varies) return true;
    }
    return false;
}

} // namespace

FilterResult filter_training_view(const FusedTable& table, const FilterOptions& options) {
    if (!(options.min_avail > 0.0) || !(options.max_align_m > 0.0)) {
        throw Error(ErrorCode::InvalidValue, "filter thresholds must be positive");
    }
    const auto avail = compute_availability(table);
    FilterResult out;
    for (const auto& f : table.features()) {
        if (options.drop_modalities.count(f.modality)) {
            out.excluded.push_back({f.id, "modality", std::string(to_string(f.modality)) + " modality is dropped"});
            continue;
        }
        const double a = avail.per_feature.at(f.id);
        if (a < options.min_avail) {
            out.excluded.push_back({f.id, "availability", "availability " + text::format_double(a) + " < " +
                                                              text::format_double(options.min_avail)});
            continue;
        }
        if (auto summary = summarize_alignment(table, f.id); summary && summary->max > options.max_align_m) {
            out.excluded.push_back({f.id, "alignment", "max alignment " + text::format_double(summary->max) +
                                                           " m > " + text::format_double(options.max_align_m) + " m"});
            continue;
        }
        if (options.drop_constant && f.is_numeric() && has_constant_dimension(table, f)) {
            out.excluded.push_back({f.id, "constant", "a numeric dimension has fewer than 2 distinct values"});
            continue;
        }
        out.kept.push_back(f);
    }
    return out;
}

std::string write_exclusion_report(const std::vector<Exclusion>& excluded) {
    std::string out = text::csv_line({"feature_id", "rule", "detail"});
    for (const auto& e : excluded) out += text::csv_line({e.feature_id, e.rule, e.detail});
    return out;
}

std::string_view to_string(SplitTag t) noexcept { return t == SplitTag::Train ? "train" : "eval"; }

namespace {

// Uniform integer in [0, bound] from a 64-bit engine, by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == std::numeric_limits<std::uint64_t>::max()) return rng();
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    while (true) {
        const std::uint64_t x = rng();
        if (x < limit) return x % range;
    }
}

} // namespace

std::vector<SplitTag> split_by_location(const FusedTable& table, double eval_fraction, std::uint64_t seed) {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidValue, "eval_fraction must lie in (0, 1)");
    }
    std::vector<std::string> keys;
    for (const auto& [key, ids] : table.location_index()) keys.push_back(key);
    std::mt19937_64 rng(seed);
    for (std::size_t i = keys.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded(rng, i - 1));
        std::swap(keys[i - 1], keys[j]);
    }
    const auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(keys.size())));
    std::set<std::string> eval_keys(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_eval));

    std::vector<SplitTag> tags;
    tags.reserve(table.samples().size());
    for (const auto& s : table.samples()) {
        tags.push_back(eval_keys.count(location_key(s.location)) ? SplitTag::Eval : SplitTag::Train);
    }
    return tags;
}

TrainingView build_training_view(const FusedTable& table, const std::vector<FeatureDef>& kept,
                                 std::vector<SplitTag> split) {
    const auto n = table.samples().size();
    if (split.size() != n) throw Error(ErrorCode::ShapeMismatch, "split tags do not match sample count");
    TrainingView v;
    v.kept_features = kept;
    v.split = std::move(split);
    for (const auto& s : table.samples()) v.sample_ids.push_back(s.sample_id);

    for (const auto& f : kept) {
        if (!table.find_feature(f.id)) throw Error(ErrorCode::UnknownFeature, "unknown feature '" + f.id + "'");
        switch (f.modality) {
        case Modality::ScalarNum:
            v.numeric_columns.push_back(f.id);
            v.numeric_feature.push_back(f.id);
            break;
        case Modality::VectorNum:
            for (std::size_t k = 0; k < f.vector_dim; ++k) {
                v.numeric_columns.push_back(f.id + "_" + std::to_string(k + 1));
                v.numeric_feature.push_back(f.id);
            }
            break;
        case Modality::Categorical: v.categorical_features.push_back(f.id); break;
        case Modality::ImageRef: v.visual_features.push_back(f.id); break;
        case Modality::Text:
            throw Error(ErrorCode::InvalidValue, "text feature '" + f.id + "' cannot enter a training view");
        }
    }

    v.numeric = Matrix<double>(n, v.numeric_columns.size(), 0.0);
    v.numeric_mask = Matrix<std::uint8_t>(n, v.numeric_columns.size(), 0);
    v.categorical = Matrix<std::int32_t>(n, v.categorical_features.size(), -1);
    v.categorical_mask = Matrix<std::uint8_t>(n, v.categorical_features.size(), 0);
    v.visual_refs.assign(v.visual_features.size(), std::vector<std::optional<std::string>>(n));

    for (std::size_t r = 0; r < n; ++r) {
        const Sample& s = table.samples()[r];
        std::size_t col = 0;
        std::size_t cat = 0;
        std::size_t vis = 0;
        for (const auto& f : kept) {
            const Cell* c = s.find(f.id);
            switch (f.modality) {
            case Modality::ScalarNum:
                if (c) {
                    v.numeric(r, col) = std::get<double>(c->value);
                    v.numeric_mask(r, col) = 1;
                }
                ++col;
                break;
            case Modality::VectorNum:
                for (std::size_t k = 0; k < f.vector_dim; ++k, ++col) {
                    if (!c) continue;
                    v.numeric(r, col) = std::get<std::vector<double>>(c->value)[k];
                    v.numeric_mask(r, col) = 1;
                }
                break;
            case Modality::Categorical:
                if (c) {
                    v.categorical(r, cat) = static_cast<std::int32_t>(*f.vocabulary_index(std::get<Category>(c->value).label));
                    v.categorical_mask(r, cat) = 1;
                }
                ++cat;
                break;
            case Modality::ImageRef:
                if (c) v.visual_refs[vis][r] = std::get<ImageRef>(c->value).path;
                ++vis;
                break;
            case Modality::Text: break;
            }
        }
    }
    return v;
}

ZScoreResult fit_apply_zscore(const TrainingView& view) {
    ZScoreResult out{{}, view};
    auto& m = out.view.numeric;
    const auto& mask = view.numeric_mask;
    out.stats.columns = view.numeric_columns;
    for (std::size_t c = 0; c < m.cols; ++c) {
        double sum = 0.0;
        std::size_t count = 0;
        std::optional<double> first;
        bool varies = false;
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (!mask(r, c) || view.split[r] != SplitTag::Train) continue;
            const double x = m(r, c);
            sum += x;
            ++count;
            if (!first) first = x;
            else if (x != *first) varies = true;
        }
        if (!varies) {
            throw Error(ErrorCode::ConstantColumn,
                        "column '" + view.numeric_columns[c] + "' has fewer than 2 distinct train values");
        }
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (!mask(r, c) || view.split[r] != SplitTag::Train) continue;
            const double d = m(r, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        out.stats.mean.push_back(mean);
        out.stats.std.push_back(sd);
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (mask(r, c)) m(r, c) = (m(r, c) - mean) / sd;
        }
    }
    return out;
}

namespace {

template <typename T>
std::string matrix_csv(const std::vector<std::string>& header, const Matrix<T>& m) {
    std::string out = text::csv_line(header);
    for (std::size_t r = 0; r < m.rows; ++r) {
        std::vector<std::string> row;
        row.reserve(m.cols);
        for (std::size_t c = 0; c < m.cols; ++c) {
            if constexpr (std::is_floating_point_v<T>) row.push_back(text::format_double(m(r, c)));
            else row.push_back(std::to_string(static_cast<long long>(m(r, c))));
        }
        out += text::csv_line(row);
    }
    return out;
}

template <typename T>
Matrix<T> read_matrix(const std::string& path, const std::vector<std::string>& expected_header, std::size_t rows) {
    auto records = text::parse_csv(text::read_file(path));
    const std::size_t cols = expected_header.size();
    // A header with no columns serializes as an empty line, which the CSV reader drops.
    const std::size_t offset = cols == 0 ? 0 : 1;
    if (cols > 0 && (records.empty() || records.front() != expected_header)) {
        throw Error(ErrorCode::ShapeMismatch, path + ": header does not match manifest");
    }
    Matrix<T> m(rows, cols);
    if (cols == 0) return m;
    if (records.size() != rows + offset) throw Error(ErrorCode::ShapeMismatch, path + ": row count mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& rec = records[r + offset];
        if (rec.size() != cols) throw Error(ErrorCode::ShapeMismatch, path + ": column count mismatch");
        for (std::size_t c = 0; c < cols; ++c) {
            if constexpr (std::is_floating_point_v<T>) {
                auto v = text::parse_double(rec[c]);
                if (!v) throw Error(ErrorCode::NonNumericCell, path + ": non-numeric cell");
                m(r, c) = *v;
            } else {
                auto v = text::parse_int(rec[c]);
                if (!v) throw Error(ErrorCode::NonNumericCell, path + ": non-integer cell");
                m(r, c) = static_cast<T>(*v);
            }
        }
    }
    return m;
}

json feature_manifest(const FeatureDef& f) {
    json j{{"id", f.id}, {"name", f.name}, {"unit", f.unit}, {"theme", f.theme},
           {"modality", std::string(to_string(f.modality))}, {"annotation", f.annotation}};
    if (f.modality == Modality::VectorNum) j["vector_dim"] = f.vector_dim;
    if (f.modality == Modality::Categorical) j["vocabulary"] = f.vocabulary;
    return j;
}

} // namespace

void write_training_view(const TrainingView& view, const NormalizationStats& stats, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path d(dir);
    json manifest;
    manifest["format"] = "soilfuse-training-view";
    manifest["version"] = 1;
    json feats = json::array();
    for (const auto& f : view.kept_features) feats.push_back(feature_manifest(f));
    manifest["features"] = std::move(feats);
    manifest["numeric_columns"] = view.numeric_columns;
    manifest["numeric_feature"] = view.numeric_feature;
    manifest["categorical_features"] = view.categorical_features;
    manifest["visual_features"] = view.visual_features;
    manifest["sample_count"] = view.sample_ids.size();
    text::write_file((d / "manifest.json").string(), manifest.dump(2) + "\n");

    std::string samples = text::csv_line({"sample_id", "split"});
    for (std::size_t r = 0; r < view.sample_ids.size(); ++r) {
        samples += text::csv_line({view.sample_ids[r], std::string(to_string(view.split[r]))});
    }
    text::write_file((d / "samples.csv").string(), samples);
    text::write_file((d / "numeric.csv").string(), matrix_csv(view.numeric_columns, view.numeric));
    text::write_file((d / "numeric_mask.csv").string(), matrix_csv(view.numeric_columns, view.numeric_mask));
    text::write_file((d / "categorical.csv").string(), matrix_csv(view.categorical_features, view.categorical));
    text::write_file((d / "categorical_mask.csv").string(),
                     matrix_csv(view.categorical_features, view.categorical_mask));

    std::string norm = text::csv_line({"column", "mean", "std"});
    for (std::size_t c = 0; c < stats.columns.size(); ++c) {
        norm += text::csv_line({stats.columns[c], text::format_double(stats.mean[c]), text::format_double(stats.std[c])});
    }
    text::write_file((d / "normalization.csv").string(), norm);

    std::vector<std::string> vheader{"sample_id"};
    vheader.insert(vheader.end(), view.visual_features.begin(), view.visual_features.end());
    std::string visual = text::csv_line(vheader);
    for (std::size_t r = 0; r < view.sample_ids.size(); ++r) {
        std::vector<std::string> row{view.sample_ids[r]};
        for (const auto& refs : view.visual_refs) row.push_back(refs[r].value_or(""));
        visual += text::csv_line(row);
    }
    text::write_file((d / "visual.csv").string(), visual);
}

LoadedTrainingView read_training_view(const std::string& dir) {
    const fs::path d(dir);
    LoadedTrainingView out;
    auto& v = out.view;
    try {
        const json manifest = json::parse(text::read_file((d / "manifest.json").string()));
        if (manifest.value("format", "") != "soilfuse-training-view" || manifest.value("version", 0) != 1) {
            throw Error(ErrorCode::SchemaMismatch, "unsupported training view manifest");
        }
        for (const auto& f : manifest.at("features")) {
            FeatureDef def;
            def.id = f.at("id").get<std::string>();
            def.name = f.value("name", def.id);
            def.unit = f.value("unit", "");
            def.theme = f.value("theme", "");
            def.modality = modality_from_string(f.at("modality").get<std::string>());
            def.vector_dim = f.value("vector_dim", std::size_t{0});
            if (f.contains("vocabulary")) def.vocabulary = f["vocabulary"].get<std::vector<std::string>>();
            def.annotation = f.value("annotation", "");
            v.kept_features.push_back(std::move(def));
        }
        v.numeric_columns = manifest.at("numeric_columns").get<std::vector<std::string>>();
        v.numeric_feature = manifest.at("numeric_feature").get<std::vector<std::string>>();
        v.categorical_features = manifest.at("categorical_features").get<std::vector<std::string>>();
        v.visual_features = manifest.at("visual_features").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("training view manifest: ") + e.what());
    }

    auto samples = parse_raw_table(text::read_file((d / "samples.csv").string()));
    for (const auto& row : samples.rows) {
        v.sample_ids.push_back(row.at(0));
        v.split.push_back(row.at(1) == "eval" ? SplitTag::Eval : SplitTag::Train);
    }
    const auto n = v.sample_ids.size();
    v.numeric = read_matrix<double>((d / "numeric.csv").string(), v.numeric_columns, n);
    v.numeric_mask = read_matrix<std::uint8_t>((d / "numeric_mask.csv").string(), v.numeric_columns, n);
    v.categorical = read_matrix<std::int32_t>((d / "categorical.csv").string(), v.categorical_features, n);
    v.categorical_mask = read_matrix<std::uint8_t>((d / "categorical_mask.csv").string(), v.categorical_features, n);

    auto norm = parse_raw_table(text::read_file((d / "normalization.csv").string()));
    for (const auto& row : norm.rows) {
        out.stats.columns.push_back(row.at(0));
        out.stats.mean.push_back(text::parse_double(row.at(1)).value_or(0.0));
        out.stats.std.push_back(text::parse_double(row.at(2)).value_or(0.0));
    }

    auto visual = parse_raw_table(text::read_file((d / "visual.csv").string()));
    v.visual_refs.assign(v.visual_features.size(), std::vector<std::optional<std::string>>(n));
    if (visual.rows.size() != n) throw Error(ErrorCode::ShapeMismatch, "visual.csv: row count mismatch");
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < v.visual_features.size(); ++k) {
            const auto& cell = visual.rows[r].at(k + 1);
            if (!cell.empty()) v.visual_refs[k][r] = cell;
        }
    }
    return out;
}

} // namespace soilfuse
