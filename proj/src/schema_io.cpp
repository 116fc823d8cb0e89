#include "soilfuse/schema_io.hpp"

#include "soilfuse/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>

namespace soilfuse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

FeatureDef feature_from_json(const json& j) {
    FeatureDef f;
    f.id = j.at("id").get<std::string>();
    f.name = j.value("name", f.id);
    f.unit = j.value("unit", "");
    f.theme = j.value("theme", "");
    f.modality = modality_from_string(j.at("modality").get<std::string>());
    f.vector_dim = j.value("vector_dim", std::size_t{0});
    if (j.contains("vocabulary")) f.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
    f.annotation = j.value("annotation", "");
    return f;
}

json feature_to_json(const FeatureDef& f) {
    json j{{"id", f.id}, {"name", f.name}, {"unit", f.unit}, {"theme", f.theme},
           {"modality", std::string(to_string(f.modality))}, {"annotation", f.annotation}};
    if (f.modality == Modality::VectorNum) j["vector_dim"] = f.vector_dim;
    if (f.modality == Modality::Categorical) j["vocabulary"] = f.vocabulary;
    return j;
}

InvalidRule rule_from_json(const json& j) {
    InvalidRule r;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "equals_sentinel") r.kind = InvalidRule::Kind::EqualsSentinel;
    else if (kind == "below") r.kind = InvalidRule::Kind::Below;
    else if (kind == "above") r.kind = InvalidRule::Kind::Above;
    else throw Error(ErrorCode::SchemaMismatch, "unknown invalid rule kind '" + kind + "'");
    r.threshold = j.at("value").get<double>();
    return r;
}

json rule_to_json(const InvalidRule& r) {
    static constexpr const char* kNames[] = {"equals_sentinel", "below", "above"};
    return json{{"kind", kNames[static_cast<int>(r.kind)]}, {"value", r.threshold}};
}

} // namespace

FusionSchema parse_schema(std::string_view doc) {
    try {
        const json j = json::parse(doc);
        FusionSchema s;
        s.dataset_id = j.at("dataset_id").get<std::string>();
        s.kind = source_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("resolution_m") && !j["resolution_m"].is_null()) s.resolution_m = j["resolution_m"].get<double>();
        s.long_term_projection = j.value("long_term_projection", false);
        s.source_file = j.value("source_file", s.kind == SourceKind::SampleStructured ? s.dataset_id + ".csv" : "");
        if (j.contains("georef_columns") && !j["georef_columns"].is_null()) {
            const auto& g = j["georef_columns"];
            s.georef_columns = GeorefColumns{g.at("lon").get<std::string>(), g.at("lat").get<std::string>()};
        }
        if (j.contains("record_id_column")) s.record_id_column = j["record_id_column"].get<std::string>();
        s.survey = j.value("survey", "");
        if (j.contains("survey_column")) s.survey_column = j["survey_column"].get<std::string>();
        s.sample_namespace = j.value("sample_namespace", "");
        for (const auto& f : j.value("features", json::array())) s.features.push_back(feature_from_json(f));
        for (const auto& c : j.at("column_maps")) {
            ColumnMap cm;
            if (c.contains("source_columns")) cm.source_columns = c["source_columns"].get<std::vector<std::string>>();
            else cm.source_columns.push_back(c.at("source_column").get<std::string>());
            cm.target_feature_id = c.at("target").get<std::string>();
            cm.scale = c.value("scale", 1.0);
            cm.offset = c.value("offset", 0.0);
            if (c.contains("codebook") && !c["codebook"].is_null()) cm.codebook_ref = c["codebook"].get<std::string>();
            if (c.contains("missing_codes")) cm.missing_codes = c["missing_codes"].get<std::vector<std::string>>();
            for (const auto& r : c.value("invalid_rules", json::array())) cm.invalid_rules.push_back(rule_from_json(r));
            s.column_maps.push_back(std::move(cm));
        }
        check_schema(s);
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("schema document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaMismatch) throw;
        throw Error(ErrorCode::SchemaMismatch, std::string("schema document: ") + e.what());
    }
}

std::string write_schema(const FusionSchema& s) {
    json j{{"dataset_id", s.dataset_id}, {"kind", std::string(to_string(s.kind))}};
    if (s.resolution_m) j["resolution_m"] = *s.resolution_m;
    if (s.long_term_projection) j["long_term_projection"] = true;
    if (!s.source_file.empty()) j["source_file"] = s.source_file;
    if (s.georef_columns) j["georef_columns"] = json{{"lon", s.georef_columns->lon_col}, {"lat", s.georef_columns->lat_col}};
    if (s.record_id_column) j["record_id_column"] = *s.record_id_column;
    if (!s.survey.empty()) j["survey"] = s.survey;
    if (s.survey_column) j["survey_column"] = *s.survey_column;
    if (!s.sample_namespace.empty()) j["sample_namespace"] = s.sample_namespace;
    json feats = json::array();
    for (const auto& f : s.features) feats.push_back(feature_to_json(f));
    j["features"] = std::move(feats);
    json maps = json::array();
    for (const auto& cm : s.column_maps) {
        json c{{"source_columns", cm.source_columns}, {"target", cm.target_feature_id}, {"scale", cm.scale},
               {"offset", cm.offset}};
        if (cm.codebook_ref) c["codebook"] = *cm.codebook_ref;
        if (!cm.missing_codes.empty()) c["missing_codes"] = cm.missing_codes;
        json rules = json::array();
        for (const auto& r : cm.invalid_rules) rules.push_back(rule_to_json(r));
        c["invalid_rules"] = std::move(rules);
        maps.push_back(std::move(c));
    }
    j["column_maps"] = std::move(maps);
    return j.dump(2) + "\n";
}

std::vector<Codebook> parse_codebooks(std::string_view doc) {
    try {
        const json j = json::parse(doc);
        auto one = [](const json& o) {
            Codebook cb;
            cb.id = o.at("id").get<std::string>();
            for (const auto& [code, label] : o.at("mapping").items()) cb.mapping[code] = label.get<std::string>();
            if (o.contains("missing_codes")) {
                for (const auto& m : o["missing_codes"]) cb.missing_codes.insert(m.get<std::string>());
            }
            check_codebook(cb);
            return cb;
        };
        std::vector<Codebook> out;
        if (j.is_array()) {
            for (const auto& o : j) out.push_back(one(o));
        } else {
            out.push_back(one(j));
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("codebook document: ") + e.what());
    }
}

namespace {

std::vector<fs::path> files_with_suffix(const std::string& dir, std::string_view suffix) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::vector<FusionSchema> load_schema_dir(const std::string& dir) {
    std::vector<FusionSchema> out;
    for (const auto& p : files_with_suffix(dir, ".schema.json")) out.push_back(parse_schema(text::read_file(p.string())));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].dataset_id == out[i - 1].dataset_id) {
            throw Error(ErrorCode::SchemaMismatch, "two schemas for dataset '" + out[i].dataset_id + "'");
        }
    }
    return out;
}

std::map<std::string, Codebook> load_codebook_dir(const std::string& dir) {
    std::map<std::string, Codebook> out;
    for (const auto& p : files_with_suffix(dir, ".codebook.json")) {
        for (auto& cb : parse_codebooks(text::read_file(p.string()))) {
            const auto id = cb.id;
            if (!out.emplace(id, std::move(cb)).second) throw Error(ErrorCode::SchemaMismatch, "duplicate codebook '" + id + "'");
        }
    }
    return out;
}

} // namespace soilfuse
