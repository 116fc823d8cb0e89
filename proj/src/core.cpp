#include "soilfuse/core.hpp"

#include "soilfuse/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unordered_set>

namespace soilfuse {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidValue: return "invalid-value";
    case ErrorCode::UnknownCode: return "unknown-code";
    case ErrorCode::MalformedHeader: return "malformed-header";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::NonNumericCell: return "non-numeric-cell";
    case ErrorCode::SchemaMismatch: return "schema-mismatch";
    case ErrorCode::FeatureCollision: return "feature-collision";
    case ErrorCode::UnknownSample: return "unknown-sample";
    case ErrorCode::UnknownFeature: return "unknown-feature";
    case ErrorCode::ConstantColumn: return "constant-column";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::ExternalUnavailable: return "external-unavailable";
    case ErrorCode::TooManyFeatures: return "too-many-features";
    case ErrorCode::UnknownRegion: return "unknown-region";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

bool is_valid(const GeoPoint& p) noexcept {
    return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
           p.lat >= -90.0 && p.lat <= 90.0;
}

GeoPoint make_point(double lon, double lat) {
    GeoPoint p{lon, lat};
    if (!is_valid(p)) {
        throw Error(ErrorCode::InvalidValue, "coordinate out of range: (" + text::format_double(lon) +
                                                 ", " + text::format_double(lat) + ")");
    }
    return p;
}

std::string_view to_string(Modality m) noexcept {
    switch (m) {
    case Modality::ScalarNum: return "scalar";
    case Modality::VectorNum: return "vector";
    case Modality::Categorical: return "categorical";
    case Modality::Text: return "text";
    case Modality::ImageRef: return "image";
    }
    return "scalar";
}

Modality modality_from_string(std::string_view s) {
    if (s == "scalar") return Modality::ScalarNum;
    if (s == "vector") return Modality::VectorNum;
    if (s == "categorical") return Modality::Categorical;
    if (s == "text") return Modality::Text;
    if (s == "image") return Modality::ImageRef;
    throw Error(ErrorCode::InvalidValue, "unknown modality '" + std::string(s) + "'");
}

std::string_view to_string(SourceKind k) noexcept {
    return k == SourceKind::SampleStructured ? "sample_structured" : "map_structured";
}

SourceKind source_kind_from_string(std::string_view s) {
    if (s == "sample_structured") return SourceKind::SampleStructured;
    if (s == "map_structured") return SourceKind::MapStructured;
    throw Error(ErrorCode::InvalidValue, "unknown source kind '" + std::string(s) + "'");
}

std::optional<std::size_t> FeatureDef::vocabulary_index(std::string_view label) const {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), label);
    if (it == vocabulary.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vocabulary.begin());
}

void check_feature_def(const FeatureDef& def) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::InvalidValue, "feature '" + def.id + "': " + why);
    };
    if (def.id.empty()) fail("empty id");
    if (def.modality == Modality::VectorNum) {
        if (def.vector_dim < 2) fail("vector_dim must be >= 2");
    } else if (def.vector_dim != 0) {
        fail("vector_dim present on non-vector feature");
    }
    if (def.modality == Modality::Categorical) {
        if (def.vocabulary.empty()) fail("empty vocabulary");
        std::unordered_set<std::string> seen;
        for (const auto& label : def.vocabulary) {
            if (label.empty()) fail("empty vocabulary label");
            if (!seen.insert(label).second) fail("duplicate vocabulary label '" + label + "'");
        }
    } else if (!def.vocabulary.empty()) {
        fail("vocabulary present on non-categorical feature");
    }
}

Verdict validate_cell(const FeatureDef& def, const CellValue& value) {
    struct Visitor {
        const FeatureDef& def;
        Verdict operator()(const Missing&) const { return {}; }
        Verdict operator()(double v) const {
            if (def.modality != Modality::ScalarNum) return {"modality mismatch"};
            if (!std::isfinite(v)) return {"non-finite number"};
            return {};
        }
        Verdict operator()(const std::vector<double>& v) const {
            if (def.modality != Modality::VectorNum) return {"modality mismatch"};
            if (v.size() != def.vector_dim) return {"length mismatch"};
            for (double x : v)
                if (!std::isfinite(x)) return {"non-finite number"};
            return {};
        }
        Verdict operator()(const Category& c) const {
            if (def.modality != Modality::Categorical) return {"modality mismatch"};
            if (!def.vocabulary_index(c.label)) return {"label not in vocabulary"};
            return {};
        }
        Verdict operator()(const Text&) const {
            if (def.modality != Modality::Text) return {"modality mismatch"};
            return {};
        }
        Verdict operator()(const ImageRef& r) const {
            if (def.modality != Modality::ImageRef) return {"modality mismatch"};
            if (r.path.empty()) return {"empty image reference"};
            return {};
        }
    };
    return std::visit(Visitor{def}, value);
}

const Cell* Sample::find(std::string_view feature_id) const {
    auto it = cells.find(std::string(feature_id));
    return it == cells.end() ? nullptr : &it->second;
}

namespace {

std::string fixed5(double v) {
    long long q = std::llround(v * 1e5);
    const bool neg = q < 0;
    const long long a = neg ? -q : q;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%05lld", neg ? "-" : "", a / 100000, a % 100000);
    return buf;
}

} // namespace

std::string location_key(const GeoPoint& p) {
    return fixed5(p.lon) + "," + fixed5(p.lat);
}

LocationIndex index_locations(const std::vector<Sample>& samples) {
    LocationIndex index;
    for (const auto& s : samples) index[location_key(s.location)].push_back(s.sample_id);
    for (auto& [key, ids] : index) std::sort(ids.begin(), ids.end());
    return index;
}

FusedTable::FusedTable(std::vector<FeatureDef> features, std::vector<Sample> samples,
                       std::map<std::string, std::string> feature_owners)
    : features_(std::move(features)), samples_(std::move(samples)), owners_(std::move(feature_owners)) {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        check_feature_def(features_[i]);
        if (!feature_pos_.emplace(features_[i].id, i).second) {
            throw Error(ErrorCode::InvalidValue, "duplicate feature id '" + features_[i].id + "'");
        }
    }
    for (const auto& [fid, owner] : owners_) {
        if (!feature_pos_.count(fid)) {
            throw Error(ErrorCode::UnknownFeature, "owner recorded for unknown feature '" + fid + "'");
        }
    }
    std::sort(samples_.begin(), samples_.end(),
              [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        auto& s = samples_[i];
        if (s.sample_id.empty()) throw Error(ErrorCode::InvalidValue, "empty sample id");
        if (i > 0 && samples_[i - 1].sample_id == s.sample_id) {
            throw Error(ErrorCode::InvalidValue, "duplicate sample id '" + s.sample_id + "'");
        }
        if (!is_valid(s.location)) {
            throw Error(ErrorCode::InvalidValue, "sample '" + s.sample_id + "' has invalid location");
        }
        for (auto it = s.cells.begin(); it != s.cells.end();) {
            const FeatureDef* def = find_feature(it->first);
            if (!def) {
                throw Error(ErrorCode::UnknownFeature,
                            "sample '" + s.sample_id + "' references unknown feature '" + it->first + "'");
            }
            if (is_missing(it->second.value)) {
                it = s.cells.erase(it);
                continue;
            }
            if (auto v = validate_cell(*def, it->second.value); !v) {
                throw Error(ErrorCode::InvalidValue,
                            "sample '" + s.sample_id + "', feature '" + it->first + "': " + v.violation);
            }
            const auto& prov = it->second.provenance;
            const double d = prov.alignment_distance_m;
            if (!std::isfinite(d) || d < 0.0 ||
                (prov.source_kind == SourceKind::SampleStructured && d != 0.0)) {
                throw Error(ErrorCode::InvalidValue,
                            "sample '" + s.sample_id + "', feature '" + it->first + "': bad alignment distance");
            }
            ++it;
        }
    }
    location_index_ = index_locations(samples_);
}

const FeatureDef* FusedTable::find_feature(std::string_view id) const {
    auto it = feature_pos_.find(id);
    return it == feature_pos_.end() ? nullptr : &features_[it->second];
}

std::optional<std::size_t> FusedTable::sample_position(std::string_view id) const {
    auto it = std::lower_bound(samples_.begin(), samples_.end(), id,
                               [](const Sample& s, std::string_view key) { return s.sample_id < key; });
    if (it == samples_.end() || it->sample_id != id) return std::nullopt;
    return static_cast<std::size_t>(it - samples_.begin());
}

const Sample* FusedTable::find_sample(std::string_view id) const {
    auto pos = sample_position(id);
    return pos ? &samples_[*pos] : nullptr;
}

void check_codebook(const Codebook& cb) {
    for (const auto& [code, label] : cb.mapping) {
        if (label.empty()) throw Error(ErrorCode::InvalidValue, "codebook '" + cb.id + "': empty label for " + code);
        if (cb.missing_codes.count(code)) {
            throw Error(ErrorCode::InvalidValue,
                        "codebook '" + cb.id + "': code '" + code + "' is both mapped and missing");
        }
    }
}

RasterGrid::RasterGrid(std::size_t ncols, std::size_t nrows, double xllcorner, double yllcorner,
                       double cellsize, double nodata_value, std::vector<double> values)
    : ncols_(ncols), nrows_(nrows), xll_(xllcorner), yll_(yllcorner), cellsize_(cellsize),
      nodata_(nodata_value), values_(std::move(values)) {
    if (ncols_ == 0 || nrows_ == 0) throw Error(ErrorCode::MalformedHeader, "raster dimensions must be positive");
    if (!(cellsize_ > 0.0) || !std::isfinite(cellsize_)) {
        throw Error(ErrorCode::MalformedHeader, "raster cellsize must be positive");
    }
    if (!std::isfinite(xll_) || !std::isfinite(yll_)) throw Error(ErrorCode::MalformedHeader, "raster origin not finite");
    if (values_.size() != ncols_ * nrows_) throw Error(ErrorCode::ShapeMismatch, "raster value count mismatch");
    for (double v : values_) {
        if (!std::isfinite(v) && v != nodata_) throw Error(ErrorCode::NonNumericCell, "non-finite raster value");
    }
}

GeoPoint RasterGrid::cell_center(std::size_t row, std::size_t col) const {
    return GeoPoint{xll_ + (static_cast<double>(col) + 0.5) * cellsize_,
                    yll_ + (static_cast<double>(nrows_ - row) - 0.5) * cellsize_};
}

std::size_t RasterGrid::data_cell_count() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [this](double v) { return v != nodata_; }));
}

std::string describe(const InvalidRule& rule) {
    switch (rule.kind) {
    case InvalidRule::Kind::EqualsSentinel: return "equals_sentinel(" + text::format_double(rule.threshold) + ")";
    case InvalidRule::Kind::Below: return "below(" + text::format_double(rule.threshold) + ")";
    case InvalidRule::Kind::Above: return "above(" + text::format_double(rule.threshold) + ")";
    }
    return "rule";
}

const FeatureDef* FusionSchema::find_feature(std::string_view id) const {
    for (const auto& f : features)
        if (f.id == id) return &f;
    return nullptr;
}

void check_schema(const FusionSchema& schema) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::SchemaMismatch, "schema '" + schema.dataset_id + "': " + why);
    };
    if (schema.dataset_id.empty()) fail("empty dataset_id");
    std::set<std::string> feature_ids;
    for (const auto& f : schema.features) {
        check_feature_def(f);
        if (!feature_ids.insert(f.id).second) fail("duplicate feature definition '" + f.id + "'");
    }
    std::set<std::string> targets;
    for (const auto& cm : schema.column_maps) {
        if (!targets.insert(cm.target_feature_id).second) fail("target '" + cm.target_feature_id + "' mapped twice");
        const FeatureDef* def = schema.find_feature(cm.target_feature_id);
        if (!def) fail("target '" + cm.target_feature_id + "' has no feature definition");
        if (cm.source_columns.empty()) fail("no source column for '" + cm.target_feature_id + "'");
        const std::size_t expected = def->modality == Modality::VectorNum ? def->vector_dim : 1;
        if (cm.source_columns.size() != expected) fail("source column count mismatch for '" + cm.target_feature_id + "'");
        if (cm.scale == 0.0 || !std::isfinite(cm.scale) || !std::isfinite(cm.offset)) {
            fail("bad scale/offset for '" + cm.target_feature_id + "'");
        }
        for (const auto& r : cm.invalid_rules)
            if (!std::isfinite(r.threshold)) fail("non-finite invalid-rule threshold");
        if (cm.codebook_ref && def->modality != Modality::Categorical) {
            fail("codebook on non-categorical target '" + cm.target_feature_id + "'");
        }
        if (schema.kind == SourceKind::MapStructured && def->modality != Modality::ScalarNum) {
            fail("map-structured target '" + cm.target_feature_id + "' must be scalar");
        }
    }
    if (schema.kind == SourceKind::MapStructured) {
        if (schema.resolution_m && (!std::isfinite(*schema.resolution_m) || *schema.resolution_m <= 0.0)) {
            fail("resolution_m must be positive");
        }
    }
}

} // namespace soilfuse
