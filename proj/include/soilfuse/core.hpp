#pragma once

// Domain model of the fused sample-feature table: locations, feature
// definitions, multimodal cells with provenance, codebooks, rasters and
// fusion schemas.

#include "soilfuse/error.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace soilfuse {

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Builds a point, throwing InvalidValue when outside WGS84 bounds.
GeoPoint make_point(double lon, double lat);

enum class Modality { ScalarNum, VectorNum, Categorical, Text, ImageRef };

std::string_view to_string(Modality m) noexcept;
Modality modality_from_string(std::string_view s);

struct FeatureDef {
    std::string id;
    std::string name;
    std::string unit;
    std::string theme;
    Modality modality = Modality::ScalarNum;
    std::size_t vector_dim = 0;          // VectorNum only
    std::vector<std::string> vocabulary; // Categorical only
    std::string annotation;

    friend bool operator==(const FeatureDef&, const FeatureDef&) = default;

    bool is_numeric() const noexcept {
        return modality == Modality::ScalarNum || modality == Modality::VectorNum;
    }
    /// Number of numeric columns the feature expands to (0 for non-numeric).
    std::size_t numeric_dims() const noexcept {
        if (modality == Modality::ScalarNum) return 1;
        if (modality == Modality::VectorNum) return vector_dim;
        return 0;
    }
    std::optional<std::size_t> vocabulary_index(std::string_view label) const;
};

/// Throws InvalidValue when the definition is not well formed.
void check_feature_def(const FeatureDef& def);

struct Missing {
    friend bool operator==(const Missing&, const Missing&) = default;
};
struct Category {
    std::string label;
    friend bool operator==(const Category&, const Category&) = default;
};
struct Text {
    std::string text;
    friend bool operator==(const Text&, const Text&) = default;
};
struct ImageRef {
    std::string path;
    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

using CellValue = std::variant<Missing, double, std::vector<double>, Category, Text, ImageRef>;

inline bool is_missing(const CellValue& v) noexcept { return std::holds_alternative<Missing>(v); }

/// Result of a cell check; empty violation means ok.
struct Verdict {
    std::string violation;

    bool ok() const noexcept { return violation.empty(); }
    explicit operator bool() const noexcept { return ok(); }
};

Verdict validate_cell(const FeatureDef& def, const CellValue& value);

enum class SourceKind { SampleStructured, MapStructured };

std::string_view to_string(SourceKind k) noexcept;
SourceKind source_kind_from_string(std::string_view s);

struct Provenance {
    std::string source_dataset_id;
    SourceKind source_kind = SourceKind::SampleStructured;
    double alignment_distance_m = 0.0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Cell {
    CellValue value;
    Provenance provenance;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Sample {
    std::string sample_id;
    GeoPoint location;
    std::string source_survey;
    std::map<std::string, Cell> cells; // observed cells only

    const Cell* find(std::string_view feature_id) const;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Canonical identity of a location: both coordinates rounded to 5 decimals.
std::string location_key(const GeoPoint& p);

/// location key -> sample ids (sorted).
using LocationIndex = std::map<std::string, std::vector<std::string>>;

LocationIndex index_locations(const std::vector<Sample>& samples);

/// The unified sample-feature table. Immutable once constructed; the
/// constructor rejects any sample whose cells fail validate_cell. Samples
/// are kept sorted by id and Missing cells are dropped.
class FusedTable {
public:
    FusedTable() = default;
    FusedTable(std::vector<FeatureDef> features, std::vector<Sample> samples,
               std::map<std::string, std::string> feature_owners = {});

    const std::vector<FeatureDef>& features() const noexcept { return features_; }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const LocationIndex& location_index() const noexcept { return location_index_; }
    const std::map<std::string, std::string>& feature_owners() const noexcept { return owners_; }

    const FeatureDef* find_feature(std::string_view id) const;
    const Sample* find_sample(std::string_view id) const;
    std::optional<std::size_t> sample_position(std::string_view id) const;

    friend bool operator==(const FusedTable& a, const FusedTable& b) {
        return a.features_ == b.features_ && a.samples_ == b.samples_ && a.owners_ == b.owners_;
    }

private:
    std::vector<FeatureDef> features_;
    std::vector<Sample> samples_;
    std::map<std::string, std::string> owners_;
    std::map<std::string, std::size_t, std::less<>> feature_pos_;
    LocationIndex location_index_;
};

struct Codebook {
    std::string id;
    std::map<std::string, std::string> mapping; // raw code -> label
    std::set<std::string> missing_codes;
};

void check_codebook(const Codebook& cb);

/// Regular lon/lat grid. Row 0 is the northernmost row.
class RasterGrid {
public:
    RasterGrid() = default;
    RasterGrid(std::size_t ncols, std::size_t nrows, double xllcorner, double yllcorner,
               double cellsize, double nodata_value, std::vector<double> values);

    std::size_t ncols() const noexcept { return ncols_; }
    std::size_t nrows() const noexcept { return nrows_; }
    double xllcorner() const noexcept { return xll_; }
    double yllcorner() const noexcept { return yll_; }
    double cellsize() const noexcept { return cellsize_; }
    double nodata_value() const noexcept { return nodata_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double at(std::size_t row, std::size_t col) const { return values_.at(row * ncols_ + col); }
    bool is_nodata(std::size_t row, std::size_t col) const { return at(row, col) == nodata_; }
    GeoPoint cell_center(std::size_t row, std::size_t col) const;
    std::size_t data_cell_count() const;

    friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

private:
    std::size_t ncols_ = 0;
    std::size_t nrows_ = 0;
    double xll_ = 0.0;
    double yll_ = 0.0;
    double cellsize_ = 1.0;
    double nodata_ = -9999.0;
    std::vector<double> values_;
};

struct InvalidRule {
    enum class Kind { EqualsSentinel, Below, Above };
    Kind kind = Kind::EqualsSentinel;
    double threshold = 0.0;

    friend bool operator==(const InvalidRule&, const InvalidRule&) = default;
};

std::string describe(const InvalidRule& rule);

struct ColumnMap {
    std::vector<std::string> source_columns; // one per vector dimension, else exactly one
    std::string target_feature_id;
    double scale = 1.0;
    double offset = 0.0;
    std::optional<std::string> codebook_ref;
    std::vector<std::string> missing_codes; // declared raw missing sentinels
    std::vector<InvalidRule> invalid_rules;
};

struct GeorefColumns {
    std::string lon_col;
    std::string lat_col;
};

struct FusionSchema {
    std::string dataset_id;
    SourceKind kind = SourceKind::SampleStructured;
    std::optional<double> resolution_m; // map-structured only
    bool long_term_projection = false;
    std::string source_file;            // sample-structured raw table
    std::optional<GeorefColumns> georef_columns;
    std::optional<std::string> record_id_column;
    std::string survey;                 // constant survey label
    std::optional<std::string> survey_column;
    std::string sample_namespace;       // defaults to dataset_id
    std::vector<FeatureDef> features;   // target features this schema owns
    std::vector<ColumnMap> column_maps;

    const FeatureDef* find_feature(std::string_view id) const;
    const std::string& effective_namespace() const {
        return sample_namespace.empty() ? dataset_id : sample_namespace;
    }
};

/// Structural checks shared by standardize and fuse. Georef presence is
/// left to screening.
void check_schema(const FusionSchema& schema);

} // namespace soilfuse
