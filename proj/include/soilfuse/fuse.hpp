#pragma once

// Schema execution: screening, record mapping, raster lookup with alignment
// distances, asset links and location indexing.

#include "soilfuse/core.hpp"
#include "soilfuse/standardize.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace soilfuse {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kMaxResolutionM = 5000.0;

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

struct ScreeningMeta {
    SourceKind kind = SourceKind::SampleStructured;
    bool has_georef = true;
    std::optional<double> resolution_m;
    bool is_long_term_projection = false;
};

struct ScreenVerdict {
    bool keep = true;
    std::string reason; // empty when kept

    friend bool operator==(const ScreenVerdict&, const ScreenVerdict&) = default;
};

ScreenVerdict screen_dataset(const ScreeningMeta& meta);
ScreeningMeta screening_meta(const FusionSchema& schema);

struct RasterHit {
    double value = 0.0;
    double alignment_distance_m = 0.0;
    std::size_t row = 0;
    std::size_t col = 0;
};

/// Value of the cell containing p (nearest center by planar index) and the
/// haversine distance to that center. nullopt when p is outside the grid
/// extent or the cell is nodata.
std::optional<RasterHit> sample_raster_at(const RasterGrid& grid, const GeoPoint& p);

/// Cell index selected for p regardless of nodata; nullopt outside extent.
std::optional<std::pair<std::size_t, std::size_t>> nearest_cell(const RasterGrid& grid, const GeoPoint& p);

struct FusionReport {
    std::string dataset_id;
    std::size_t samples_created = 0;
    std::size_t samples_extended = 0;
    std::size_t records_skipped = 0; // no usable georeference
    std::size_t cells_written = 0;
    std::size_t cells_missing = 0;
    std::size_t out_of_extent = 0;
    std::vector<std::string> warnings;
};

/// Adds the schema's feature definitions to the table, recording ownership.
/// Throws FeatureCollision when another dataset already owns one of them.
FusedTable register_features(const FusedTable& table, const FusionSchema& schema);

/// Sample-structured execution: records become samples keyed by
/// (namespace, record id); existing samples are extended.
FusedTable execute_schema(const FusionSchema& schema, const std::vector<StandardizedRecord>& records,
                          const FusedTable& table, FusionReport& report);

/// Map-structured execution: every sample gains the schema's features.
/// Rasters are keyed by each column map's source column.
FusedTable execute_schema(const FusionSchema& schema, const std::map<std::string, RasterGrid>& rasters,
                          const FusedTable& table, FusionReport& report);

/// Writes an ImageRef cell. Relinking overwrites and appends a warning.
FusedTable link_asset(const FusedTable& table, const std::string& sample_id, const std::string& feature_id,
                      const std::string& ref, FusionReport& report);

LocationIndex build_location_index(const FusedTable& table);

struct AssetLink {
    std::string sample_id;
    std::string feature_id;
    std::string path;
};

struct CorpusResult {
    FusedTable table;
    std::vector<std::pair<std::string, ScreenVerdict>> screening;
    std::vector<FusionReport> reports;
};

/// Runs every schema in `schemas` over a standardized directory: screening,
/// then sample-structured sources (by dataset id), then map-structured ones.
/// Asset links come from `<dir>/assets.csv` (sample_id,feature_id,path) when
/// present.
CorpusResult fuse_directory(const std::string& std_dir, const std::vector<FusionSchema>& schemas);

std::string write_fusion_report_text(const CorpusResult& result);
std::string write_fusion_report_csv(const CorpusResult& result);

} // namespace soilfuse
