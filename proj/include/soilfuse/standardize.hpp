#pragma once

// Turns raw source files into standardized records and portable rasters.

#include "soilfuse/core.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace soilfuse {

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses a CSV document; the first record is the header. Rows whose arity
/// differs from the header raise ShapeMismatch.
RawTable parse_raw_table(std::string_view csv);

using StdValue = std::variant<Missing, double, Category, Text>;

struct StandardizedRecord {
    std::string record_id;
    std::string survey;
    std::optional<GeoPoint> georef;
    std::map<std::string, StdValue> values; // source column -> value

    friend bool operator==(const StandardizedRecord&, const StandardizedRecord&) = default;
};

enum class IssueAction { SetMissing, DroppedGeoref };

struct Issue {
    std::size_t row = 0; // 0-based data row
    std::string column;
    std::string raw;
    std::string rule;
    IssueAction action = IssueAction::SetMissing;
};

struct StandardizeResult {
    std::vector<StandardizedRecord> records;
    std::vector<Issue> issues;
    std::size_t declared_missing = 0; // blank cells and declared sentinels
    std::size_t input_cells = 0;      // mapped source cells examined
};

/// nullopt means Missing. Throws UnknownCode when raw is in neither set.
std::optional<std::string> apply_codebook(std::string_view raw, const Codebook& cb);

/// nullopt means Missing: some rule fired. Sentinels compare exactly;
/// below/above are strict.
std::optional<double> detect_invalid_numeric(double value, std::span<const InvalidRule> rules);

inline double convert_unit(double value, double scale, double offset) { return value * scale + offset; }

/// Portable ASCII grid: six header lines then nrows lines of ncols values,
/// northernmost row first.
RasterGrid parse_portable_raster(std::string_view doc);
std::string write_portable_raster(const RasterGrid& grid);

StandardizeResult standardize_table(const RawTable& raw, const FusionSchema& schema,
                                    const std::map<std::string, Codebook>& codebooks);

/// Applies a map column's invalid rules (to nodata) and unit conversion to
/// every data cell. Issues carry the flattened cell index as row.
RasterGrid standardize_raster(const RasterGrid& grid, const ColumnMap& column, std::vector<Issue>* issues = nullptr);

// Standardized table persistence: CSV (record_id,survey,lon,lat,<columns>)
// plus a JSON sidecar describing each column.

struct ColumnMeta {
    std::string unit;
    Modality modality = Modality::ScalarNum;
    std::optional<std::string> codebook;
};

struct StandardizedTable {
    std::string dataset_id;
    std::vector<std::string> columns;
    std::map<std::string, ColumnMeta> meta;
    std::vector<StandardizedRecord> records;
};

/// Column metadata derived from the schema's mapped features.
StandardizedTable make_standardized_table(const FusionSchema& schema, std::vector<StandardizedRecord> records);

std::string write_standardized_csv(const StandardizedTable& table);
std::string write_standardized_sidecar(const StandardizedTable& table);
StandardizedTable read_standardized(std::string_view csv, std::string_view sidecar);

std::string write_issue_report(const std::vector<Issue>& issues);

std::string_view to_string(IssueAction a) noexcept;

} // namespace soilfuse
