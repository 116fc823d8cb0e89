#pragma once

// SVG + CSV plot emission. Every plot ships with its numbers as CSV.

#include "soilfuse/core.hpp"

#include <string>
#include <vector>

namespace soilfuse {

struct LabeledMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> values; // rows x cols
};

/// One rect per cell; 0 maps to white and 1 to the full shade. Throws
/// InvalidValue for values outside [0, 1] or ragged input.
std::string render_heatmap_svg(const LabeledMatrix& m);
std::string heatmap_csv(const LabeledMatrix& m);

/// Fill colour for a fraction, as "#rrggbb"; luminance decreases with v.
std::string shade(double v);

/// Inspection rendering of a raster, min-max scaled; nodata drawn grey.
std::string render_raster_svg(const RasterGrid& grid);

} // namespace soilfuse
