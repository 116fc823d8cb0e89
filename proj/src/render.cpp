#include "soilfuse/render.hpp"

#include "soilfuse/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace soilfuse {

namespace {

constexpr int kCell = 24;
constexpr int kRowLabelWidth = 180;
constexpr int kColLabelHeight = 120;

// Full shade: a dark green.
constexpr double kDark[3] = {0.0, 68.0, 27.0};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string shade(double v) {
    int rgb[3];
    for (int i = 0; i < 3; ++i) rgb[i] = static_cast<int>(std::lround(255.0 - v * (255.0 - kDark[i])));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string render_heatmap_svg(const LabeledMatrix& m) {
    const std::size_t rows = m.values.size();
    const std::size_t cols = m.col_labels.size();
    if (m.row_labels.size() != rows) throw Error(ErrorCode::ShapeMismatch, "heatmap: row label count mismatch");
    for (const auto& r : m.values) {
        if (r.size() != cols) throw Error(ErrorCode::ShapeMismatch, "heatmap: ragged matrix");
        for (double v : r) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(ErrorCode::InvalidValue, "heatmap: value " + text::format_double(v) + " outside [0, 1]");
            }
        }
    }
    const int width = kRowLabelWidth + static_cast<int>(cols) * kCell + 10;
    const int height = kColLabelHeight + static_cast<int>(rows) * kCell + 10;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                      std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t c = 0; c < cols; ++c) {
        const int x = kRowLabelWidth + static_cast<int>(c) * kCell + kCell / 2;
        out += "<text class=\"col-label\" transform=\"translate(" + std::to_string(x) + "," +
               std::to_string(kColLabelHeight - 6) + ") rotate(-60)\">" + xml_escape(m.col_labels[c]) + "</text>\n";
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const int y = kColLabelHeight + static_cast<int>(r) * kCell;
        out += "<text class=\"row-label\" x=\"" + std::to_string(kRowLabelWidth - 6) + "\" y=\"" +
               std::to_string(y + kCell / 2 + 4) + "\" text-anchor=\"end\">" + xml_escape(m.row_labels[r]) + "</text>\n";
        for (std::size_t c = 0; c < cols; ++c) {
            const int x = kRowLabelWidth + static_cast<int>(c) * kCell;
            out += "<rect class=\"cell\" x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                   std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) + "\" fill=\"" + shade(m.values[r][c]) +
                   "\" stroke=\"#cccccc\"><title>" + text::format_double(m.values[r][c]) + "</title></rect>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

std::string heatmap_csv(const LabeledMatrix& m) {
    std::vector<std::string> header{""};
    header.insert(header.end(), m.col_labels.begin(), m.col_labels.end());
    std::string out = text::csv_line(header);
    for (std::size_t r = 0; r < m.values.size(); ++r) {
        std::vector<std::string> row{m.row_labels[r]};
        for (double v : m.values[r]) row.push_back(text::format_double(v));
        out += text::csv_line(row);
    }
    return out;
}

std::string render_raster_svg(const RasterGrid& grid) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : grid.values()) {
        if (v == grid.nodata_value()) continue;
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
    }
    constexpr int kPx = 8;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(grid.ncols() * kPx) +
                      "\" height=\"" + std::to_string(grid.nrows() * kPx) + "\">\n";
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
        for (std::size_t c = 0; c < grid.ncols(); ++c) {
            std::string fill = "#9e9e9e";
            if (!grid.is_nodata(r, c)) fill = shade(hi > lo ? (grid.at(r, c) - lo) / (hi - lo) : 1.0);
            out += "<rect x=\"" + std::to_string(c * kPx) + "\" y=\"" + std::to_string(r * kPx) + "\" width=\"" +
                   std::to_string(kPx) + "\" height=\"" + std::to_string(kPx) + "\" fill=\"" + fill + "\"/>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

} // namespace soilfuse
