#pragma once

// ML-ready artifacts built from a FusedTable: availability statistics,
// dictionary and flat exports, the training-view filter, location splits
// and z-score normalization.

#include "soilfuse/core.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace soilfuse {

struct AvailabilityStats {
    std::map<std::string, double> per_feature;
    /// (theme, survey) -> mean of per-feature fractions over that survey's samples.
    std::map<std::pair<std::string, std::string>, double> matrix;
    std::vector<double> bin_edges; // bins + 1 monotone edges over [0, 1]
    std::vector<std::size_t> histogram;
};

AvailabilityStats compute_availability(const FusedTable& table, std::size_t bins = 10);

struct AlignmentSummary {
    std::size_t count = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

/// nullopt when the feature has no observed cells. Throws UnknownFeature.
std::optional<AlignmentSummary> summarize_alignment(const FusedTable& table, std::string_view feature_id);

struct DictionaryOptions {
    /// When set, ImageRef paths are resolved against this root and missing
    /// files produce warnings.
    std::optional<std::string> asset_root;
};

/// Sample-keyed JSON document; byte-stable for a given table.
std::string export_dictionary(const FusedTable& table, const DictionaryOptions& options = {},
                              std::vector<std::string>* warnings = nullptr);
FusedTable import_dictionary(std::string_view doc);

struct FlatExport {
    std::string csv;
    std::string columns_json;
};

FlatExport export_flat_table(const FusedTable& table);

struct FilterOptions {
    double min_avail = 0.5;
    double max_align_m = 200.0;
    std::set<Modality> drop_modalities{Modality::Text};
    bool drop_constant = true;
};

struct Exclusion {
    std::string feature_id;
    std::string rule; // "availability" | "alignment" | "modality" | "constant"
    std::string detail;
};

struct FilterResult {
    std::vector<FeatureDef> kept;
    std::vector<Exclusion> excluded;
};

FilterResult filter_training_view(const FusedTable& table, const FilterOptions& options = {});

std::string write_exclusion_report(const std::vector<Exclusion>& excluded);

enum class SplitTag : std::uint8_t { Train, Eval };

std::string_view to_string(SplitTag t) noexcept;

/// One tag per sample, aligned with table.samples(). floor(eval_fraction * n)
/// shuffled unique locations go to eval.
std::vector<SplitTag> split_by_location(const FusedTable& table, double eval_fraction, std::uint64_t seed);

template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct TrainingView {
    std::vector<FeatureDef> kept_features;
    std::vector<std::string> sample_ids;
    std::vector<std::string> numeric_columns;  // feature id, or id_k for vectors
    std::vector<std::string> numeric_feature;  // owning feature per column
    Matrix<double> numeric;                    // 0 where unobserved
    Matrix<std::uint8_t> numeric_mask;         // 1 = observed
    std::vector<std::string> categorical_features;
    Matrix<std::int32_t> categorical;          // vocabulary index, -1 where unobserved
    Matrix<std::uint8_t> categorical_mask;
    std::vector<std::string> visual_features;
    std::vector<std::vector<std::optional<std::string>>> visual_refs; // [feature][sample]
    std::vector<SplitTag> split;
};

/// Raw (unnormalized) matrices for the kept features. Throws on Text.
TrainingView build_training_view(const FusedTable& table, const std::vector<FeatureDef>& kept,
                                 std::vector<SplitTag> split);

struct NormalizationStats {
    std::vector<std::string> columns;
    std::vector<double> mean;
    std::vector<double> std;
};

struct ZScoreResult {
    NormalizationStats stats;
    TrainingView view;
};

/// Population mean/std from observed train cells; applied to all rows.
/// Throws ConstantColumn when a column has fewer than 2 distinct train values.
ZScoreResult fit_apply_zscore(const TrainingView& view);

/// Persists the view as plain columnar text files in `dir`.
void write_training_view(const TrainingView& view, const NormalizationStats& stats, const std::string& dir);

struct LoadedTrainingView {
    TrainingView view;
    NormalizationStats stats;
};

LoadedTrainingView read_training_view(const std::string& dir);

} // namespace soilfuse
