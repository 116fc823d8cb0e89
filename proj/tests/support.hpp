#pragma once

#include "soilfuse/core.hpp"
#include "soilfuse/error.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace soilfuse::testing {

inline std::string fixture(const std::string& rel) { return std::string(SOILFUSE_FIXTURES) + "/" + rel; }
inline std::string golden(const std::string& rel) { return std::string(SOILFUSE_GOLDEN) + "/" + rel; }

/// Fresh scratch directory per test, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("soilfuse_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const { return rel.empty() ? path_.string() : (path_ / rel).string(); }

private:
    std::filesystem::path path_;
};

// Central angle from the dot/cross product of unit vectors; shares no code
// with the haversine implementation under test.
inline double oracle_distance_m(const GeoPoint& a, const GeoPoint& b) {
    constexpr double kDeg = 3.14159265358979323846 / 180.0;
    auto unit = [&](const GeoPoint& p) {
        const double lon = p.lon * kDeg, lat = p.lat * kDeg;
        return std::array<double, 3>{std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
    };
    const auto u = unit(a), v = unit(b);
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    return 6371000.0 * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

inline FeatureDef scalar_feature(const std::string& id, const std::string& theme = "chemical",
                                 const std::string& unit = "") {
    FeatureDef f;
    f.id = id;
    f.name = id;
    f.unit = unit;
    f.theme = theme;
    f.modality = Modality::ScalarNum;
    return f;
}

inline FeatureDef categorical_feature(const std::string& id, std::vector<std::string> vocab,
                                      const std::string& theme = "land_site") {
    FeatureDef f = scalar_feature(id, theme);
    f.modality = Modality::Categorical;
    f.vocabulary = std::move(vocab);
    return f;
}

inline FeatureDef vector_feature(const std::string& id, std::size_t dim, const std::string& theme = "climate") {
    FeatureDef f = scalar_feature(id, theme);
    f.modality = Modality::VectorNum;
    f.vector_dim = dim;
    return f;
}

inline FeatureDef text_feature(const std::string& id, const std::string& theme = "land_site") {
    FeatureDef f = scalar_feature(id, theme);
    f.modality = Modality::Text;
    return f;
}

inline Cell observed(CellValue v, const std::string& source = "src", double distance = 0.0) {
    Cell c;
    c.value = std::move(v);
    c.provenance.source_dataset_id = source;
    c.provenance.source_kind = distance > 0.0 ? SourceKind::MapStructured : SourceKind::SampleStructured;
    c.provenance.alignment_distance_m = distance;
    return c;
}

inline Sample make_sample(const std::string& id, double lon, double lat, const std::string& survey = "S1") {
    Sample s;
    s.sample_id = id;
    s.location = GeoPoint{lon, lat};
    s.source_survey = survey;
    return s;
}

template <typename Fn>
ErrorCode error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected soilfuse::Error";
    return ErrorCode::Io;
}

} // namespace soilfuse::testing
