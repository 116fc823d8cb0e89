#pragma once

// Geographic reasoning, feature screening and dual-mode retrieval over an
// immutable FusedTable.

#include "soilfuse/core.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace soilfuse {

struct GazetteerEntry {
    std::string name;
    GeoPoint location;
    std::vector<std::string> admin_path; // coarse -> fine region ids
};

/// CSV `name,lon,lat,admin_path` with admin_path ids separated by '/'.
std::vector<GazetteerEntry> parse_gazetteer(std::string_view csv);

struct AdminRegion {
    std::string id;
    int level = 0;
    std::optional<std::string> parent_id;
    std::vector<GeoPoint> boundary; // implicitly closed ring
};

/// CSV `id,level,parent,vertices` with vertices as "lon lat;lon lat;...".
std::vector<AdminRegion> parse_regions(std::string_view csv);

/// Throws InvalidValue on open/degenerate or self-intersecting rings,
/// unresolved parents or parent level mismatch.
void check_regions(const std::vector<AdminRegion>& regions);

/// Nominatim-compatible geocoder behind an interface so tests stay offline.
class GeocoderClient {
public:
    virtual ~GeocoderClient() = default;
    virtual GeoPoint geocode(const std::string& name) = 0;
};

/// HTTP client for `<base_url>/search?q=<name>&format=json&limit=1`.
class NominatimClient : public GeocoderClient {
public:
    explicit NominatimClient(std::string base_url);
    GeoPoint geocode(const std::string& name) override;

private:
    std::string base_url_;
};

/// Case-insensitive exact gazetteer match, falling back to the external
/// client when one is given. Throws NotFound / ExternalUnavailable.
GeoPoint geocode(std::string_view name, const std::vector<GazetteerEntry>& gazetteer,
                 GeocoderClient* external = nullptr);

/// Even-odd ray casting; points on an edge or vertex count as inside.
bool point_in_polygon(const GeoPoint& p, std::span<const GeoPoint> ring);

/// All regions containing p, sorted by level (then id).
std::vector<AdminRegion> admin_hierarchy(const GeoPoint& p, const std::vector<AdminRegion>& regions);

inline constexpr std::size_t kEmbeddingDim = 256;
using Embedding = std::array<double, kEmbeddingDim>;

std::uint32_t fnv1a_32(std::string_view bytes) noexcept;

/// Hashed character-trigram embedding of the lowercased text, L2-normalized.
/// Text shorter than 3 bytes yields the zero vector.
Embedding embed_text(std::string_view s);

double cosine(const Embedding& a, const Embedding& b) noexcept;

/// Lowercased maximal runs of ASCII letters and digits.
std::set<std::string> tokenize(std::string_view s);

struct FeatureEmbedding {
    std::string feature_id;
    std::set<std::string> keywords;
    Embedding vector{};
    bool zero = false;
};

std::vector<FeatureEmbedding> build_feature_index(const std::vector<FeatureDef>& features);

struct ScreenWeights {
    double keyword = 0.5;
    double embedding = 0.5;
};

struct ScreenHit {
    std::string feature_id;
    double score = 0.0;
};

std::vector<ScreenHit> screen_features(std::string_view query, std::size_t k, const std::vector<FeatureEmbedding>& index,
                                       const ScreenWeights& weights = {});

struct SampleResult {
    std::string sample_id;
    std::string survey;
    GeoPoint location;
    double distance_m = 0.0;
    std::vector<std::pair<std::string, const Cell*>> cells; // nullptr = Missing
};

/// The k samples nearest to center (ties by sample id).
std::vector<SampleResult> query_samples(const FusedTable& table, const GeoPoint& center, std::size_t k,
                                        const std::vector<std::string>& feature_ids);

struct BBox {
    double west = 0.0;
    double south = 0.0;
    double east = 0.0;
    double north = 0.0;

    bool contains(const GeoPoint& p) const noexcept {
        return p.lon >= west && p.lon <= east && p.lat >= south && p.lat <= north;
    }
};

struct DistributionRecord {
    std::string sample_id;
    GeoPoint location;
    const CellValue* value = nullptr;
};

struct RegionArea {
    std::string region_id;
};

using Area = std::variant<BBox, RegionArea>;

inline constexpr std::size_t kDistributionCap = 5;

/// Observed values of each feature at samples inside the area, ordered by
/// sample id. Throws TooManyFeatures, UnknownFeature or UnknownRegion.
std::map<std::string, std::vector<DistributionRecord>> query_feature_distribution(
    const FusedTable& table, const Area& area, const std::vector<AdminRegion>& regions,
    const std::vector<std::string>& feature_ids, std::size_t cap = kDistributionCap);

} // namespace soilfuse
