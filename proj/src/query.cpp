#include "soilfuse/query.hpp"

#include "soilfuse/fuse.hpp"
#include "soilfuse/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace soilfuse {

std::vector<GazetteerEntry> parse_gazetteer(std::string_view csv) {
    auto records = text::parse_csv(csv);
    std::vector<GazetteerEntry> out;
    if (records.empty()) return out;
    const std::vector<std::string> expected{"name", "lon", "lat", "admin_path"};
    if (records.front() != expected) throw Error(ErrorCode::MalformedHeader, "gazetteer header must be name,lon,lat,admin_path");
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() != 4) throw Error(ErrorCode::ShapeMismatch, "gazetteer row " + std::to_string(i) + " needs 4 fields");
        auto lon = text::parse_double(r[1]);
        auto lat = text::parse_double(r[2]);
        if (!lon || !lat) throw Error(ErrorCode::NonNumericCell, "gazetteer row " + std::to_string(i) + ": bad coordinate");
        GazetteerEntry e;
        e.name = std::string(text::trim(r[0]));
        if (e.name.empty()) throw Error(ErrorCode::InvalidValue, "gazetteer row " + std::to_string(i) + ": empty name");
        e.location = make_point(*lon, *lat);
        if (!text::trim(r[3]).empty()) {
            for (auto& id : text::split(text::trim(r[3]), '/')) e.admin_path.emplace_back(text::trim(id));
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<AdminRegion> parse_regions(std::string_view csv) {
    auto records = text::parse_csv(csv);
    std::vector<AdminRegion> out;
    if (records.empty()) return out;
    const std::vector<std::string> expected{"id", "level", "parent", "vertices"};
    if (records.front() != expected) throw Error(ErrorCode::MalformedHeader, "regions header must be id,level,parent,vertices");
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() != 4) throw Error(ErrorCode::ShapeMismatch, "regions row " + std::to_string(i) + " needs 4 fields");
        AdminRegion region;
        region.id = std::string(text::trim(r[0]));
        auto level = text::parse_int(r[1]);
        if (!level || *level < 0) throw Error(ErrorCode::InvalidValue, "region '" + region.id + "': bad level");
        region.level = static_cast<int>(*level);
        if (!text::trim(r[2]).empty()) region.parent_id = std::string(text::trim(r[2]));
        for (const auto& vertex : text::split(r[3], ';')) {
            auto parts = text::split(text::trim(vertex), ' ');
            parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
            if (parts.size() != 2) throw Error(ErrorCode::InvalidValue, "region '" + region.id + "': bad vertex '" + vertex + "'");
            auto lon = text::parse_double(parts[0]);
            auto lat = text::parse_double(parts[1]);
            if (!lon || !lat) throw Error(ErrorCode::NonNumericCell, "region '" + region.id + "': bad vertex");
            region.boundary.push_back(make_point(*lon, *lat));
        }
        if (region.boundary.size() > 1 && region.boundary.front() == region.boundary.back()) region.boundary.pop_back();
        out.push_back(std::move(region));
    }
    check_regions(out);
    return out;
}

namespace {

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) noexcept {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) noexcept {
    if (cross(a, b, p) != 0.0) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
           p.lat <= std::max(a.lat, b.lat);
}

int sign(double v) noexcept { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c, const GeoPoint& d) noexcept {
    const int d1 = sign(cross(c, d, a));
    const int d2 = sign(cross(c, d, b));
    const int d3 = sign(cross(a, b, c));
    const int d4 = sign(cross(a, b, d));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) || (d3 == 0 && on_segment(c, a, b)) ||
           (d4 == 0 && on_segment(d, a, b));
}

} // namespace

void check_regions(const std::vector<AdminRegion>& regions) {
    std::map<std::string, const AdminRegion*> by_id;
    for (const auto& r : regions) {
        if (r.id.empty()) throw Error(ErrorCode::InvalidValue, "region with empty id");
        if (!by_id.emplace(r.id, &r).second) throw Error(ErrorCode::InvalidValue, "duplicate region '" + r.id + "'");
    }
    for (const auto& r : regions) {
        const auto& ring = r.boundary;
        const std::size_t n = ring.size();
        if (n < 3) throw Error(ErrorCode::InvalidValue, "region '" + r.id + "': ring needs 3 vertices");
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if (adjacent) continue;
                if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) {
                    throw Error(ErrorCode::InvalidValue, "region '" + r.id + "': ring self-intersects");
                }
            }
        }
        if (r.parent_id) {
            auto it = by_id.find(*r.parent_id);
            if (it == by_id.end()) throw Error(ErrorCode::InvalidValue, "region '" + r.id + "': unknown parent");
            if (it->second->level != r.level - 1) {
                throw Error(ErrorCode::InvalidValue, "region '" + r.id + "': parent level must be level - 1");
            }
        } else if (r.level != 0) {
            throw Error(ErrorCode::InvalidValue, "region '" + r.id + "': only level 0 may lack a parent");
        }
    }
}

GeoPoint geocode(std::string_view name, const std::vector<GazetteerEntry>& gazetteer, GeocoderClient* external) {
    const std::string wanted = text::to_lower(text::trim(name));
    for (const auto& e : gazetteer) {
        if (text::to_lower(e.name) == wanted) return e.location;
    }
    if (external) return external->geocode(std::string(text::trim(name)));
    throw Error(ErrorCode::NotFound, "place '" + std::string(name) + "' not found");
}

bool point_in_polygon(const GeoPoint& p, std::span<const GeoPoint> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[j];
        if (on_segment(p, a, b)) return true;
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

std::vector<AdminRegion> admin_hierarchy(const GeoPoint& p, const std::vector<AdminRegion>& regions) {
    std::vector<AdminRegion> chain;
    for (const auto& r : regions) {
        if (point_in_polygon(p, r.boundary)) chain.push_back(r);
    }
    std::sort(chain.begin(), chain.end(), [](const AdminRegion& a, const AdminRegion& b) {
        return a.level != b.level ? a.level < b.level : a.id < b.id;
    });
    return chain;
}

std::uint32_t fnv1a_32(std::string_view bytes) noexcept {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

Embedding embed_text(std::string_view s) {
    Embedding v{};
    const std::string lower = text::to_lower(s);
    if (lower.size() < 3) return v;
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i) {
        v[fnv1a_32(std::string_view(lower).substr(i, 3)) % kEmbeddingDim] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

double cosine(const Embedding& a, const Embedding& b) noexcept {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

std::set<std::string> tokenize(std::string_view s) {
    std::set<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(std::move(cur));
    return out;
}

std::vector<FeatureEmbedding> build_feature_index(const std::vector<FeatureDef>& features) {
    std::vector<FeatureEmbedding> index;
    index.reserve(features.size());
    for (const auto& f : features) {
        FeatureEmbedding e;
        e.feature_id = f.id;
        e.keywords = tokenize(f.name + " " + f.annotation);
        e.vector = embed_text(f.name);
        e.zero = std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return x == 0.0; });
        index.push_back(std::move(e));
    }
    return index;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

} // namespace

std::vector<ScreenHit> screen_features(std::string_view query, std::size_t k, const std::vector<FeatureEmbedding>& index,
                                       const ScreenWeights& weights) {
    if (k == 0) throw Error(ErrorCode::InvalidValue, "k must be >= 1");
    const auto tokens = tokenize(query);
    const Embedding qv = embed_text(query);
    std::vector<ScreenHit> hits;
    for (const auto& e : index) {
        const double score = weights.keyword * jaccard(tokens, e.keywords) + weights.embedding * cosine(qv, e.vector);
        if (score > 0.0) hits.push_back({e.feature_id, score});
    }
    std::sort(hits.begin(), hits.end(), [](const ScreenHit& a, const ScreenHit& b) {
        return a.score != b.score ? a.score > b.score : a.feature_id < b.feature_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<SampleResult> query_samples(const FusedTable& table, const GeoPoint& center, std::size_t k,
                                        const std::vector<std::string>& feature_ids) {
    if (k == 0) throw Error(ErrorCode::InvalidValue, "k must be >= 1");
    for (const auto& fid : feature_ids) {
        if (!table.find_feature(fid)) throw Error(ErrorCode::UnknownFeature, "unknown feature '" + fid + "'");
    }
    const auto& samples = table.samples();
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) order.emplace_back(haversine_m(center, samples[i].location), i);
    // samples are sorted by id, so index order breaks distance ties by id
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());

    std::vector<SampleResult> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const Sample& s = samples[order[i].second];
        SampleResult r{s.sample_id, s.source_survey, s.location, order[i].first, {}};
        for (const auto& fid : feature_ids) r.cells.emplace_back(fid, s.find(fid));
        out.push_back(std::move(r));
    }
    return out;
}

std::map<std::string, std::vector<DistributionRecord>> query_feature_distribution(
    const FusedTable& table, const Area& area, const std::vector<AdminRegion>& regions,
    const std::vector<std::string>& feature_ids, std::size_t cap) {
    if (feature_ids.size() > cap) {
        throw Error(ErrorCode::TooManyFeatures, std::to_string(feature_ids.size()) + " features requested, cap is " +
                                                    std::to_string(cap));
    }
    for (const auto& fid : feature_ids) {
        if (!table.find_feature(fid)) throw Error(ErrorCode::UnknownFeature, "unknown feature '" + fid + "'");
    }
    const AdminRegion* region = nullptr;
    if (const auto* ra = std::get_if<RegionArea>(&area)) {
        for (const auto& r : regions)
            if (r.id == ra->region_id) region = &r;
        if (!region) throw Error(ErrorCode::UnknownRegion, "unknown region '" + ra->region_id + "'");
    }
    const BBox* box = std::get_if<BBox>(&area);

    std::map<std::string, std::vector<DistributionRecord>> out;
    for (const auto& fid : feature_ids) out[fid];
    for (const auto& s : table.samples()) {
        const bool inside = box ? box->contains(s.location) : point_in_polygon(s.location, region->boundary);
        if (!inside) continue;
        for (const auto& fid : feature_ids) {
            if (const Cell* c = s.find(fid)) out[fid].push_back({s.sample_id, s.location, &c->value});
        }
    }
    return out;
}

} // namespace soilfuse
