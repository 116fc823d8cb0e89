#include "soilfuse/service.hpp"

#include "soilfuse/text.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cmath>

namespace soilfuse {

using nlohmann::json;

NominatimClient::NominatimClient(std::string base_url) : base_url_(std::move(base_url)) {}

GeoPoint NominatimClient::geocode(const std::string& name) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(5);
    client.set_read_timeout(10);
    httplib::Params params{{"q", name}, {"format", "json"}, {"limit", "1"}};
    auto res = client.Get("/search", params, httplib::Headers{{"User-Agent", "soilfuse"}});
    if (!res || res->status != 200) {
        throw Error(ErrorCode::ExternalUnavailable, "geocoder at " + base_url_ + " unavailable");
    }
    try {
        const json doc = json::parse(res->body);
        if (!doc.is_array() || doc.empty()) throw Error(ErrorCode::NotFound, "place '" + name + "' not found");
        auto coord = [](const json& v) {
            if (v.is_string()) {
                auto d = text::parse_double(v.get<std::string>());
                if (!d) throw Error(ErrorCode::ExternalUnavailable, "geocoder returned a malformed coordinate");
                return *d;
            }
            return v.get<double>();
        };
        return make_point(coord(doc[0].at("lon")), coord(doc[0].at("lat")));
    } catch (const json::exception&) {
        throw Error(ErrorCode::ExternalUnavailable, "geocoder returned malformed JSON");
    }
}

std::shared_ptr<const Snapshot> Snapshot::make(FusedTable table, std::vector<GazetteerEntry> gazetteer,
                                               std::vector<AdminRegion> regions) {
    auto s = std::make_shared<Snapshot>();
    s->feature_index = build_feature_index(table.features());
    s->table = std::move(table);
    s->gazetteer = std::move(gazetteer);
    s->regions = std::move(regions);
    return s;
}

QueryService::QueryService(std::shared_ptr<const Snapshot> snapshot, ServiceConfig config,
                           std::shared_ptr<GeocoderClient> external)
    : snapshot_(std::move(snapshot)), config_(std::move(config)), external_(std::move(external)) {
    if (!external_ && config_.geocoder_url) external_ = std::make_shared<NominatimClient>(*config_.geocoder_url);
}

QueryService::~QueryService() = default;

void QueryService::swap_snapshot(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(next);
}

std::shared_ptr<const Snapshot> QueryService::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

namespace {

struct BadRequest {
    std::string message;
};

const std::string& require(const QueryParams& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) throw BadRequest{"missing parameter '" + key + "'"};
    return it->second;
}

double number_param(const QueryParams& params, const std::string& key) {
    auto v = text::parse_double(require(params, key));
    if (!v || !std::isfinite(*v)) throw BadRequest{"parameter '" + key + "' must be a number"};
    return *v;
}

std::size_t count_param(const QueryParams& params, const std::string& key, std::size_t fallback) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) return fallback;
    auto v = text::parse_int(it->second);
    if (!v || *v < 1) throw BadRequest{"parameter '" + key + "' must be a positive integer"};
    return static_cast<std::size_t>(*v);
}

GeoPoint point_param(const QueryParams& params) {
    GeoPoint p{number_param(params, "lon"), number_param(params, "lat")};
    if (!is_valid(p)) throw BadRequest{"coordinate out of range"};
    return p;
}

std::vector<std::string> list_param(const QueryParams& params, const std::string& key, bool required) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) {
        if (required) throw BadRequest{"missing parameter '" + key + "'"};
        return {};
    }
    std::vector<std::string> out;
    for (auto& s : text::split(it->second, ',')) {
        auto t = text::trim(s);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

json value_json(const CellValue& v) {
    struct V {
        json operator()(const Missing&) const { return nullptr; }
        json operator()(double d) const { return d; }
        json operator()(const std::vector<double>& d) const { return d; }
        json operator()(const Category& c) const { return c.label; }
        json operator()(const Text& t) const { return t.text; }
        json operator()(const ImageRef& r) const { return r.path; }
    };
    return std::visit(V{}, v);
}

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownFeature:
    case ErrorCode::UnknownRegion:
    case ErrorCode::UnknownSample: return 404;
    case ErrorCode::ExternalUnavailable: return 502;
    default: return 400;
    }
}

Response error_response(int status, std::string_view code, const std::string& message) {
    return {status, json{{"error", std::string(code)}, {"message", message}}.dump()};
}

} // namespace

Response QueryService::handle(std::string_view path, const QueryParams& params) const {
    const auto snap = snapshot();
    const Snapshot& s = *snap;
    try {
        if (path == "/openapi.json") return {200, openapi()};

        if (path == "/geocode") {
            const auto& q = require(params, "q");
            json body{{"query", q}};
            GeoPoint p;
            const std::string wanted = text::to_lower(text::trim(q));
            auto it = std::find_if(s.gazetteer.begin(), s.gazetteer.end(),
                                   [&](const GazetteerEntry& e) { return text::to_lower(e.name) == wanted; });
            if (it != s.gazetteer.end()) {
                p = it->location;
                body["source"] = "gazetteer";
                body["admin_path"] = it->admin_path;
            } else {
                p = geocode(q, {}, external_.get());
                body["source"] = "external";
                body["admin_path"] = json::array();
            }
            body["lon"] = p.lon;
            body["lat"] = p.lat;
            return {200, body.dump()};
        }

        if (path == "/regions") {
            const GeoPoint p = point_param(params);
            json regions = json::array();
            for (const auto& r : admin_hierarchy(p, s.regions)) {
                regions.push_back(json{{"id", r.id}, {"level", r.level},
                                       {"parent", r.parent_id ? json(*r.parent_id) : json(nullptr)}});
            }
            return {200, json{{"lon", p.lon}, {"lat", p.lat}, {"regions", std::move(regions)}}.dump()};
        }

        if (path == "/features/screen") {
            const auto& q = require(params, "q");
            const auto k = count_param(params, "k", 10);
            json results = json::array();
            for (const auto& hit : screen_features(q, k, s.feature_index, config_.weights)) {
                const FeatureDef* f = s.table.find_feature(hit.feature_id);
                results.push_back(json{{"feature_id", hit.feature_id}, {"name", f->name}, {"unit", f->unit},
                                       {"theme", f->theme}, {"modality", std::string(to_string(f->modality))},
                                       {"score", hit.score}});
            }
            return {200, json{{"query", q}, {"k", k}, {"results", std::move(results)}}.dump()};
        }

        if (path == "/samples") {
            const GeoPoint center = point_param(params);
            const auto k = count_param(params, "k", 5);
            const auto features = list_param(params, "features", false);
            json samples = json::array();
            for (const auto& r : query_samples(s.table, center, k, features)) {
                json cells = json::object();
                for (const auto& [fid, cell] : r.cells) {
                    if (!cell) {
                        cells[fid] = json{{"missing", true}};
                        continue;
                    }
                    cells[fid] = json{{"missing", false},
                                      {"value", value_json(cell->value)},
                                      {"unit", s.table.find_feature(fid)->unit},
                                      {"source_dataset_id", cell->provenance.source_dataset_id},
                                      {"source_kind", std::string(to_string(cell->provenance.source_kind))},
                                      {"alignment_distance_m", cell->provenance.alignment_distance_m}};
                }
                samples.push_back(json{{"sample_id", r.sample_id}, {"survey", r.survey}, {"lon", r.location.lon},
                                       {"lat", r.location.lat}, {"distance_m", r.distance_m},
                                       {"features", std::move(cells)}});
            }
            return {200, json{{"center", {{"lon", center.lon}, {"lat", center.lat}}}, {"k", k},
                              {"samples", std::move(samples)}}
                             .dump()};
        }

        if (path == "/features/distribution") {
            const auto ids = list_param(params, "ids", true);
            Area area;
            json area_json;
            if (auto it = params.find("region"); it != params.end() && !it->second.empty()) {
                area = RegionArea{it->second};
                area_json = json{{"region", it->second}};
            } else {
                const auto parts = list_param(params, "bbox", true);
                if (parts.size() != 4) throw BadRequest{"bbox must be w,s,e,n"};
                double v[4];
                for (int i = 0; i < 4; ++i) {
                    auto d = text::parse_double(parts[static_cast<std::size_t>(i)]);
                    if (!d || !std::isfinite(*d)) throw BadRequest{"bbox must be four numbers"};
                    v[i] = *d;
                }
                if (v[0] > v[2] || v[1] > v[3]) throw BadRequest{"bbox must satisfy w <= e and s <= n"};
                area = BBox{v[0], v[1], v[2], v[3]};
                area_json = json{{"bbox", {v[0], v[1], v[2], v[3]}}};
            }
            json features = json::object();
            for (const auto& [fid, records] :
                 query_feature_distribution(s.table, area, s.regions, ids, config_.distribution_cap)) {
                json list = json::array();
                for (const auto& r : records) {
                    list.push_back(json{{"sample_id", r.sample_id}, {"lon", r.location.lon}, {"lat", r.location.lat},
                                        {"value", value_json(*r.value)}});
                }
                features[fid] = std::move(list);
            }
            return {200, json{{"area", std::move(area_json)}, {"features", std::move(features)}}.dump()};
        }

        return error_response(404, "not-found", "no route for " + std::string(path));
    } catch (const BadRequest& e) {
        return error_response(400, "bad-request", e.message);
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    }
}

std::string QueryService::openapi() const {
    auto param = [](const char* name, const char* type, bool required, const char* description) {
        return json{{"name", name},
                    {"in", "query"},
                    {"required", required},
                    {"description", description},
                    {"schema", {{"type", type}}}};
    };
    auto op = [](const char* id, const char* summary, json params) {
        return json{{"get",
                     {{"operationId", id},
                      {"summary", summary},
                      {"parameters", std::move(params)},
                      {"responses",
                       {{"200", {{"description", "JSON result"}, {"content", {{"application/json", {{"schema", {{"type", "object"}}}}}}}}},
                        {"400", {{"description", "Invalid request"}}},
                        {"404", {{"description", "Unknown place, feature or region"}}}}}}}};
    };
    json doc;
    doc["openapi"] = "3.0.3";
    doc["info"] = json{{"title", "soilfuse query service"},
                       {"version", "1.0.0"},
                       {"description", "Geographic reasoning, feature screening and sample/feature-centric retrieval over a fused soil sample table."}};
    json paths;
    paths["/geocode"] = op("geocode", "Resolve a place name to coordinates",
                           json::array({param("q", "string", true, "Place name (case-insensitive)")}));
    paths["/regions"] = op("regions", "Administrative regions enclosing a point, coarse to fine",
                           json::array({param("lon", "number", true, "Longitude (WGS84)"),
                                        param("lat", "number", true, "Latitude (WGS84)")}));
    paths["/features/screen"] = op("screenFeatures", "Rank features by keyword and embedding relevance",
                                   json::array({param("q", "string", true, "Free-text query"),
                                                param("k", "integer", false, "Maximum results (default 10)")}));
    paths["/samples"] = op("querySamples", "Sample-centric retrieval: nearest samples with requested features",
                           json::array({param("lon", "number", true, "Longitude"), param("lat", "number", true, "Latitude"),
                                        param("k", "integer", false, "Number of samples (default 5)"),
                                        param("features", "string", false, "Comma-separated feature ids")}));
    paths["/features/distribution"] =
        op("featureDistribution", "Feature-centric retrieval: observed values inside an area",
           json::array({param("ids", "string", true, "Comma-separated feature ids (at most 5)"),
                        param("bbox", "string", false, "west,south,east,north"),
                        param("region", "string", false, "Administrative region id (alternative to bbox)")}));
    paths["/openapi.json"] = op("openapi", "This document", json::array());
    doc["paths"] = std::move(paths);
    return doc.dump(2);
}

void QueryService::install_routes() {
    server_ = std::make_unique<httplib::Server>();
    server_->Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
        QueryParams params;
        for (const auto& [k, v] : req.params) params.emplace(k, v);
        Response r = handle(req.path, params);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
}

bool QueryService::listen() {
    install_routes();
    return server_->listen(config_.host, config_.port);
}

int QueryService::bind_any_port() {
    install_routes();
    return server_->bind_to_any_port(config_.host);
}

bool QueryService::listen_after_bind() { return server_ && server_->listen_after_bind(); }

void QueryService::stop() {
    if (server_) server_->stop();
}

} // namespace soilfuse
