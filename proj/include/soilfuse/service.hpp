#pragma once

// HTTP front end for the query layer. Request handling is a pure function
// of (snapshot, path, params) so it can be tested without sockets.

#include "soilfuse/core.hpp"
#include "soilfuse/query.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace soilfuse {

struct Snapshot {
    FusedTable table;
    std::vector<GazetteerEntry> gazetteer;
    std::vector<AdminRegion> regions;
    std::vector<FeatureEmbedding> feature_index;

    static std::shared_ptr<const Snapshot> make(FusedTable table, std::vector<GazetteerEntry> gazetteer,
                                                std::vector<AdminRegion> regions);
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    ScreenWeights weights;
    std::size_t distribution_cap = kDistributionCap;
    std::optional<std::string> geocoder_url;
};

struct Response {
    int status = 200;
    std::string body;
};

using QueryParams = std::map<std::string, std::string>;

class QueryService {
public:
    QueryService(std::shared_ptr<const Snapshot> snapshot, ServiceConfig config,
                 std::shared_ptr<GeocoderClient> external = nullptr);
    ~QueryService();

    QueryService(const QueryService&) = delete;
    QueryService& operator=(const QueryService&) = delete;

    /// Readers that already hold the old snapshot finish on it.
    void swap_snapshot(std::shared_ptr<const Snapshot> next);
    std::shared_ptr<const Snapshot> snapshot() const;

    Response handle(std::string_view path, const QueryParams& params) const;

    /// Machine-readable interface description (OpenAPI 3).
    std::string openapi() const;

    /// Blocks until stop(). Returns false if the socket could not be bound.
    bool listen();
    /// Binds an ephemeral port; returns it, or -1.
    int bind_any_port();
    bool listen_after_bind();
    void stop();

private:
    void install_routes();

    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    ServiceConfig config_;
    std::shared_ptr<GeocoderClient> external_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace soilfuse
