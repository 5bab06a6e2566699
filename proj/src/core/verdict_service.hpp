#pragma once

#include "detection_core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <atomic>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace tg {

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ServiceConfig {
    std::size_t max_body_bytes = 8 * 1024 * 1024;
};

/// JSON body of a verdict; field names are the wire contract.
nlohmann::json verdict_to_json(const Verdict& v);

/// Read-only HTTP API over the detection state:
///   GET  /v1/verdict/{40-hex}
///   POST /v1/check                 body: .torrent bytes or a magnet URI
///   GET  /v1/blacklist/infohashes  text/plain
///   GET  /v1/blacklist/ips         text/plain
class VerdictService {
public:
    VerdictService(std::shared_ptr<const SharedEngine> engine, ServiceConfig config = {});

    HttpResponse handle(const HttpRequest& request) const;

private:
    HttpResponse verdict_for(const InfoHash& h) const;

    std::shared_ptr<const SharedEngine> engine_;
    ServiceConfig config_;
};

/// Runs a VerdictService on a background thread.
class HttpServer {
public:
    explicit HttpServer(std::shared_ptr<const VerdictService> service, std::string static_dir = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving; port 0 picks an ephemeral port. Returns the bound port.
    int start(const std::string& host, int port);
    void stop();
    bool running() const;

private:
    std::shared_ptr<const VerdictService> service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace tg
