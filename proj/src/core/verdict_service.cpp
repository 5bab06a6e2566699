#include "verdict_service.hpp"

#include "error.hpp"
#include "metainfo.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace tg {

using nlohmann::json;

namespace {

HttpResponse error_response(int status, const std::string& error, const std::string& detail) {
    return {status, "application/json", json{{"error", error}, {"detail", detail}}.dump()};
}

std::string trim_ws(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

json verdict_to_json(const Verdict& v) {
    json j;
    j["infohash"] = v.infohash.hex();
    j["classification"] = to_string(v.classification);
    j["reason"] = v.reason;
    j["flagged_at"] = v.flagged_at ? json(format_iso8601(*v.flagged_at)) : json(nullptr);
    j["publisher_username"] = v.publisher_username ? json(*v.publisher_username) : json(nullptr);
    j["publisher_ip"] = v.publisher_ip ? json(*v.publisher_ip) : json(nullptr);
    return j;
}

VerdictService::VerdictService(std::shared_ptr<const SharedEngine> engine, ServiceConfig config)
    : engine_(std::move(engine)), config_(config) {}

HttpResponse VerdictService::verdict_for(const InfoHash& h) const {
    Verdict v = engine_->read([&](const Engine& e) { return e.query_verdict(h); });
    return {200, "application/json", verdict_to_json(v).dump(-1, ' ', false, json::error_handler_t::replace)};
}

HttpResponse VerdictService::handle(const HttpRequest& req) const {
    constexpr std::string_view verdict_prefix = "/v1/verdict/";
    const std::string& path = req.path;

    if (path.rfind(verdict_prefix, 0) == 0) {
        if (req.method != "GET") return error_response(405, "MethodNotAllowed", "use GET");
        std::string_view hex = std::string_view(path).substr(verdict_prefix.size());
        auto h = InfoHash::from_hex(hex);
        if (!h) return error_response(400, "BadInfohash", "expected 40 hexadecimal characters");
        return verdict_for(*h);
    }
    if (path == "/v1/check") {
        if (req.method != "POST") return error_response(405, "MethodNotAllowed", "use POST");
        if (req.body.size() > config_.max_body_bytes)
            return error_response(413, "TooLarge",
                                  "body exceeds " + std::to_string(config_.max_body_bytes) + " bytes");
        try {
            if (!req.body.empty() && req.body.front() == 'd') return verdict_for(parse_torrent(req.body).infohash);
            std::string text = trim_ws(req.body);
            if (text.rfind("magnet:", 0) == 0) return verdict_for(parse_magnet(text).infohash);
        } catch (const Error& e) {
            return error_response(400, "Unparseable", std::string(errc_name(e.code())) + ": " + e.what());
        }
        return error_response(400, "Unparseable", "body is neither a .torrent file nor a magnet URI");
    }
    if (path == "/v1/blacklist/infohashes" || path == "/v1/blacklist/ips") {
        if (req.method != "GET") return error_response(405, "MethodNotAllowed", "use GET");
        bool ips = path.ends_with("/ips");
        std::string body = engine_->read([&](const Engine& e) {
            auto b = e.export_blacklists();
            return ips ? format_ip_blacklist(b) : format_infohash_blacklist(b);
        });
        return {200, "text/plain", std::move(body)};
    }
    return error_response(404, "NotFound", "no route for " + path);
}

HttpServer::HttpServer(std::shared_ptr<const VerdictService> service, std::string static_dir)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
    auto dispatch = [svc = service_](const httplib::Request& req, httplib::Response& res) {
        auto r = svc->handle({req.method, req.path, req.body});
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server_->Get("/v1/.*", dispatch);
    server_->Post("/v1/.*", dispatch);
    server_->Put("/v1/.*", dispatch);
    server_->Delete("/v1/.*", dispatch);
    if (!static_dir.empty()) server_->set_mount_point("/", static_dir);
    // Let the handler own the size check; httplib only guards against abuse.
    server_->set_payload_max_length(64 * 1024 * 1024);
    server_->set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        std::string error = res.status == 413 ? "TooLarge" : res.status == 404 ? "NotFound" : "HttpError";
        res.set_content(json{{"error", error}, {"detail", "HTTP " + std::to_string(res.status) + " for " + req.path}}.dump(),
                        "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) fail(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

bool HttpServer::running() const { return server_ && server_->is_running(); }

}  // namespace tg
