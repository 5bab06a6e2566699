#include "fixture_oracle.hpp"
#include "metainfo.hpp"
#include "oracles.hpp"
#include "verdict_service.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

using namespace tg;
using nlohmann::json;

namespace {

const std::string small_torrent = "torrents/single_small.torrent";

std::shared_ptr<SharedEngine> flagged_engine() {
    auto h = *InfoHash::from_hex(fixture_oracle::torrents[0].infohash);
    Engine e({1, true});
    e.ingest({1, TorrentPublished{h, "small", "mallory", "test", 100}});
    e.ingest({2, SeederResolved{h, PeerEndpoint{"192.0.2.50", 6881}, {}, 101}});
    e.ingest({3, AccountRemoved{"mallory", 200}});
    e.ingest({4, TorrentPublished{compute_infohash("clean"), "clean", "honest", "test", 300}});
    return std::make_shared<SharedEngine>(std::move(e));
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("routes and error statuses") {
    auto engine = flagged_engine();
    ServiceConfig cfg;
    cfg.max_body_bytes = 1024;
    VerdictService svc(engine, cfg);
    std::string hex(fixture_oracle::torrents[0].infohash);

    auto r = svc.handle({"GET", "/v1/verdict/" + hex, ""});
    CHECK(r.status == 200);
    auto j = json::parse(r.body);
    CHECK(j["classification"] == "fake_by_account_removal");
    CHECK(j["publisher_username"] == "mallory");
    CHECK(j["publisher_ip"] == "192.0.2.50");
    CHECK(j["flagged_at"] == "1970-01-01T00:03:20Z");

    auto upper = svc.handle({"GET", "/v1/verdict/" + std::string(40, 'A'), ""});
    CHECK(upper.status == 200);
    CHECK(json::parse(upper.body)["classification"] == "unknown");

    CHECK(svc.handle({"GET", "/v1/verdict/xyz", ""}).status == 400);
    CHECK(svc.handle({"POST", "/v1/verdict/" + hex, ""}).status == 405);
    CHECK(svc.handle({"GET", "/v1/check", ""}).status == 405);
    CHECK(svc.handle({"POST", "/v1/check", "hello"}).status == 400);
    CHECK(svc.handle({"POST", "/v1/check", "d4:infoe"}).status == 400);
    CHECK(svc.handle({"POST", "/v1/check", std::string(1025, 'd')}).status == 413);
    CHECK(svc.handle({"GET", "/v2/anything", ""}).status == 404);
    CHECK(svc.handle({"DELETE", "/v1/blacklist/ips", ""}).status == 405);

    auto by_file = svc.handle({"POST", "/v1/check", oracle::read_file(oracle::fixture_dir() / small_torrent)});
    CHECK(by_file.status == 200);
    CHECK(json::parse(by_file.body)["classification"] == "fake_by_account_removal");
    auto by_magnet = svc.handle({"POST", "/v1/check", "magnet:?xt=urn:btih:" + hex + "\n"});
    CHECK(json::parse(by_magnet.body)["infohash"] == hex);
}

TEST_CASE("blacklists are byte-identical to the export and reads do not change state") {
    auto engine = flagged_engine();
    VerdictService svc(engine);
    auto before = engine->read([](const Engine& e) { return e.state_hash(); });
    auto b = engine->read([](const Engine& e) { return e.export_blacklists(); });

    auto ips = svc.handle({"GET", "/v1/blacklist/ips", ""});
    CHECK(ips.content_type == "text/plain");
    CHECK(ips.body == format_ip_blacklist(b));
    CHECK(ips.body == "192.0.2.50\n");
    auto hashes = svc.handle({"GET", "/v1/blacklist/infohashes", ""});
    CHECK(hashes.body == format_infohash_blacklist(b));
    for (int i = 0; i < 50; ++i) svc.handle({"GET", "/v1/verdict/" + std::string(40, '0'), ""});
    CHECK(engine->read([](const Engine& e) { return e.state_hash(); }) == before);
}

TEST_CASE("over a real socket") {
    auto engine = flagged_engine();
    ServiceConfig cfg;
    cfg.max_body_bytes = 4096;
    auto svc = std::make_shared<VerdictService>(engine, cfg);
    HttpServer server(svc);
    int port = server.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    CHECK(server.running());

    httplib::Client cli("127.0.0.1", port);
    auto hex = std::string(fixture_oracle::torrents[0].infohash);
    auto r = cli.Get("/v1/verdict/" + hex);
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type").find("application/json") == 0);
    CHECK(json::parse(r->body)["classification"] == "fake_by_account_removal");

    auto ips = cli.Get("/v1/blacklist/ips");
    REQUIRE(ips);
    CHECK(ips->body == "192.0.2.50\n");
    CHECK(ips->get_header_value("Content-Type").find("text/plain") == 0);

    auto big = cli.Post("/v1/check", std::string(5000, 'd'), "application/octet-stream");
    REQUIRE(big);
    CHECK(big->status == 413);
    auto put = cli.Put("/v1/check", "x", "text/plain");
    REQUIRE(put);
    CHECK(put->status == 405);
    auto missing = cli.Get("/nothing-here");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    server.stop();
    CHECK_FALSE(server.running());
}

}
