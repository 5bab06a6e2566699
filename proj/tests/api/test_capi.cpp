#include "fixture_oracle.hpp"

#include <torrentguard.h>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tg-capi-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

struct Buffer {
    char* p = nullptr;
    ~Buffer() { tg_buffer_free(p); }
    std::string str() const { return p ? p : ""; }
};

using EnginePtr = std::unique_ptr<tg_engine, decltype(&tg_engine_close)>;
using VerdictPtr = std::unique_ptr<tg_verdict, decltype(&tg_verdict_free)>;

EnginePtr open_engine(const fs::path& dir, unsigned k, bool writable) {
    tg_engine_options o{k, 0, writable ? 1 : 0, 1};
    tg_engine* e = nullptr;
    REQUIRE(tg_engine_open(dir.c_str(), &o, &e) == TG_OK);
    return {e, &tg_engine_close};
}

VerdictPtr check_hex(const tg_engine* e, std::string_view hex) {
    tg_verdict* v = nullptr;
    REQUIRE(tg_engine_check_hex(e, std::string(hex).c_str(), &v) == TG_OK);
    return {v, &tg_verdict_free};
}

std::string record(const std::string& type, json fields) {
    fields["seq"] = 0;
    fields["type"] = type;
    fields["v"] = 1;
    return fields.dump();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Publishes the first fixture torrent from a burner account that is then removed.
void seed_fake(tg_engine* e) {
    std::string hex(fixture_oracle::torrents[0].infohash);
    uint64_t seq = 0;
    REQUIRE(tg_engine_append_event(e, record("torrent_published", {{"infohash", hex}, {"title", "t"}, {"username", "burner"},
                                                                   {"portal", "test"}, {"at", 100}}).c_str(),
                                   &seq) == TG_OK);
    CHECK(seq == 1);
    REQUIRE(tg_engine_append_event(e, record("seeder_resolved", {{"infohash", hex}, {"ip", "192.0.2.77"}, {"port", 6881}, {"at", 101}}).c_str(),
                                   &seq) == TG_OK);
    REQUIRE(tg_engine_append_event(e, record("account_removed", {{"username", "burner"}, {"at", 200}}).c_str(), &seq) ==
            TG_OK);
    CHECK(seq == 3);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status strings and errors") {
    CHECK(std::string(tg_version()).size() > 0);
    CHECK(std::string(tg_status_string(TG_OK)) == "Ok");
    CHECK(std::string(tg_status_string(TG_ERR_MALFORMED)) == "Malformed");
    tg_engine* e = nullptr;
    CHECK(tg_engine_open(nullptr, nullptr, &e) == TG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(tg_last_error_message()).size() > 0);
    tg_engine_options zero{0, 0, 0, 0};
    TempDir dir;
    REQUIRE(tg_engine_open(dir.path.c_str(), &zero, &e) == TG_OK);  // 0 selects the default
    tg_engine_close(e);
}

TEST_CASE("events, verdicts and blacklists") {
    TempDir dir;
    auto e = open_engine(dir.path, 1, true);
    seed_fake(e.get());

    auto v = check_hex(e.get(), fixture_oracle::torrents[0].infohash);
    CHECK(std::string(tg_verdict_classification(v.get())) == "fake_by_account_removal");
    CHECK(tg_verdict_is_fake(v.get()));
    CHECK(std::string(tg_verdict_publisher_username(v.get())) == "burner");
    CHECK(std::string(tg_verdict_publisher_ip(v.get())) == "192.0.2.77");
    int64_t at = 0;
    CHECK(tg_verdict_flagged_at(v.get(), &at) == 1);
    CHECK(at == 200);
    Buffer j;
    REQUIRE(tg_verdict_to_json(v.get(), &j.p) == TG_OK);
    CHECK(json::parse(j.str())["classification"] == "fake_by_account_removal");

    auto u = check_hex(e.get(), std::string(40, '0'));
    CHECK(std::string(tg_verdict_classification(u.get())) == "unknown");
    CHECK(tg_verdict_publisher_ip(u.get()) == nullptr);
    CHECK(tg_verdict_flagged_at(u.get(), &at) == 0);

    tg_verdict* raw = nullptr;
    CHECK(tg_engine_check_hex(e.get(), "xyz", &raw) == TG_ERR_BAD_LENGTH);
    CHECK(tg_engine_check_magnet(e.get(), "http://nope", &raw) != TG_OK);
    CHECK(tg_engine_check_torrent(e.get(), "d4:infoe", 8, &raw) != TG_OK);
    CHECK(raw == nullptr);

    auto torrent = slurp(fs::path(TG_FIXTURE_DIR) / fixture_oracle::torrents[0].file);
    REQUIRE(tg_engine_check_torrent(e.get(), torrent.data(), torrent.size(), &raw) == TG_OK);
    CHECK(tg_verdict_is_fake(raw));
    tg_verdict_free(raw);
    std::string magnet = "magnet:?xt=urn:btih:" + std::string(fixture_oracle::first_base32);
    REQUIRE(tg_engine_check_magnet(e.get(), magnet.c_str(), &raw) == TG_OK);
    CHECK(std::string(tg_verdict_infohash(raw)) == fixture_oracle::torrents[0].infohash);
    tg_verdict_free(raw);

    Buffer ips, hashes;
    size_t n = 0;
    REQUIRE(tg_engine_export_blacklist(e.get(), TG_BLACKLIST_IPS, &ips.p, &n) == TG_OK);
    CHECK(ips.str() == "192.0.2.77\n");
    CHECK(n == ips.str().size());
    REQUIRE(tg_engine_export_blacklist(e.get(), TG_BLACKLIST_INFOHASHES, &hashes.p, nullptr) == TG_OK);
    CHECK(hashes.str() == std::string(fixture_oracle::torrents[0].infohash) + "\n");

    uint64_t seq = 0;
    CHECK(tg_engine_append_event(e.get(), "{not json", &seq) == TG_ERR_MALFORMED);
    CHECK(tg_engine_append_event(e.get(), record("seeder_resolved", {{"infohash", std::string(40, 'e')}, {"ip", "192.0.2.1"}, {"port", 1}, {"at", 300}}).c_str(), &seq) ==
          TG_ERR_UNKNOWN_TORRENT);
    CHECK(tg_engine_last_seq(e.get()) == 3);

    Buffer stats;
    REQUIRE(tg_engine_stats_json(e.get(), &stats.p) == TG_OK);
    auto s = json::parse(stats.str());
    CHECK(s["last_seq"] == 3);
    CHECK(s["threshold"] == 1);
}

TEST_CASE("state persists across reopen and snapshot") {
    TempDir dir;
    Buffer h1, h2, h3;
    {
        auto e = open_engine(dir.path, 1, true);
        seed_fake(e.get());
        REQUIRE(tg_engine_state_hash(e.get(), &h1.p) == TG_OK);
        REQUIRE(tg_engine_snapshot(e.get()) == TG_OK);
    }
    CHECK(fs::exists(dir.path / "snapshot.json"));
    CHECK(fs::exists(dir.path / "events.jsonl"));
    {
        auto e = open_engine(dir.path, 1, false);
        REQUIRE(tg_engine_state_hash(e.get(), &h2.p) == TG_OK);
        uint64_t seq = 0;
        CHECK(tg_engine_append_event(e.get(), record("account_removed", {{"username", "x"}, {"at", 300}}).c_str(), &seq) ==
              TG_ERR_READ_ONLY);
        tg_monitor* m = nullptr;
        tg_monitor_options mo{};
        mo.adapter = TG_ADAPTER_SIMULATOR;
        CHECK(tg_monitor_create(e.get(), &mo, &m) == TG_ERR_READ_ONLY);
    }
    fs::remove(dir.path / "snapshot.json");
    {
        auto e = open_engine(dir.path, 1, false);
        REQUIRE(tg_engine_state_hash(e.get(), &h3.p) == TG_OK);
    }
    CHECK(h1.str() == h2.str());
    CHECK(h1.str() == h3.str());
}

TEST_CASE("a reader follows a separate writer through the log") {
    TempDir dir;
    auto writer = open_engine(dir.path, 1, true);
    auto reader = open_engine(dir.path, 1, false);
    CHECK(tg_engine_last_seq(reader.get()) == 0);
    seed_fake(writer.get());
    size_t applied = 0;
    REQUIRE(tg_engine_refresh(reader.get(), &applied) == TG_OK);
    CHECK(applied == 3);
    auto v = check_hex(reader.get(), fixture_oracle::torrents[0].infohash);
    CHECK(tg_verdict_is_fake(v.get()));
    REQUIRE(tg_engine_refresh(reader.get(), &applied) == TG_OK);
    CHECK(applied == 0);
}

TEST_CASE("http server over the engine") {
    TempDir dir;
    auto e = open_engine(dir.path, 1, true);
    seed_fake(e.get());
    tg_server_options so{"127.0.0.1", 0, 1024, nullptr, 0};
    tg_server* server = nullptr;
    REQUIRE(tg_server_start(e.get(), &so, &server) == TG_OK);
    int port = tg_server_port(server);
    REQUIRE(port > 0);

    httplib::Client cli("127.0.0.1", port);
    auto r = cli.Get("/v1/verdict/" + std::string(fixture_oracle::torrents[0].infohash));
    REQUIRE(r);
    CHECK(json::parse(r->body)["classification"] == "fake_by_account_removal");
    Buffer ips;
    REQUIRE(tg_engine_export_blacklist(e.get(), TG_BLACKLIST_IPS, &ips.p, nullptr) == TG_OK);
    auto b = cli.Get("/v1/blacklist/ips");
    REQUIRE(b);
    CHECK(b->body == ips.str());
    auto big = cli.Post("/v1/check", std::string(2048, 'd'), "application/octet-stream");
    REQUIRE(big);
    CHECK(big->status == 413);
    tg_server_stop(server);
}

TEST_CASE("fixture monitor through the C API") {
    TempDir dir;
    auto e = open_engine(dir.path, 1, true);
    tg_monitor_options mo{};
    mo.adapter = TG_ADAPTER_FIXTURE;
    std::string fixture = (fs::path(TG_FIXTURE_DIR) / "portal").string();
    mo.fixture_dir = fixture.c_str();
    tg_monitor* m = nullptr;
    REQUIRE(tg_monitor_create(e.get(), &mo, &m) == TG_OK);
    tg_tick_summary s{};
    REQUIRE(tg_monitor_tick(m, 1300020000, &s) == TG_OK);
    CHECK(s.published == 3);
    CHECK(s.removed == 1);
    CHECK(s.flagged == 2);
    Buffer w;
    REQUIRE(tg_monitor_take_warnings(m, &w.p) == TG_OK);
    CHECK_FALSE(w.str().empty());
    int64_t a = 0, b = 0;
    CHECK(tg_monitor_sim_window(m, &a, &b) != TG_OK);
    tg_monitor_free(m);

    auto alice = check_hex(e.get(), fixture_oracle::alice_infohash);
    CHECK(std::string(tg_verdict_classification(alice.get())) == "fake_retroactive");

    mo.fixture_dir = "/definitely/not/here";
    CHECK(tg_monitor_create(e.get(), &mo, &m) == TG_ERR_INVALID_CONFIG);
}

TEST_CASE("simulator monitor and simulate") {
    TempDir dir;
    auto e = open_engine(dir.path, 3, true);
    json cfg = {{"duration_s", 86400},
                {"burst", {{"count", 2}}},
                {"conservative", {{"count", 2}}},
                {"legit", {{"count", 3}}}};
    std::string text = cfg.dump();
    tg_monitor_options mo{};
    mo.adapter = TG_ADAPTER_SIMULATOR;
    mo.sim_config_json = text.c_str();
    mo.sim_seed = 12;
    mo.has_sim_seed = 1;
    tg_monitor* m = nullptr;
    REQUIRE(tg_monitor_create(e.get(), &mo, &m) == TG_OK);
    int64_t start = 0, end = 0;
    REQUIRE(tg_monitor_sim_window(m, &start, &end) == TG_OK);
    CHECK(end - start == 86400);
    tg_tick_summary s{};
    REQUIRE(tg_monitor_run_simulated(m, 60, &s) == TG_OK);
    CHECK(s.published > 0);
    tg_monitor_free(m);

    uint64_t seed = 12;
    Buffer r1, r2, summary;
    REQUIRE(tg_simulate(text.c_str(), &seed, &r1.p, &summary.p) == TG_OK);
    REQUIRE(tg_simulate(text.c_str(), &seed, &r2.p, nullptr) == TG_OK);
    CHECK(r1.str() == r2.str());
    CHECK_FALSE(summary.str().empty());
    auto report = json::parse(r1.str());
    CHECK(report["aggregates"]["fake_torrents"].get<int>() > 0);

    CHECK(tg_simulate("{\"nope\": 1}", nullptr, nullptr, nullptr) == TG_ERR_INVALID_CONFIG);
    CHECK(tg_simulate("{broken", nullptr, nullptr, nullptr) == TG_ERR_INVALID_CONFIG);
}

TEST_CASE("countermeasure cost") {
    double day = 0, month = 0;
    REQUIRE(tg_countermeasure_cost(4, 3, &day, &month) == TG_OK);
    CHECK(day == 4.0 / 3.0);
    CHECK(month == doctest::Approx(40.0));
    CHECK(tg_countermeasure_cost(4, 0, &day, &month) == TG_ERR_ZERO_THRESHOLD);
}

}
