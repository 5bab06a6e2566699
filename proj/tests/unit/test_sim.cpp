#include "ecosystem_sim.hpp"
#include "error.hpp"
#include "metainfo.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace tg;
using namespace tg::sim;
using nlohmann::json;

namespace {

Errc config_error(const json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("accepted " << j.dump());
    return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("same seed, byte-identical report") {
    auto cfg = oracle::mixed_config(77);
    auto a = report_to_json(run_simulation(cfg)).dump();
    auto b = report_to_json(run_simulation(cfg)).dump();
    CHECK(a == b);
    cfg.rng_seed = 78;
    CHECK(report_to_json(run_simulation(cfg)).dump() != a);
}

TEST_CASE("changing one population leaves the others' draws alone") {
    auto cfg = oracle::mixed_config(5);
    auto base = run_simulation(cfg);
    cfg.legit.count += 3;
    auto more = run_simulation(cfg);
    auto fakes = [](const SimReport& r) {
        std::vector<std::pair<std::string, Timestamp>> out;
        for (auto& t : r.torrents)
            if (t.fake()) out.emplace_back(t.infohash.hex(), t.published_at);
        return out;
    };
    CHECK(fakes(base) == fakes(more));
}

TEST_CASE("no fake publishers, nothing flagged") {
    auto r = run_simulation(oracle::legit_only_config(3));
    CHECK(r.aggregates.fake_torrents == 0);
    CHECK(r.aggregates.legit_torrents > 0);
    CHECK(r.aggregates.false_positives == 0);
    CHECK(r.blacklists.fake_ips.empty());
    CHECK(r.blacklists.fake_infohashes.empty());
    for (auto& t : r.torrents) CHECK(t.classification == Classification::unknown);
}

TEST_CASE("policy accounting matches a brute-force recount") {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto r = run_simulation(oracle::mixed_config(seed));
        auto p = evaluate_policies(r);
        auto brute = oracle::recount_policies(r);
        REQUIRE(p.per_torrent.size() == brute.size());
        std::size_t a = 0, b = 0, n = 0, total = 0;
        for (std::size_t i = 0; i < brute.size(); ++i) {
            CHECK(p.per_torrent[i].avoided_before_removal == brute[i].a);
            CHECK(p.per_torrent[i].avoided_after_removal == brute[i].b);
            CHECK(p.per_torrent[i].not_avoided == brute[i].not_avoided);
            CHECK(p.per_torrent[i].total == brute[i].total);
            a += brute[i].a;
            b += brute[i].b;
            n += brute[i].not_avoided;
            total += brute[i].total;
        }
        CHECK(p.avoided_before_removal == a);
        CHECK(p.avoided_after_removal == b);
        CHECK(p.avoided_total == a + b);
        CHECK(p.not_avoided == n);
        CHECK(p.total_fake_downloads == total);
        CHECK(a + b + n == total);
        CHECK(total > 0);
        CHECK(r.aggregates.prevented_downloads_vs_portal == a);
        CHECK(r.aggregates.prevented_downloads_post_removal == b);
    }
}

TEST_CASE("report events replay to the reported blacklists") {
    auto r = run_simulation(oracle::mixed_config(9));
    Engine e({r.config.threshold, r.config.retroactive});
    for (auto& ev : r.events) e.ingest(ev);
    CHECK(e.export_blacklists() == r.blacklists);
    for (auto& t : r.torrents) CHECK(e.query_verdict(t.infohash).classification == t.classification);
}

TEST_CASE("config validation") {
    auto good = config_to_json(oracle::mixed_config(1));
    CHECK(config_to_json(config_from_json(good)) == good);

    auto bad = good;
    bad["unexpected"] = 1;
    CHECK(config_error(bad) == Errc::invalid_config);
    bad = good;
    bad["threshold"] = 0;
    CHECK(config_error(bad) == Errc::invalid_config);
    bad = good;
    bad["duration_s"] = -5;
    CHECK(config_error(bad) == Errc::invalid_config);
    bad = good;
    bad["seeder_resolution_probability"] = 1.5;
    CHECK(config_error(bad) == Errc::invalid_config);
    bad = good;
    bad["burst"]["accounts_per_day"] = "four";
    CHECK(config_error(bad) == Errc::invalid_config);
    bad = good;
    bad["conservative"]["torrents_per_account_min"] = 3;
    bad["conservative"]["torrents_per_account_max"] = 2;
    CHECK(config_error(bad) == Errc::invalid_config);
    CHECK(config_error(json::array()) == Errc::invalid_config);
}

TEST_CASE("simulated portal") {
    auto report = std::make_shared<const SimReport>(run_simulation(oracle::mixed_config(4)));
    SimulatedPortal portal(report);
    const TorrentOutcome* removed = nullptr;
    for (auto& t : report->torrents)
        if (t.fake() && t.removed_at) {
            removed = &t;
            break;
        }
    REQUIRE(removed);

    portal.set_now(removed->published_at);
    auto feed = parse_feed(portal.fetch_feed().body);
    bool listed = false;
    for (auto& e : feed.entries) listed |= e.link.find(removed->infohash.hex()) != std::string::npos;
    CHECK(listed);
    CHECK(portal.fetch_user_page(removed->username).status == 200);

    portal.set_now(*removed->removed_at);
    CHECK(portal.fetch_user_page(removed->username).status == 404);

    auto announce_url = std::string(SimulatedPortal::tracker_url) + "?info_hash=" +
                        percent_encode(removed->infohash.bytes()) + "&peer_id=x&port=1";
    portal.set_now(removed->published_at);
    auto a = portal.announce(announce_url);
    CHECK(a.status == 200);
    CHECK(parse_announce_response(a.body) == removed->birth_announce);

    auto bf = portal.bitfield(removed->infohash, {removed->ip, removed->port});
    REQUIRE(bf);
    CHECK(wire::completion(*bf).is_seeder);
    CHECK_FALSE(portal.bitfield(removed->infohash, {"203.0.113.250", 1}));
}

}
