#include "detection_core.hpp"
#include "error.hpp"
#include "metainfo.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace tg;

namespace {

// Builds logs with ascending sequence numbers.
struct Script {
    std::vector<DetectionEvent> events;
    std::uint64_t seq = 0;

    InfoHash publish(const std::string& tag, const std::string& user, Timestamp t) {
        auto h = compute_infohash(tag);
        events.push_back({++seq, TorrentPublished{h, tag, user, "test", t}});
        return h;
    }
    void resolve(const InfoHash& h, const std::string& ip, Timestamp t) {
        events.push_back({++seq, SeederResolved{h, PeerEndpoint{ip, 6881}, {}, t}});
    }
    void remove(const std::string& user, Timestamp t) { events.push_back({++seq, AccountRemoved{user, t}}); }

    Engine run(EngineConfig cfg) const {
        Engine e(cfg);
        for (auto& ev : events) e.ingest(ev);
        return e;
    }
};

Errc ingest_error(Engine& e, const DetectionEvent& ev) {
    try {
        e.ingest(ev);
    } catch (const Error& err) {
        return err.code();
    }
    FAIL("accepted");
    return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("an IP turns fake exactly at the K-th removed account") {
    for (unsigned k : {1u, 2u, 3u, 5u}) {
        CAPTURE(k);
        Script s;
        Timestamp t = 100;
        std::vector<InfoHash> hashes;
        for (unsigned i = 0; i < k; ++i) {
            std::string user = "u" + std::to_string(i);
            auto h = s.publish("k" + std::to_string(k) + "-" + std::to_string(i), user, t++);
            hashes.push_back(h);
            s.resolve(h, "192.0.2.1", t++);
            s.remove(user, t++);

            Engine e = s.run({k, true});
            const auto& ip = e.ips().at("192.0.2.1");
            CHECK(ip.removed_accounts() == i + 1);
            if (i + 1 < k) {
                CHECK(ip.state == IpState::potential);
                CHECK(e.export_blacklists().fake_ips.empty());
            } else {
                CHECK(ip.state == IpState::fake);
                CHECK(ip.fake_since == t - 1);
                CHECK(e.export_blacklists().fake_ips == std::vector<std::string>{"192.0.2.1"});
            }
        }
        // Every torrent was flagged by its own account removal.
        Engine e = s.run({k, true});
        for (auto& h : hashes) CHECK(e.query_verdict(h).classification == Classification::fake_by_account_removal);
    }
}

TEST_CASE("at-birth with zero delay and retroactive flagging") {
    Script s;
    auto old = s.publish("old", "clean-name", 10);
    s.resolve(old, "192.0.2.9", 11);
    auto a = s.publish("a", "burner", 12);
    s.resolve(a, "192.0.2.9", 12);
    s.remove("burner", 13);  // K=1: 192.0.2.9 turns fake at 13
    auto fresh = s.publish("fresh", "next", 13);
    s.resolve(fresh, "192.0.2.9", 13);

    Engine e = s.run({1, true});
    CHECK(e.query_verdict(a).classification == Classification::fake_by_account_removal);
    auto vo = e.query_verdict(old);
    CHECK(vo.classification == Classification::fake_retroactive);
    CHECK(vo.flagged_at == 13);
    auto vf = e.query_verdict(fresh);
    CHECK(vf.classification == Classification::fake_at_birth);
    CHECK(vf.flagged_at == 13);
    CHECK(vf.publisher_ip == "192.0.2.9");
    CHECK(vf.publisher_username == "next");

    Engine no_retro = s.run({1, false});
    CHECK(no_retro.query_verdict(old).classification == Classification::unknown);
    CHECK(no_retro.query_verdict(fresh).classification == Classification::fake_at_birth);
}

TEST_CASE("removal before resolution still counts once resolved") {
    Script s;
    auto h = s.publish("late", "ghost", 1);
    s.remove("ghost", 2);
    s.resolve(h, "192.0.2.3", 3);
    Engine e = s.run({1, true});
    CHECK(e.ips().at("192.0.2.3").state == IpState::fake);
    CHECK(e.ips().at("192.0.2.3").fake_since == 3);
    CHECK(e.query_verdict(h).classification == Classification::fake_by_account_removal);
}

TEST_CASE("first resolution wins and classifications are terminal") {
    Script s;
    auto h = s.publish("x", "u", 1);
    s.resolve(h, "192.0.2.1", 2);
    s.resolve(h, "192.0.2.2", 3);
    s.remove("u", 4);
    s.remove("u", 5);
    Engine e = s.run({1, true});
    CHECK(e.torrents().at(h).ip == "192.0.2.1");
    CHECK(e.ips().count("192.0.2.2") == 0);
    CHECK(e.query_verdict(h).flagged_at == 4);
    CHECK(e.publishers().at("u").removed_at == 4);
}

TEST_CASE("verdict reasons") {
    Script s;
    auto h = s.publish("r", "u", 1);
    Engine e = s.run({3, true});
    auto unknown = e.query_verdict(compute_infohash("never seen"));
    CHECK(unknown.classification == Classification::unknown);
    CHECK_FALSE(unknown.reason.empty());
    CHECK_FALSE(unknown.publisher_username);
    auto v = e.query_verdict(h);
    CHECK(v.publisher_username == "u");
    CHECK_FALSE(v.flagged_at);
    CHECK(v.reason != unknown.reason);
}

TEST_CASE("ingest errors leave state untouched") {
    Script s;
    auto h = s.publish("e", "u", 100);
    Engine e = s.run({3, true});
    auto before = e.state_hash();
    CHECK(ingest_error(e, {1, AccountRemoved{"u", 200}}) == Errc::out_of_order);
    CHECK(ingest_error(e, {2, SeederResolved{compute_infohash("nope"), PeerEndpoint{"192.0.2.1", 1}, {}, 200}}) ==
          Errc::unknown_torrent);
    e.ingest({2, SwarmSampled{h, {{"172.16.0.1", 1}}, 300}});
    before = e.state_hash();
    CHECK(ingest_error(e, {3, SwarmSampled{h, {{"172.16.0.2", 1}}, 299}}) == Errc::time_regression);
    CHECK(e.state_hash() == before);
    CHECK(e.last_seq() == 2);
}

TEST_CASE("threshold zero is rejected") {
    try {
        Engine e(EngineConfig{0, true});
        FAIL("accepted");
    } catch (const Error& err) {
        CHECK(err.code() == Errc::zero_threshold);
    }
}

TEST_CASE("1,000 random logs agree with the from-scratch oracle after every prefix") {
    std::mt19937_64 rng(2011);
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        oracle::LogShape shape;
        shape.events = 20 + rng() % 60;
        shape.usernames = 2 + rng() % 8;
        shape.ips = 1 + rng() % 5;
        shape.infohashes = 3 + rng() % 20;
        auto log = oracle::random_log(rng, shape);
        EngineConfig cfg{static_cast<unsigned>(1 + rng() % 4), trial % 3 != 0};
        Engine e(cfg);
        for (std::size_t n = 1; n <= log.size(); ++n) {
            e.ingest(log[n - 1]);
            std::vector<DetectionEvent> prefix(log.begin(), log.begin() + static_cast<std::ptrdiff_t>(n));
            auto diff = oracle::compare(e, oracle::from_scratch(prefix, cfg));
            if (!diff.empty()) {
                FAIL_CHECK("trial " << trial << " prefix " << n << ": " << diff);
                break;
            }
            ++checked;
        }
    }
    CHECK(checked > 20000);
}

TEST_CASE("state survives a JSON round trip") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto log = oracle::random_log(rng);
        Engine e({2, true});
        for (auto& ev : log) e.ingest(ev);
        auto j = e.to_json();
        Engine back = Engine::from_json(j);
        CHECK(back.to_json() == j);
        CHECK(back.state_hash() == e.state_hash());
        CHECK(back.export_blacklists() == e.export_blacklists());
    }
}

TEST_CASE("blacklist formats") {
    Blacklists b;
    b.fake_infohashes = {*InfoHash::from_hex(std::string(40, 'a')), *InfoHash::from_hex(std::string(40, 'b'))};
    b.fake_ips = {"9.0.0.1", "10.0.0.1"};
    CHECK(format_infohash_blacklist(b) == std::string(40, 'a') + "\n" + std::string(40, 'b') + "\n");
    CHECK(format_ip_blacklist(b) == "9.0.0.1\n10.0.0.1\n");
    CHECK(format_ip_blacklist({}).empty());
}

}
