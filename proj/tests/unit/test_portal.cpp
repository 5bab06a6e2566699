#include "error.hpp"
#include "fixture_oracle.hpp"
#include "oracles.hpp"
#include "portal_monitor.hpp"

#include <doctest.h>

using namespace tg;

namespace {

class CannedPortal : public PortalAdapter {
public:
    FetchResult feed{true, 200, "<rss><channel></channel></rss>", {}};
    std::map<std::string, FetchResult> pages;
    int feed_fetches = 0;
    int page_fetches = 0;

    FetchResult fetch_feed() override {
        ++feed_fetches;
        return feed;
    }
    FetchResult fetch_user_page(const std::string& u) override {
        ++page_fetches;
        auto it = pages.find(u);
        return it == pages.end() ? FetchResult{true, 404, "", {}} : it->second;
    }
    FetchResult fetch_torrent(const std::string&) override { return {true, 404, "", {}}; }
    std::string portal_id() const override { return "canned"; }
};

std::string rss_item(const std::string& user, const std::string& hex) {
    return "<item><title>t " + hex.substr(0, 4) + "</title><link>magnet:?xt=urn:btih:" + hex +
           "</link><dc:creator>" + user + "</dc:creator><pubDate>Sun, 13 Mar 2011 10:00:00 GMT</pubDate></item>";
}

std::string rss(const std::string& items) {
    return "<rss version=\"2.0\" xmlns:dc=\"http://purl.org/dc/elements/1.1/\"><channel>" + items + "</channel></rss>";
}

const std::string h1(40, '1'), h2(40, '2');

}  // namespace

TEST_SUITE("portal") {

TEST_CASE("rss fixture") {
    auto r = parse_feed(oracle::read_file(oracle::fixture_dir() / "feeds/rss.xml"));
    REQUIRE(r.entries.size() == 3);
    CHECK(r.warnings.size() == 1);
    CHECK(r.entries[0].username == "alice");
    CHECK(r.entries[0].link == "http://portal.example/torrents/alice-release.torrent");
    CHECK(r.entries[0].published_at == 1300010400);
    CHECK(r.entries[1].username == "bob");
    CHECK(r.entries[1].link.rfind("magnet:?xt=urn:btih:", 0) == 0);
    CHECK(r.entries[1].published_at == 1300010700);
    CHECK(r.entries[2].username == "carol");
    CHECK(r.entries[2].published_at == 1300011000);
}

TEST_CASE("atom fixture") {
    auto r = parse_feed(oracle::read_file(oracle::fixture_dir() / "feeds/atom.xml"));
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].username == "erin");
    CHECK(r.entries[0].link == "http://portal.example/torrents/erin.torrent");
    CHECK(r.entries[0].published_at == 1300014000);
    CHECK(r.entries[1].username == "frank");
    CHECK(r.entries[1].link.find(std::string(fixture_oracle::dave_infohash)) != std::string::npos);
}

TEST_CASE("rss 1.0") {
    auto r = parse_feed(
        "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" xmlns=\"http://purl.org/rss/1.0/\" "
        "xmlns:dc=\"http://purl.org/dc/elements/1.1/\"><item><title>x</title><link>magnet:?xt=urn:btih:" + h1 +
        "</link><dc:creator>gina</dc:creator><dc:date>2011-03-13T12:00:00Z</dc:date></item></rdf:RDF>");
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].username == "gina");
    CHECK(r.entries[0].published_at == 1300017600);
}

TEST_CASE("malformed xml") {
    try {
        parse_feed("<rss><channel><item></channel>");
        FAIL("parsed");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::malformed_xml);
    }
}

TEST_CASE("rfc822 dates") {
    CHECK(parse_rfc822("Tue, 10 Jun 2003 04:00:00 GMT") == 1055217600);
    CHECK(parse_rfc822("10 Jun 2003 04:00:00 +0200") == 1055210400);
    CHECK(parse_rfc822("Tue, 10 Jun 2003 04:00 EDT") == 1055232000);
    CHECK_FALSE(parse_rfc822("yesterday"));
}

TEST_CASE("account status") {
    CannedPortal p;
    p.pages["on"] = {true, 200, "<div class=\"profile\">x</div>", {}};
    p.pages["banned"] = {true, 200, "<p>This account has been suspended</p>", {}};
    p.pages["err"] = {true, 503, "", {}};
    p.pages["down"] = {false, 0, "", "timeout"};
    AccountMarkers m{{"has been suspended"}, {"class=\"profile\""}};
    CHECK(check_account_status("on", p, m) == AccountStatus::active);
    CHECK(check_account_status("banned", p, m) == AccountStatus::removed);
    CHECK(check_account_status("gone", p, m) == AccountStatus::removed);
    CHECK(check_account_status("err", p, m) == AccountStatus::unknown);
    CHECK(check_account_status("down", p, m) == AccountStatus::unknown);
    p.pages["blank"] = {true, 200, "<html></html>", {}};
    CHECK(check_account_status("blank", p, m) == AccountStatus::unknown);
    CHECK(check_account_status("blank", p, AccountMarkers{}) == AccountStatus::active);
}

TEST_CASE("fixture portal") {
    FixturePortal p(oracle::fixture_dir() / "portal");
    CHECK(p.fetch_feed().status == 200);
    CHECK(p.fetch_user_page("alice").status == 200);
    CHECK(p.fetch_user_page("bob").status == 404);
    CHECK_FALSE(p.fetch_user_page("carol").ok);
    CHECK(p.fetch_user_page("../feed").status != 200);
    auto t = p.fetch_torrent("http://portal.example/torrents/alice-release.torrent");
    CHECK(t.status == 200);
    CHECK(t.body.size() > 100);
}

TEST_CASE("monitor emits each publication and removal once") {
    auto portal = std::make_shared<CannedPortal>();
    portal->feed.body = rss(rss_item("u1", h1));
    portal->pages["u1"] = {true, 200, "<div class=\"profile\"></div>", {}};
    MonitorConfig cfg;
    cfg.feed_interval_s = 60;
    cfg.account_interval_s = 300;
    cfg.markers.profile = {"class=\"profile\""};
    PortalMonitor mon(portal, cfg);

    auto ev = mon.tick(1000);
    REQUIRE(ev.size() == 1);
    auto& pub = std::get<TorrentPublished>(ev[0].body);
    CHECK(pub.username == "u1");
    CHECK(pub.infohash.hex() == h1);
    CHECK(pub.portal == "canned");
    CHECK(mon.source(pub.infohash));

    // Same feed again: nothing new. Feed interval gates polling.
    CHECK(mon.tick(1030).empty());
    CHECK(portal->feed_fetches == 1);
    CHECK(mon.tick(1060).empty());
    CHECK(portal->feed_fetches == 2);

    portal->feed.body = rss(rss_item("u1", h1) + rss_item("u2", h2));
    portal->pages.erase("u1");
    auto ev2 = mon.tick(1300);
    bool published_h2 = false, removed_u1 = false;
    for (auto& e : ev2) {
        if (auto* p = std::get_if<TorrentPublished>(&e.body)) published_h2 |= p->infohash.hex() == h2;
        if (auto* r = std::get_if<AccountRemoved>(&e.body)) {
            removed_u1 |= r->username == "u1";
            CHECK(r->at == 1300);
        }
    }
    CHECK(published_h2);
    CHECK(removed_u1);
    CHECK(mon.status("u1") == AccountStatus::removed);

    for (Timestamp t = 1600; t < 4000; t += 300)
        for (auto& e : mon.tick(t)) CHECK_FALSE(std::holds_alternative<AccountRemoved>(e.body));
}

TEST_CASE("a failing feed is a warning, not an error") {
    auto portal = std::make_shared<CannedPortal>();
    portal->feed = {false, 0, "", "refused"};
    PortalMonitor mon(portal, MonitorConfig{});
    CHECK(mon.tick(0).empty());
    CHECK_FALSE(mon.warnings().empty());
    portal->feed = {true, 200, "<rss><channel><item>", {}};
    mon.clear_warnings();
    CHECK(mon.tick(100).empty());
    CHECK_FALSE(mon.warnings().empty());
}

}
