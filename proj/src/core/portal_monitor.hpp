#pragma once

#include "detection_core.hpp"
#include "events.hpp"
#include "tracker_client.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tg {

struct FeedEntry {
    std::string title;
    std::string username;
    std::string link;  // magnet URI or .torrent URL
    Timestamp published_at = 0;
    bool has_date = false;
    bool operator==(const FeedEntry&) const = default;
};

struct FeedParseResult {
    std::vector<FeedEntry> entries;
    std::vector<std::string> warnings;  // one per skipped item
};

/// RSS 2.0, RSS 1.0 (RDF) or Atom. Throws Errc::malformed_xml.
FeedParseResult parse_feed(std::string_view xml);

/// Unix time from an RFC 822 date ("Tue, 10 Jun 2003 04:00:00 GMT").
std::optional<Timestamp> parse_rfc822(std::string_view text);

/// Everything the monitor needs from one portal.
class PortalAdapter {
public:
    virtual ~PortalAdapter() = default;
    virtual FetchResult fetch_feed() = 0;
    virtual FetchResult fetch_user_page(const std::string& username) = 0;
    virtual FetchResult fetch_torrent(const std::string& url) = 0;
    virtual std::string portal_id() const = 0;
};

struct AccountMarkers {
    std::vector<std::string> removed;  // any present in a 200 page => removed
    std::vector<std::string> profile;  // any present => active; empty list => every 200 is active
};

AccountStatus check_account_status(const std::string& username, PortalAdapter& portal,
                                   const AccountMarkers& markers);

struct MonitorConfig {
    Timestamp feed_interval_s = 60;
    Timestamp account_interval_s = 300;
    AccountMarkers markers;
    std::size_t fetch_parallelism = 4;
};

/// What the seeder resolver needs to announce for a published torrent.
struct TorrentSource {
    InfoHash infohash;
    std::vector<std::string> trackers;
    std::uint32_t num_pieces = 0;  // 0 for magnet-only entries
    std::uint64_t total_length = 0;
};

/// Polls the feed and publisher pages on their own schedules. Emits
/// TorrentPublished for new (infohash, username) pairs and AccountRemoved
/// exactly once per username. Events carry seq 0; the consumer stamps them.
class PortalMonitor {
public:
    PortalMonitor(std::shared_ptr<PortalAdapter> portal, MonitorConfig config);

    std::vector<DetectionEvent> tick(Timestamp now);

    const std::vector<std::string>& warnings() const { return warnings_; }
    void clear_warnings() { warnings_.clear(); }
    std::optional<TorrentSource> source(const InfoHash& h) const;
    std::optional<AccountStatus> status(const std::string& username) const;

private:
    void poll_feed(Timestamp now, std::vector<DetectionEvent>& out);
    void poll_accounts(Timestamp now, std::vector<DetectionEvent>& out);

    std::shared_ptr<PortalAdapter> portal_;
    MonitorConfig config_;
    std::optional<Timestamp> last_feed_poll_;
    std::optional<Timestamp> last_account_poll_;
    std::set<std::pair<InfoHash, std::string>> published_;
    std::set<std::string> processed_links_;
    std::map<std::string, AccountStatus> accounts_;  // insertion is first sighting
    std::map<InfoHash, TorrentSource> sources_;
    std::vector<std::string> warnings_;
};

/// Serves a portal from a directory:
///   feed.xml                 the new-torrents feed
///   users/<name>.html        publisher page; missing => 404
///   users/<name>.status      optional override: an HTTP status or "timeout"
///   torrents/<basename>      .torrent files, looked up by the URL's last segment
class FixturePortal final : public PortalAdapter {
public:
    explicit FixturePortal(std::filesystem::path root, std::string portal = "fixture");
    FetchResult fetch_feed() override;
    FetchResult fetch_user_page(const std::string& username) override;
    FetchResult fetch_torrent(const std::string& url) override;
    std::string portal_id() const override { return portal_; }

private:
    std::filesystem::path root_;
    std::string portal_;
};

}  // namespace tg
