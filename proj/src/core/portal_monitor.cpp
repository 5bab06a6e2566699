#include "portal_monitor.hpp"

#include "error.hpp"
#include "metainfo.hpp"
#include "parallel.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace tg {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string child_text(const pt::ptree& node, const std::string& name) {
    auto c = node.get_child_optional(name);
    return c ? trim(c->data()) : std::string{};
}

bool is_magnet(const std::string& s) { return s.rfind("magnet:?", 0) == 0; }

// Prefers a magnet URI anywhere among the item's children, then an
// enclosure, then the plain link.
std::string pick_link(const pt::ptree& item, bool atom) {
    std::string fallback;
    for (const auto& [name, child] : item) {
        if (name == "<xmlattr>") continue;
        std::string text = trim(child.data());
        if (is_magnet(text)) return text;
        if (auto href = child.get_optional<std::string>("<xmlattr>.href")) {
            if (is_magnet(*href)) return *href;
            if (atom && name == "link" && fallback.empty()) fallback = *href;
        }
        if (auto url = child.get_optional<std::string>("<xmlattr>.url")) {
            if (is_magnet(*url)) return *url;
            if (name == "enclosure") fallback = *url;
        }
    }
    if (!fallback.empty()) return fallback;
    return child_text(item, "link");
}

}  // namespace

std::optional<Timestamp> parse_rfc822(std::string_view text) {
    std::string s = trim(std::string(text));
    if (auto comma = s.find(','); comma != std::string::npos) s = trim(s.substr(comma + 1));
    std::tm tm{};
    const char* rest = strptime(s.c_str(), "%d %b %Y %H:%M", &tm);
    if (!rest) return std::nullopt;
    if (*rest == ':') {
        int sec = 0, n = 0;
        if (std::sscanf(rest, ":%2d%n", &sec, &n) != 1) return std::nullopt;
        tm.tm_sec = sec;
        rest += n;
    }
    Timestamp t = timegm(&tm);
    std::string zone = trim(rest);
    if (zone.empty() || zone == "GMT" || zone == "UT" || zone == "UTC" || zone == "Z") return t;
    if (zone.size() == 5 && (zone[0] == '+' || zone[0] == '-')) {
        int hh = std::stoi(zone.substr(1, 2)), mm = std::stoi(zone.substr(3, 2));
        Timestamp off = hh * 3600 + mm * 60;
        return zone[0] == '+' ? t - off : t + off;
    }
    static const std::pair<const char*, int> zones[] = {{"EST", -5}, {"EDT", -4}, {"CST", -6}, {"CDT", -5},
                                                         {"MST", -7}, {"MDT", -6}, {"PST", -8}, {"PDT", -7}};
    for (auto [name, hours] : zones)
        if (zone == name) return t - hours * 3600;
    return std::nullopt;
}

FeedParseResult parse_feed(std::string_view xml) {
    pt::ptree doc;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        fail(Errc::malformed_xml, std::string("feed: ") + e.what());
    }

    FeedParseResult out;
    std::vector<std::pair<const pt::ptree*, bool>> items;  // node, is_atom
    if (auto rss = doc.get_child_optional("rss")) {
        if (auto channel = rss->get_child_optional("channel"))
            for (const auto& [name, node] : *channel)
                if (name == "item") items.push_back({&node, false});
    } else if (auto rdf = doc.get_child_optional("rdf:RDF")) {
        for (const auto& [name, node] : *rdf)
            if (name == "item") items.push_back({&node, false});
    } else if (auto feed = doc.get_child_optional("feed")) {
        for (const auto& [name, node] : *feed)
            if (name == "entry") items.push_back({&node, true});
    } else {
        fail(Errc::malformed_xml, "feed: root element is not rss, rdf:RDF or feed");
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& [node, atom] = items[i];
        FeedEntry e;
        e.title = child_text(*node, "title");
        if (atom) {
            e.username = child_text(*node, "author.name");
        } else {
            e.username = child_text(*node, "dc:creator");
            if (e.username.empty()) e.username = child_text(*node, "author");
        }
        e.link = pick_link(*node, atom);
        if (e.username.empty()) {
            out.warnings.push_back("item " + std::to_string(i + 1) + " ('" + e.title + "') has no author; skipped");
            continue;
        }
        if (e.link.empty()) {
            out.warnings.push_back("item " + std::to_string(i + 1) + " ('" + e.title + "') has no link; skipped");
            continue;
        }
        std::optional<Timestamp> when;
        if (atom) {
            auto d = child_text(*node, "published");
            if (d.empty()) d = child_text(*node, "updated");
            if (!d.empty()) when = parse_iso8601(d);
        } else {
            auto d = child_text(*node, "pubDate");
            if (!d.empty()) when = parse_rfc822(d);
            else if (auto dc = child_text(*node, "dc:date"); !dc.empty()) when = parse_iso8601(dc);
        }
        if (when) {
            e.published_at = *when;
            e.has_date = true;
        }
        out.entries.push_back(std::move(e));
    }
    return out;
}

AccountStatus check_account_status(const std::string& username, PortalAdapter& portal,
                                   const AccountMarkers& markers) {
    FetchResult r;
    try {
        r = portal.fetch_user_page(username);
    } catch (const std::exception&) {
        return AccountStatus::unknown;
    }
    if (!r.ok) return AccountStatus::unknown;
    if (r.status == 404 || r.status == 410) return AccountStatus::removed;
    if (r.status != 200) return AccountStatus::unknown;
    for (const auto& m : markers.removed)
        if (!m.empty() && r.body.find(m) != std::string::npos) return AccountStatus::removed;
    if (markers.profile.empty()) return AccountStatus::active;
    for (const auto& m : markers.profile)
        if (r.body.find(m) != std::string::npos) return AccountStatus::active;
    return AccountStatus::unknown;
}

PortalMonitor::PortalMonitor(std::shared_ptr<PortalAdapter> portal, MonitorConfig config)
    : portal_(std::move(portal)), config_(std::move(config)) {
    if (config_.feed_interval_s <= 0 || config_.account_interval_s <= 0)
        fail(Errc::invalid_config, "monitor: poll intervals must be positive");
}

std::optional<TorrentSource> PortalMonitor::source(const InfoHash& h) const {
    auto it = sources_.find(h);
    if (it == sources_.end()) return std::nullopt;
    return it->second;
}

std::optional<AccountStatus> PortalMonitor::status(const std::string& username) const {
    auto it = accounts_.find(username);
    if (it == accounts_.end()) return std::nullopt;
    return it->second;
}

void PortalMonitor::poll_feed(Timestamp now, std::vector<DetectionEvent>& out) {
    FetchResult feed = portal_->fetch_feed();
    if (!feed.ok || feed.status != 200) {
        warnings_.push_back("feed fetch failed: " + (feed.ok ? "HTTP " + std::to_string(feed.status) : feed.error));
        return;
    }
    FeedParseResult parsed;
    try {
        parsed = parse_feed(feed.body);
    } catch (const Error& e) {
        warnings_.push_back(e.what());
        return;
    }
    last_feed_poll_ = now;
    warnings_.insert(warnings_.end(), parsed.warnings.begin(), parsed.warnings.end());

    std::vector<FeedEntry> fresh;
    for (auto& e : parsed.entries)
        if (!processed_links_.contains(e.link)) fresh.push_back(std::move(e));

    struct Resolved {
        std::optional<TorrentSource> source;
        std::string error;
    };
    std::vector<Resolved> resolved(fresh.size());
    bounded_parallel_for(fresh.size(), config_.fetch_parallelism, [&](std::size_t i) {
        const auto& link = fresh[i].link;
        try {
            if (is_magnet(link)) {
                auto m = parse_magnet(link);
                resolved[i].source = TorrentSource{m.infohash, m.trackers, 0, 0};
                return;
            }
            auto r = portal_->fetch_torrent(link);
            if (!r.ok || r.status != 200) {
                resolved[i].error = "torrent fetch failed for " + link;
                return;
            }
            auto meta = parse_torrent(r.body);
            resolved[i].source = TorrentSource{meta.infohash, meta.announce_urls,
                                               static_cast<std::uint32_t>(meta.piece_count), meta.total_length};
        } catch (const std::exception& e) {
            resolved[i].error = link + ": " + e.what();
        }
    });

    std::vector<TorrentPublished> events;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        auto& e = fresh[i];
        if (!resolved[i].source) {
            warnings_.push_back(resolved[i].error);
            continue;  // retried on the next feed poll
        }
        processed_links_.insert(e.link);
        const auto& src = *resolved[i].source;
        if (!published_.insert({src.infohash, e.username}).second) continue;
        sources_.try_emplace(src.infohash, src);
        accounts_.try_emplace(e.username, AccountStatus::active);
        Timestamp at = e.has_date ? std::min(e.published_at, now) : now;
        events.push_back(TorrentPublished{src.infohash, e.title, e.username, portal_->portal_id(), at});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.published_at < b.published_at; });
    for (auto& ev : events) out.push_back(DetectionEvent{0, std::move(ev)});
}

void PortalMonitor::poll_accounts(Timestamp now, std::vector<DetectionEvent>& out) {
    std::vector<std::string> pending;
    for (const auto& [u, s] : accounts_)
        if (s != AccountStatus::removed) pending.push_back(u);
    std::vector<AccountStatus> statuses(pending.size(), AccountStatus::unknown);
    bounded_parallel_for(pending.size(), config_.fetch_parallelism, [&](std::size_t i) {
        statuses[i] = check_account_status(pending[i], *portal_, config_.markers);
    });
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (statuses[i] == AccountStatus::removed) {
            accounts_[pending[i]] = AccountStatus::removed;
            out.push_back(DetectionEvent{0, AccountRemoved{pending[i], now}});
        } else if (statuses[i] == AccountStatus::unknown) {
            warnings_.push_back("account status unknown for '" + pending[i] + "'");
        }
    }
    last_account_poll_ = now;
}

std::vector<DetectionEvent> PortalMonitor::tick(Timestamp now) {
    std::vector<DetectionEvent> out;
    if (!last_feed_poll_ || now - *last_feed_poll_ >= config_.feed_interval_s) poll_feed(now, out);
    if (!last_account_poll_ || now - *last_account_poll_ >= config_.account_interval_s) poll_accounts(now, out);
    return out;
}

FixturePortal::FixturePortal(std::filesystem::path root, std::string portal)
    : root_(std::move(root)), portal_(std::move(portal)) {}

namespace {
std::optional<std::string> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool safe_name(const std::string& s) {
    return !s.empty() && s != "." && s != ".." && s.find('/') == std::string::npos && s.find('\0') == std::string::npos;
}
}  // namespace

FetchResult FixturePortal::fetch_feed() {
    auto body = slurp(root_ / "feed.xml");
    if (!body) return {true, 404, {}, {}};
    return {true, 200, *body, {}};
}

FetchResult FixturePortal::fetch_user_page(const std::string& username) {
    if (!safe_name(username)) return {true, 400, {}, {}};
    auto users = root_ / "users";
    if (auto status = slurp(users / (username + ".status"))) {
        auto s = trim(*status);
        if (s == "timeout") return {false, 0, {}, "connection timed out"};
        return {true, std::stoi(s), {}, {}};
    }
    auto body = slurp(users / (username + ".html"));
    if (!body) return {true, 404, {}, {}};
    return {true, 200, *body, {}};
}

FetchResult FixturePortal::fetch_torrent(const std::string& url) {
    std::string name = url.substr(url.find_last_of('/') + 1);
    if (!safe_name(name)) return {true, 404, {}, {}};
    auto body = slurp(root_ / "torrents" / name);
    if (!body) return {true, 404, {}, {}};
    return {true, 200, *body, {}};
}

}  // namespace tg
