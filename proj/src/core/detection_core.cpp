#include "detection_core.hpp"

#include "error.hpp"
#include "metainfo.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace tg {

using nlohmann::json;

const char* to_string(Classification c) {
    switch (c) {
        case Classification::unknown: return "unknown";
        case Classification::fake_by_account_removal: return "fake_by_account_removal";
        case Classification::fake_at_birth: return "fake_at_birth";
        case Classification::fake_retroactive: return "fake_retroactive";
    }
    return "unknown";
}

std::optional<Classification> classification_from_string(std::string_view s) {
    for (auto c : {Classification::unknown, Classification::fake_by_account_removal, Classification::fake_at_birth,
                   Classification::fake_retroactive}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

const char* to_string(IpState s) {
    switch (s) {
        case IpState::clean: return "clean";
        case IpState::potential: return "potential";
        case IpState::fake: return "fake";
    }
    return "clean";
}

std::string format_infohash_blacklist(const Blacklists& b) {
    std::string out;
    for (const auto& h : b.fake_infohashes) out += h.hex() + "\n";
    return out;
}

std::string format_ip_blacklist(const Blacklists& b) {
    std::string out;
    for (const auto& ip : b.fake_ips) out += ip + "\n";
    return out;
}

Engine::Engine(EngineConfig config) : config_(config) {
    if (config_.threshold == 0) fail(Errc::zero_threshold, "detection threshold must be at least 1");
}

void Engine::classify(TorrentRecord& t, Classification c, Timestamp at, std::vector<StateChange>& out) {
    if (is_fake(t.classification)) return;
    t.classification = c;
    t.flagged_at = at;
    out.push_back({StateChange::Kind::torrent_classified, t.infohash.hex(), to_string(c), at});
}

// Counts `username` against `ip` once the account is removed and the IP has
// been observed under it, whichever happens last.
void Engine::attribute(const std::string& username, const std::string& ip, Timestamp at,
                       std::vector<StateChange>& out) {
    auto& rep = ips_[ip];
    rep.ip = ip;
    if (!rep.removed_usernames.insert(username).second) return;
    out.push_back({StateChange::Kind::ip_attributed, ip, username, at});
    if (rep.state == IpState::fake) return;
    if (rep.removed_accounts() >= config_.threshold) {
        rep.state = IpState::fake;
        rep.fake_since = at;
        out.push_back({StateChange::Kind::ip_state_changed, ip, to_string(IpState::fake), at});
        if (config_.retroactive) {
            for (const auto& h : torrents_by_ip_[ip]) classify(torrents_.at(h), Classification::fake_retroactive, at, out);
        }
    } else if (rep.state != IpState::potential) {
        rep.state = IpState::potential;
        out.push_back({StateChange::Kind::ip_state_changed, ip, to_string(IpState::potential), at});
    }
}

std::vector<StateChange> Engine::ingest(const DetectionEvent& event) {
    if (event.seq <= last_seq_)
        fail(Errc::out_of_order, "event sequence " + std::to_string(event.seq) + " does not exceed " +
                                     std::to_string(last_seq_));

    // Validate before touching state so a rejected event leaves no trace.
    if (auto* e = std::get_if<SeederResolved>(&event.body)) {
        if (!torrents_.contains(e->infohash))
            fail(Errc::unknown_torrent, "seeder resolved for unpublished torrent " + e->infohash.hex());
    } else if (auto* e = std::get_if<SwarmSampled>(&event.body)) {
        swarm_.check_sample(e->infohash, e->at);
    }

    std::vector<StateChange> out;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, TorrentPublished>) {
                if (torrents_.contains(e.infohash)) return;  // first publication wins
                auto& t = torrents_[e.infohash];
                t.infohash = e.infohash;
                t.title = e.title;
                t.username = e.username;
                t.published_at = e.published_at;
                auto& p = publishers_[e.username];
                if (p.username.empty()) {
                    p.username = e.username;
                    p.portal = e.portal;
                }
                p.torrents.insert(e.infohash);
                if (p.status == AccountStatus::removed)
                    classify(t, Classification::fake_by_account_removal, e.published_at, out);
            } else if constexpr (std::is_same_v<T, SeederResolved>) {
                auto& t = torrents_.at(e.infohash);
                if (!e.endpoint || t.ip) return;
                const std::string& ip = e.endpoint->ip;
                t.ip = ip;
                torrents_by_ip_[ip].insert(t.infohash);
                auto& p = publishers_.at(t.username);
                auto& rep = ips_[ip];
                rep.ip = ip;
                if (rep.state == IpState::fake) classify(t, Classification::fake_at_birth, e.at, out);
                if (p.ips.insert(ip).second && p.status == AccountStatus::removed) attribute(p.username, ip, e.at, out);
            } else if constexpr (std::is_same_v<T, AccountRemoved>) {
                auto& p = publishers_[e.username];
                p.username = e.username;
                if (p.status == AccountStatus::removed) return;
                p.status = AccountStatus::removed;
                p.removed_at = e.at;
                out.push_back({StateChange::Kind::account_removed, e.username, "removed", e.at});
                for (const auto& h : p.torrents) classify(torrents_.at(h), Classification::fake_by_account_removal, e.at, out);
                for (const auto& ip : p.ips) attribute(e.username, ip, e.at, out);
            } else {
                swarm_.record_sample(e.infohash, e.endpoints, e.at);
            }
        },
        event.body);
    last_seq_ = event.seq;
    return out;
}

Verdict Engine::query_verdict(const InfoHash& infohash) const {
    Verdict v;
    v.infohash = infohash;
    auto it = torrents_.find(infohash);
    if (it == torrents_.end()) {
        v.reason = "not indexed";
        return v;
    }
    const auto& t = it->second;
    v.classification = t.classification;
    v.publisher_username = t.username;
    v.publisher_ip = t.ip;
    v.flagged_at = t.flagged_at;
    switch (t.classification) {
        case Classification::unknown:
            v.reason = "no evidence against publisher";
            break;
        case Classification::fake_by_account_removal:
            v.reason = "publisher account '" + t.username + "' was removed by the portal";
            break;
        case Classification::fake_at_birth:
            v.reason = "published from blacklisted IP " + t.ip.value_or("?");
            break;
        case Classification::fake_retroactive:
            v.reason = "publisher IP " + t.ip.value_or("?") + " blacklisted after " +
                       std::to_string(config_.threshold) + " removed accounts";
            break;
    }
    return v;
}

Blacklists Engine::export_blacklists() const {
    Blacklists b;
    for (const auto& [h, t] : torrents_)
        if (is_fake(t.classification)) b.fake_infohashes.push_back(h);
    for (const auto& [ip, rep] : ips_)
        if (rep.state == IpState::fake) b.fake_ips.push_back(ip);
    std::sort(b.fake_ips.begin(), b.fake_ips.end(),
              [](const std::string& a, const std::string& c) { return ip_sort_key(a) < ip_sort_key(c); });
    return b;
}

json Engine::to_json() const {
    json j;
    j["threshold"] = config_.threshold;
    j["retroactive"] = config_.retroactive;
    j["last_seq"] = last_seq_;
    auto torrents = json::array();
    for (const auto& [h, t] : torrents_) {
        json o{{"infohash", h.hex()},
               {"title", t.title},
               {"username", t.username},
               {"published_at", t.published_at},
               {"classification", to_string(t.classification)}};
        if (t.ip) o["ip"] = *t.ip;
        if (t.flagged_at) o["flagged_at"] = *t.flagged_at;
        torrents.push_back(std::move(o));
    }
    j["torrents"] = std::move(torrents);
    auto publishers = json::array();
    for (const auto& [u, p] : publishers_) {
        json o{{"username", u}, {"portal", p.portal}, {"removed", p.status == AccountStatus::removed}, {"ips", p.ips}};
        if (p.removed_at) o["removed_at"] = *p.removed_at;
        auto hs = json::array();
        for (const auto& h : p.torrents) hs.push_back(h.hex());
        o["torrents"] = std::move(hs);
        publishers.push_back(std::move(o));
    }
    j["publishers"] = std::move(publishers);
    auto ips = json::array();
    for (const auto& [ip, r] : ips_) {
        json o{{"ip", ip}, {"state", to_string(r.state)}, {"removed_usernames", r.removed_usernames}};
        if (r.fake_since) o["fake_since"] = *r.fake_since;
        ips.push_back(std::move(o));
    }
    j["ips"] = std::move(ips);
    auto swarms = json::array();
    for (const auto& log : swarm_.logs()) {
        auto samples = json::array();
        for (const auto& s : log.samples) {
            auto peers = json::array();
            for (const auto& p : s.endpoints) peers.push_back(json{p.ip, p.port});
            samples.push_back(json{{"at", s.at}, {"peers", std::move(peers)}});
        }
        swarms.push_back(json{{"infohash", log.infohash.hex()}, {"samples", std::move(samples)}});
    }
    j["swarms"] = std::move(swarms);
    return j;
}

Engine Engine::from_json(const json& j) {
    try {
        Engine e(EngineConfig{j.at("threshold").get<unsigned>(), j.at("retroactive").get<bool>()});
        e.last_seq_ = j.at("last_seq").get<std::uint64_t>();
        auto hash = [](const json& v) {
            auto h = InfoHash::from_hex(v.get<std::string>());
            if (!h) fail(Errc::corrupt_record, "snapshot: bad infohash");
            return *h;
        };
        for (const auto& o : j.at("torrents")) {
            TorrentRecord t;
            t.infohash = hash(o.at("infohash"));
            t.title = o.at("title").get<std::string>();
            t.username = o.at("username").get<std::string>();
            t.published_at = o.at("published_at").get<Timestamp>();
            auto c = classification_from_string(o.at("classification").get<std::string>());
            if (!c) fail(Errc::corrupt_record, "snapshot: bad classification");
            t.classification = *c;
            if (o.contains("ip")) {
                t.ip = o.at("ip").get<std::string>();
                e.torrents_by_ip_[*t.ip].insert(t.infohash);
            }
            if (o.contains("flagged_at")) t.flagged_at = o.at("flagged_at").get<Timestamp>();
            e.torrents_.emplace(t.infohash, std::move(t));
        }
        for (const auto& o : j.at("publishers")) {
            PublisherRecord p;
            p.username = o.at("username").get<std::string>();
            p.portal = o.at("portal").get<std::string>();
            p.status = o.at("removed").get<bool>() ? AccountStatus::removed : AccountStatus::active;
            if (o.contains("removed_at")) p.removed_at = o.at("removed_at").get<Timestamp>();
            p.ips = o.at("ips").get<std::set<std::string>>();
            for (const auto& h : o.at("torrents")) p.torrents.insert(hash(h));
            e.publishers_.emplace(p.username, std::move(p));
        }
        for (const auto& o : j.at("ips")) {
            IpReputation r;
            r.ip = o.at("ip").get<std::string>();
            auto s = o.at("state").get<std::string>();
            r.state = s == "fake" ? IpState::fake : s == "potential" ? IpState::potential : IpState::clean;
            r.removed_usernames = o.at("removed_usernames").get<std::set<std::string>>();
            if (o.contains("fake_since")) r.fake_since = o.at("fake_since").get<Timestamp>();
            e.ips_.emplace(r.ip, std::move(r));
        }
        for (const auto& o : j.at("swarms")) {
            auto h = hash(o.at("infohash"));
            for (const auto& s : o.at("samples")) {
                std::set<PeerEndpoint> peers;
                for (const auto& p : s.at("peers"))
                    peers.insert({p.at(0).get<std::string>(), p.at(1).get<std::uint16_t>()});
                e.swarm_.record_sample(h, std::move(peers), s.at("at").get<Timestamp>());
            }
        }
        return e;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& ex) {
        fail(Errc::corrupt_record, std::string("snapshot: ") + ex.what());
    }
}

std::string Engine::state_hash() const {
    return compute_infohash(to_json().dump(-1, ' ', false, json::error_handler_t::replace)).hex();
}

}  // namespace tg
