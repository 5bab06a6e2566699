#include "events.hpp"

#include "error.hpp"

#include <nlohmann/json.hpp>

namespace tg {

using nlohmann::json;

Timestamp DetectionEvent::time() const {
    return std::visit(
        [](const auto& e) -> Timestamp {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, TorrentPublished>) return e.published_at;
            else return e.at;
        },
        body);
}

namespace {

std::string endpoint_text(const PeerEndpoint& p) { return p.to_string(); }

PeerEndpoint parse_endpoint_text(const std::string& s) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos) fail(Errc::corrupt_record, "bad endpoint: " + s);
    std::string ip = s.substr(0, colon);
    if (ip.size() >= 2 && ip.front() == '[' && ip.back() == ']') ip = ip.substr(1, ip.size() - 2);
    int port = std::stoi(s.substr(colon + 1));
    if (port < 0 || port > 65535) fail(Errc::corrupt_record, "bad port: " + s);
    return {ip, static_cast<std::uint16_t>(port)};
}

InfoHash infohash_field(const json& j) {
    auto h = InfoHash::from_hex(j.at("infohash").get<std::string>());
    if (!h) fail(Errc::corrupt_record, "bad infohash field");
    return *h;
}

}  // namespace

json event_to_json(const DetectionEvent& event) {
    json j;
    j["v"] = event_format_version;
    j["seq"] = event.seq;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, TorrentPublished>) {
                j["type"] = "torrent_published";
                j["infohash"] = e.infohash.hex();
                j["title"] = e.title;
                j["username"] = e.username;
                if (!e.portal.empty()) j["portal"] = e.portal;
                j["at"] = e.published_at;
            } else if constexpr (std::is_same_v<T, SeederResolved>) {
                j["type"] = "seeder_resolved";
                j["infohash"] = e.infohash.hex();
                if (e.endpoint) {
                    j["ip"] = e.endpoint->ip;
                    j["port"] = e.endpoint->port;
                } else {
                    j["failure"] = e.failure;
                }
                j["at"] = e.at;
            } else if constexpr (std::is_same_v<T, AccountRemoved>) {
                j["type"] = "account_removed";
                j["username"] = e.username;
                j["at"] = e.at;
            } else {
                j["type"] = "swarm_sample";
                j["infohash"] = e.infohash.hex();
                auto peers = json::array();
                for (const auto& p : e.endpoints) peers.push_back(endpoint_text(p));
                j["peers"] = std::move(peers);
                j["at"] = e.at;
            }
        },
        event.body);
    return j;
}

DetectionEvent event_from_json(const json& j) {
    try {
        if (j.at("v").get<int>() != event_format_version) fail(Errc::corrupt_record, "unsupported record version");
        DetectionEvent ev;
        ev.seq = j.at("seq").get<std::uint64_t>();
        const auto type = j.at("type").get<std::string>();
        const auto at = j.at("at").get<Timestamp>();
        if (type == "torrent_published") {
            ev.body = TorrentPublished{infohash_field(j), j.at("title").get<std::string>(),
                                       j.at("username").get<std::string>(), j.value("portal", std::string{}), at};
        } else if (type == "seeder_resolved") {
            SeederResolved e{infohash_field(j), std::nullopt, {}, at};
            if (j.contains("ip")) e.endpoint = PeerEndpoint{j.at("ip").get<std::string>(), j.at("port").get<std::uint16_t>()};
            else e.failure = j.value("failure", std::string{});
            ev.body = std::move(e);
        } else if (type == "account_removed") {
            ev.body = AccountRemoved{j.at("username").get<std::string>(), at};
        } else if (type == "swarm_sample") {
            SwarmSampled e{infohash_field(j), {}, at};
            for (const auto& p : j.at("peers")) e.endpoints.insert(parse_endpoint_text(p.get<std::string>()));
            ev.body = std::move(e);
        } else {
            fail(Errc::corrupt_record, "unknown record type '" + type + "'");
        }
        return ev;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(Errc::corrupt_record, std::string("bad record: ") + e.what());
    }
}

std::string event_to_line(const DetectionEvent& event) {
    return event_to_json(event).dump(-1, ' ', false, json::error_handler_t::replace);
}

DetectionEvent event_from_line(std::string_view line) {
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(Errc::corrupt_record, "record is not a JSON object");
    return event_from_json(j);
}

}  // namespace tg
