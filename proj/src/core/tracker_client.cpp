#include "tracker_client.hpp"

#include "bencode.hpp"
#include "error.hpp"
#include "metainfo.hpp"
#include "parallel.hpp"

#include <arpa/inet.h>

namespace tg {

std::string build_announce_request(const std::string& tracker_url, const AnnounceParams& params) {
    if (tracker_url.rfind("http://", 0) != 0 && tracker_url.rfind("https://", 0) != 0)
        fail(Errc::unsupported_scheme, "tracker: only http(s) trackers are supported: " + tracker_url);
    if (params.peer_id.size() != 20) fail(Errc::invalid_argument, "tracker: peer_id must be 20 bytes");

    std::string url = tracker_url;
    url += tracker_url.find('?') == std::string::npos ? '?' : '&';
    url += "info_hash=" + percent_encode(params.infohash.bytes());
    url += "&peer_id=" + percent_encode(params.peer_id);
    url += "&port=" + std::to_string(params.listen_port);
    url += "&uploaded=0&downloaded=0";
    url += "&left=" + std::to_string(params.left);
    url += "&numwant=" + std::to_string(params.numwant);
    url += "&compact=1";
    if (params.event == AnnounceEvent::started) url += "&event=started";
    return url;
}

namespace {

std::uint16_t read_port(std::string_view b) {
    return static_cast<std::uint16_t>((static_cast<unsigned char>(b[0]) << 8) | static_cast<unsigned char>(b[1]));
}

void parse_compact(std::string_view raw, bool v6, std::vector<PeerEndpoint>& out) {
    const std::size_t stride = v6 ? 18 : 6;
    if (raw.size() % stride != 0)
        fail(Errc::bad_compact_length, "tracker: compact peers length " + std::to_string(raw.size()) +
                                           " is not a multiple of " + std::to_string(stride));
    for (std::size_t i = 0; i < raw.size(); i += stride) {
        char text[INET6_ADDRSTRLEN] = {};
        inet_ntop(v6 ? AF_INET6 : AF_INET, raw.data() + i, text, sizeof text);
        out.push_back({text, read_port(raw.substr(i + stride - 2, 2))});
    }
}

}  // namespace

AnnounceResponse parse_announce_response(std::string_view body) {
    if (body.empty()) fail(Errc::malformed, "tracker: empty response body");
    bencode::Value root = bencode::decode(body).value;
    if (!root.is_dict()) fail(Errc::malformed, "tracker: response is not a dict");
    if (const auto* reason = root.find("failure reason"))
        fail(Errc::tracker_failure, reason->is_string() ? reason->as_string() : "unspecified failure");

    AnnounceResponse r;
    auto count = [&](const char* key) -> std::int64_t {
        const auto* v = root.find(key);
        if (!v) return 0;
        auto n = v->as_integer();
        if (n < 0) fail(Errc::malformed, std::string("tracker: negative '") + key + "'");
        return n;
    };
    r.interval_s = count("interval");
    r.seeders = count("complete");
    r.leechers = count("incomplete");

    if (const auto* peers = root.find("peers")) {
        if (peers->is_string()) {
            parse_compact(peers->as_string(), false, r.peers);
        } else {
            for (const auto& p : peers->as_list()) {
                const auto* ip = p.find("ip");
                const auto* port = p.find("port");
                if (!ip || !port) fail(Errc::malformed, "tracker: peer dict missing ip/port");
                auto n = port->as_integer();
                if (n <= 0 || n > 65535) fail(Errc::malformed, "tracker: peer port out of range");
                r.peers.push_back({ip->as_string(), static_cast<std::uint16_t>(n)});
            }
        }
    }
    if (const auto* peers6 = root.find("peers6")) parse_compact(peers6->as_string(), true, r.peers);
    return r;
}

std::string encode_compact_peers(const std::vector<PeerEndpoint>& peers) {
    std::string out;
    for (const auto& p : peers) {
        in_addr a{};
        if (inet_pton(AF_INET, p.ip.c_str(), &a) != 1)
            fail(Errc::invalid_argument, "tracker: not an IPv4 address: " + p.ip);
        out.append(reinterpret_cast<const char*>(&a), 4);
        out.push_back(static_cast<char>(p.port >> 8));
        out.push_back(static_cast<char>(p.port & 0xff));
    }
    return out;
}

std::vector<FetchResult> fetch_all(const HttpFetch& fetch, const std::vector<std::string>& urls,
                                   std::size_t parallelism) {
    std::vector<FetchResult> results(urls.size());
    bounded_parallel_for(urls.size(), parallelism, [&](std::size_t i) {
        try {
            results[i] = fetch(urls[i]);
        } catch (const std::exception& e) {
            results[i] = FetchResult{false, 0, {}, e.what()};
        }
    });
    return results;
}

AnnounceResponse announce(const HttpFetch& fetch, const std::vector<std::string>& trackers,
                          const AnnounceParams& params) {
    std::string last_error = "no http tracker";
    for (const auto& tracker : trackers) {
        std::string url;
        try {
            url = build_announce_request(tracker, params);
        } catch (const Error& e) {
            last_error = e.what();
            continue;
        }
        FetchResult res = fetch(url);
        if (!res.ok || res.status != 200) {
            last_error = res.ok ? "HTTP " + std::to_string(res.status) : res.error;
            continue;
        }
        try {
            return parse_announce_response(res.body);
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    fail(Errc::network_error, "tracker: announce failed: " + last_error);
}

}  // namespace tg
