#pragma once

#include "types.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tg {

struct AnnounceResponse {
    std::int64_t interval_s = 0;
    std::int64_t seeders = 0;   // "complete"
    std::int64_t leechers = 0;  // "incomplete"
    std::vector<PeerEndpoint> peers;

    bool operator==(const AnnounceResponse&) const = default;
};

enum class AnnounceEvent { none, started };

struct AnnounceParams {
    InfoHash infohash;
    std::string peer_id;  // 20 bytes
    std::uint16_t listen_port = 6881;
    std::uint64_t left = 0;
    int numwant = 200;
    AnnounceEvent event = AnnounceEvent::started;
};

std::string build_announce_request(const std::string& tracker_url, const AnnounceParams& params);

/// Accepts compact ("peers" as a byte string of 6-byte groups), dictionary
/// ({ip, port} dicts) and "peers6" (18-byte groups) forms.
AnnounceResponse parse_announce_response(std::string_view body);

std::string encode_compact_peers(const std::vector<PeerEndpoint>& peers);

// Transport seam. Tests and the simulator substitute canned responses.
struct FetchResult {
    bool ok = false;  // false: connection-level failure, no HTTP status
    int status = 0;
    std::string body;
    std::string error;
};
using HttpFetch = std::function<FetchResult(const std::string& url)>;

/// Issues all requests with at most `parallelism` in flight; results are in
/// request order.
std::vector<FetchResult> fetch_all(const HttpFetch& fetch, const std::vector<std::string>& urls,
                                   std::size_t parallelism);

/// Plain HTTP GET backed by cpp-httplib.
HttpFetch make_http_fetch(std::chrono::milliseconds timeout = std::chrono::seconds(15));

/// Announces to the first tracker that answers with a parseable response.
AnnounceResponse announce(const HttpFetch& fetch, const std::vector<std::string>& trackers,
                          const AnnounceParams& params);

}  // namespace tg
