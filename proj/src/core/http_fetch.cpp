#include "tracker_client.hpp"

#include <httplib.h>

namespace tg {

HttpFetch make_http_fetch(std::chrono::milliseconds timeout) {
    return [timeout](const std::string& url) -> FetchResult {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) return {false, 0, {}, "not an absolute URL: " + url};
        auto path_start = url.find('/', scheme_end + 3);
        std::string origin = url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_follow_location(true);
        auto res = client.Get(path);
        if (!res) return {false, 0, {}, httplib::to_string(res.error())};
        return {true, res->status, res->body, {}};
    };
}

}  // namespace tg
