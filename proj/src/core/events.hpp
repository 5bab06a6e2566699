#pragma once

#include "types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace tg {

struct TorrentPublished {
    InfoHash infohash;
    std::string title;
    std::string username;
    std::string portal;
    Timestamp published_at = 0;
    bool operator==(const TorrentPublished&) const = default;
};

struct SeederResolved {
    InfoHash infohash;
    std::optional<PeerEndpoint> endpoint;  // empty when resolution failed
    std::string failure;                  // human-readable reason when endpoint is empty
    Timestamp at = 0;
    bool operator==(const SeederResolved&) const = default;
};

struct AccountRemoved {
    std::string username;
    Timestamp at = 0;
    bool operator==(const AccountRemoved&) const = default;
};

struct SwarmSampled {
    InfoHash infohash;
    std::set<PeerEndpoint> endpoints;
    Timestamp at = 0;
    bool operator==(const SwarmSampled&) const = default;
};

using EventBody = std::variant<TorrentPublished, SeederResolved, AccountRemoved, SwarmSampled>;

struct DetectionEvent {
    std::uint64_t seq = 0;
    EventBody body;

    Timestamp time() const;
    bool operator==(const DetectionEvent&) const = default;
};

inline constexpr int event_format_version = 1;

// One JSON object per event; this is the on-disk log record.
nlohmann::json event_to_json(const DetectionEvent& event);
DetectionEvent event_from_json(const nlohmann::json& j);
std::string event_to_line(const DetectionEvent& event);
/// Throws Errc::corrupt_record on any parse or schema failure.
DetectionEvent event_from_line(std::string_view line);

}  // namespace tg
