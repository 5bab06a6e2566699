#pragma once

#include "types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tg {

struct Metainfo {
    std::vector<std::string> announce_urls;  // "announce" first, then announce-list tiers, deduplicated
    std::string name;
    std::uint64_t piece_length = 0;
    std::uint64_t piece_count = 0;
    std::uint64_t total_length = 0;
    InfoHash infohash;
    std::string raw_info_bytes;

    bool operator==(const Metainfo&) const = default;
};

struct MagnetLink {
    InfoHash infohash;
    std::optional<std::string> display_name;
    std::vector<std::string> trackers;

    bool operator==(const MagnetLink&) const = default;
};

/// SHA-1 over exactly the given bytes.
InfoHash compute_infohash(std::string_view raw_info_bytes);

/// The info slice is captured by byte offset, never re-encoded, so the digest
/// matches what clients compute even for torrents in the wild.
Metainfo parse_torrent(std::string_view input);

MagnetLink parse_magnet(std::string_view uri);
std::string render_magnet(const MagnetLink& link);

std::string percent_encode(std::string_view bytes);
std::string percent_decode(std::string_view text);

// RFC 4648 base32, case-insensitive, unpadded.
std::optional<std::string> base32_decode(std::string_view text);
std::string base32_encode(std::string_view bytes);

}  // namespace tg
