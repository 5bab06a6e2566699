#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tg {

// Unix seconds. Both wall-clock and simulated time use this unit.
using Timestamp = std::int64_t;

std::string to_hex(std::string_view bytes);
std::optional<std::string> from_hex(std::string_view hex);

/// 20-byte SHA-1 digest of a torrent's info dictionary. This is the key every
/// verdict and blacklist entry is indexed by.
class InfoHash {
public:
    static constexpr std::size_t size = 20;

    InfoHash() = default;
    explicit InfoHash(const std::array<std::uint8_t, size>& digest) : digest_(digest) {}

    /// Requires exactly 20 raw bytes.
    static std::optional<InfoHash> from_bytes(std::string_view raw);
    /// Accepts 40 hex characters in either case.
    static std::optional<InfoHash> from_hex(std::string_view hex);

    std::string hex() const;
    std::string bytes() const;
    const std::array<std::uint8_t, size>& digest() const { return digest_; }

    auto operator<=>(const InfoHash&) const = default;

private:
    std::array<std::uint8_t, size> digest_{};
};

struct PeerEndpoint {
    std::string ip;  // dotted quad, or RFC 5952 text for IPv6
    std::uint16_t port = 0;

    std::string to_string() const;
    auto operator<=>(const PeerEndpoint&) const = default;
};

// Sort key that orders IPv4 addresses numerically and places IPv6 after
// them. Unparseable strings sort last, lexicographically.
struct IpSortKey {
    int family_rank;
    std::array<std::uint8_t, 16> addr;
    std::string text;
    auto operator<=>(const IpSortKey&) const = default;
};
IpSortKey ip_sort_key(const std::string& ip);
bool is_valid_ip(const std::string& ip);

std::string format_iso8601(Timestamp t);
std::optional<Timestamp> parse_iso8601(std::string_view text);

}  // namespace tg
