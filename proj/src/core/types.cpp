#include "types.hpp"

#include "error.hpp"

#include <arpa/inet.h>

#include <cstdio>
#include <cstring>
#include <ctime>

namespace tg {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::truncated: return "Truncated";
        case Errc::malformed: return "Malformed";
        case Errc::duplicate_key: return "DuplicateKey";
        case Errc::missing_field: return "MissingField";
        case Errc::bad_pieces: return "BadPieces";
        case Errc::no_infohash: return "NoInfohash";
        case Errc::bad_length: return "BadLength";
        case Errc::unsupported_scheme: return "UnsupportedScheme";
        case Errc::tracker_failure: return "TrackerFailure";
        case Errc::bad_compact_length: return "BadCompactLength";
        case Errc::bad_protocol_string: return "BadProtocolString";
        case Errc::spare_bit_set: return "SpareBitSet";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::malformed_xml: return "MalformedXml";
        case Errc::out_of_order: return "OutOfOrder";
        case Errc::unknown_torrent: return "UnknownTorrent";
        case Errc::time_regression: return "TimeRegression";
        case Errc::io_error: return "IoError";
        case Errc::sequence_violation: return "SequenceViolation";
        case Errc::corrupt_record: return "CorruptRecord";
        case Errc::invalid_config: return "InvalidConfig";
        case Errc::empty_input: return "EmptyInput";
        case Errc::zero_threshold: return "ZeroThreshold";
        case Errc::network_error: return "NetworkError";
    }
    return "Unknown";
}

std::string to_hex(std::string_view bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0x0f]);
    }
    return out;
}

namespace {
int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::optional<std::string> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

std::optional<InfoHash> InfoHash::from_bytes(std::string_view raw) {
    if (raw.size() != size) return std::nullopt;
    std::array<std::uint8_t, size> d{};
    for (std::size_t i = 0; i < size; ++i) d[i] = static_cast<std::uint8_t>(raw[i]);
    return InfoHash(d);
}

std::optional<InfoHash> InfoHash::from_hex(std::string_view hex) {
    if (hex.size() != size * 2) return std::nullopt;
    auto raw = tg::from_hex(hex);
    if (!raw) return std::nullopt;
    return from_bytes(*raw);
}

std::string InfoHash::bytes() const {
    return std::string(reinterpret_cast<const char*>(digest_.data()), digest_.size());
}

std::string InfoHash::hex() const { return to_hex(bytes()); }

std::string PeerEndpoint::to_string() const {
    if (ip.find(':') != std::string::npos) return "[" + ip + "]:" + std::to_string(port);
    return ip + ":" + std::to_string(port);
}

IpSortKey ip_sort_key(const std::string& ip) {
    IpSortKey key{2, {}, ip};
    in_addr v4{};
    if (inet_pton(AF_INET, ip.c_str(), &v4) == 1) {
        key.family_rank = 0;
        std::memcpy(key.addr.data(), &v4, 4);
        key.text.clear();
        return key;
    }
    in6_addr v6{};
    if (inet_pton(AF_INET6, ip.c_str(), &v6) == 1) {
        key.family_rank = 1;
        std::memcpy(key.addr.data(), &v6, 16);
        key.text.clear();
    }
    return key;
}

bool is_valid_ip(const std::string& ip) { return ip_sort_key(ip).family_rank < 2; }

std::string format_iso8601(Timestamp t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS followed by Z, +HH:MM or -HH:MM (fraction ignored).
    std::string s(text);
    std::tm tm{};
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                    &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &consumed) != 6) {
        return std::nullopt;
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    Timestamp t = timegm(&tm);
    std::string_view rest = std::string_view(s).substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest.front() == '.') {
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        rest.remove_prefix(i);
    }
    if (rest.empty() || rest == "Z") return t;
    int hh = 0, mm = 0;
    if ((rest.front() == '+' || rest.front() == '-') &&
        std::sscanf(std::string(rest.substr(1)).c_str(), "%2d:%2d", &hh, &mm) == 2) {
        Timestamp offset = hh * 3600 + mm * 60;
        return rest.front() == '+' ? t - offset : t + offset;
    }
    return std::nullopt;
}

}  // namespace tg
