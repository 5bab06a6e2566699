#pragma once

#include "types.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tg::wire {

inline constexpr std::string_view protocol_id = "BitTorrent protocol";
inline constexpr std::size_t handshake_size = 68;

struct Handshake {
    InfoHash infohash;
    std::string peer_id = std::string(20, '\0');
    std::string reserved = std::string(8, '\0');

    bool operator==(const Handshake&) const = default;
};

std::string encode_handshake(const InfoHash& infohash, std::string_view peer_id);
std::string encode_handshake(const Handshake& h);
Handshake decode_handshake(std::string_view input);

struct Bitfield {
    std::string bits;  // big-endian bit order: piece 0 is the high bit of byte 0
    std::uint32_t num_pieces = 0;

    bool operator==(const Bitfield&) const = default;
};

struct KeepAlive {
    bool operator==(const KeepAlive&) const = default;
};
struct BitfieldMessage {
    std::string payload;
    bool operator==(const BitfieldMessage&) const = default;
};
struct OtherMessage {
    std::uint8_t id = 0;
    bool operator==(const OtherMessage&) const = default;
};
using Message = std::variant<KeepAlive, BitfieldMessage, OtherMessage>;

struct ParsedMessage {
    Message message;
    std::size_t consumed = 0;
};

/// Parses one length-prefixed message. Throws Errc::truncated when the
/// buffer does not hold a complete message yet.
ParsedMessage parse_message(std::string_view input);

/// Incremental framing over an arbitrary chunking of the byte stream.
class MessageReader {
public:
    void feed(std::string_view bytes) { buffer_.append(bytes); }
    std::optional<Message> next();

private:
    std::string buffer_;
};

struct Completion {
    double fraction = 0.0;
    bool is_seeder = false;
};

Completion completion(const Bitfield& bitfield);

// Transport seam for probes.
class Connection {
public:
    virtual ~Connection() = default;
    virtual bool send(std::string_view bytes) = 0;
    /// Returns received bytes, an empty string on timeout, nullopt on close/error.
    virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
};
using Connector = std::function<std::unique_ptr<Connection>(const PeerEndpoint&, std::chrono::milliseconds)>;

Connector make_tcp_connector();

struct ProbeOptions {
    std::chrono::milliseconds timeout{10'000};
    std::string peer_id = std::string("-TG0100-000000000000");
    /// 0 when unknown (magnet-only torrents): inferred from the bitfield.
    std::uint32_t num_pieces = 0;
};

/// connect, handshake, read until a Bitfield or the timeout, disconnect.
/// A peer that handshakes but sends no bitfield is reported as an all-zero
/// bitfield. nullopt when the connection or handshake fails.
std::optional<Bitfield> probe_peer(const Connector& connect, const PeerEndpoint& peer, const InfoHash& infohash,
                                   const ProbeOptions& options);

}  // namespace tg::wire
