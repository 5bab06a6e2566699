#include "peer_wire.hpp"

#include "error.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

namespace tg::wire {

namespace {
constexpr std::uint8_t bitfield_id = 5;

std::uint32_t read_u32(std::string_view b) {
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[0])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[3]));
}
}  // namespace

std::string encode_handshake(const Handshake& h) {
    if (h.peer_id.size() != 20 || h.reserved.size() != 8)
        fail(Errc::invalid_argument, "handshake: peer_id must be 20 bytes and reserved 8 bytes");
    std::string out;
    out.reserve(handshake_size);
    out.push_back(static_cast<char>(protocol_id.size()));
    out += protocol_id;
    out += h.reserved;
    out += h.infohash.bytes();
    out += h.peer_id;
    return out;
}

std::string encode_handshake(const InfoHash& infohash, std::string_view peer_id) {
    return encode_handshake(Handshake{infohash, std::string(peer_id), std::string(8, '\0')});
}

Handshake decode_handshake(std::string_view input) {
    if (!input.empty() && static_cast<unsigned char>(input[0]) != protocol_id.size())
        fail(Errc::bad_protocol_string, "handshake: protocol string length is not 19");
    if (input.size() < handshake_size) fail(Errc::truncated, "handshake: fewer than 68 bytes");
    if (input.substr(1, protocol_id.size()) != protocol_id)
        fail(Errc::bad_protocol_string, "handshake: protocol identifier mismatch");
    Handshake h;
    h.reserved = std::string(input.substr(20, 8));
    h.infohash = *InfoHash::from_bytes(input.substr(28, 20));
    h.peer_id = std::string(input.substr(48, 20));
    return h;
}

ParsedMessage parse_message(std::string_view input) {
    if (input.size() < 4) fail(Errc::truncated, "message: incomplete length prefix");
    std::uint32_t len = read_u32(input);
    if (len == 0) return {KeepAlive{}, 4};
    if (input.size() - 4 < len) fail(Errc::truncated, "message: incomplete payload");
    auto id = static_cast<std::uint8_t>(input[4]);
    std::size_t consumed = 4 + static_cast<std::size_t>(len);
    if (id == bitfield_id) return {BitfieldMessage{std::string(input.substr(5, len - 1))}, consumed};
    return {OtherMessage{id}, consumed};
}

std::optional<Message> MessageReader::next() {
    if (buffer_.size() < 4) return std::nullopt;
    std::uint32_t len = read_u32(buffer_);
    if (buffer_.size() - 4 < len) return std::nullopt;
    auto parsed = parse_message(buffer_);
    buffer_.erase(0, parsed.consumed);
    return parsed.message;
}

Completion completion(const Bitfield& bitfield) {
    if (bitfield.num_pieces == 0) fail(Errc::length_mismatch, "bitfield: zero pieces declared");
    std::size_t expected = (static_cast<std::size_t>(bitfield.num_pieces) + 7) / 8;
    if (bitfield.bits.size() != expected)
        fail(Errc::length_mismatch, "bitfield: " + std::to_string(bitfield.bits.size()) + " bytes for " +
                                        std::to_string(bitfield.num_pieces) + " pieces");
    unsigned spare = static_cast<unsigned>(expected * 8 - bitfield.num_pieces);
    auto last = static_cast<unsigned char>(bitfield.bits.back());
    if (spare > 0 && (last & ((1u << spare) - 1)) != 0) fail(Errc::spare_bit_set, "bitfield: spare bit set");

    std::uint64_t have = 0;
    for (unsigned char c : bitfield.bits) have += static_cast<std::uint64_t>(std::popcount(c));
    double fraction = static_cast<double>(have) / bitfield.num_pieces;
    return {fraction, have == bitfield.num_pieces};
}

namespace {

// Treat the trailing run of zero bits in the last byte as spare. Exact for
// seeders; may undercount a leecher's pieces, which only matters when the
// leecher is missing nothing but its final pieces.
std::uint32_t infer_piece_count(const std::string& bits) {
    if (bits.empty()) return 0;
    auto last = static_cast<unsigned char>(bits.back());
    unsigned zeros = last == 0 ? 7u : static_cast<unsigned>(std::countr_zero(last));
    return static_cast<std::uint32_t>(bits.size() * 8 - std::min(zeros, 7u));
}

class TcpConnection final : public Connection {
public:
    explicit TcpConnection(int fd) : fd_(fd) {}
    ~TcpConnection() override { ::close(fd_); }
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    bool send(std::string_view bytes) override {
        while (!bytes.empty()) {
            ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
            if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
                pollfd p{fd_, POLLOUT, 0};
                if (::poll(&p, 1, 5000) <= 0) return false;
                continue;
            }
            if (n <= 0) return false;
            bytes.remove_prefix(static_cast<std::size_t>(n));
        }
        return true;
    }

    std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
        pollfd p{fd_, POLLIN, 0};
        int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (r == 0) return std::string{};
        if (r < 0) return std::nullopt;
        char buf[16384];
        ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n <= 0) return std::nullopt;
        return std::string(buf, static_cast<std::size_t>(n));
    }

private:
    int fd_;
};

}  // namespace

Connector make_tcp_connector() {
    return [](const PeerEndpoint& peer, std::chrono::milliseconds timeout) -> std::unique_ptr<Connection> {
        sockaddr_storage addr{};
        socklen_t addr_len = 0;
        int family = AF_INET;
        auto* v4 = reinterpret_cast<sockaddr_in*>(&addr);
        auto* v6 = reinterpret_cast<sockaddr_in6*>(&addr);
        if (inet_pton(AF_INET, peer.ip.c_str(), &v4->sin_addr) == 1) {
            v4->sin_family = AF_INET;
            v4->sin_port = htons(peer.port);
            addr_len = sizeof(sockaddr_in);
        } else if (inet_pton(AF_INET6, peer.ip.c_str(), &v6->sin6_addr) == 1) {
            family = AF_INET6;
            v6->sin6_family = AF_INET6;
            v6->sin6_port = htons(peer.port);
            addr_len = sizeof(sockaddr_in6);
        } else {
            return nullptr;
        }
        int fd = ::socket(family, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
        if (fd < 0) return nullptr;
        auto conn = std::make_unique<TcpConnection>(fd);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), addr_len) != 0) {
            if (errno != EINPROGRESS) return nullptr;
            pollfd p{fd, POLLOUT, 0};
            if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return nullptr;
            int err = 0;
            socklen_t len = sizeof err;
            if (::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) return nullptr;
        }
        return conn;
    };
}

std::optional<Bitfield> probe_peer(const Connector& connect, const PeerEndpoint& peer, const InfoHash& infohash,
                                   const ProbeOptions& options) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + options.timeout;
    auto remaining = [&] {
        return std::max(std::chrono::milliseconds(0),
                        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()));
    };

    auto conn = connect(peer, options.timeout);
    if (!conn) return std::nullopt;
    if (!conn->send(encode_handshake(infohash, options.peer_id))) return std::nullopt;

    std::string buffer;
    bool handshaken = false;
    MessageReader reader;
    auto empty_field = [&] {
        std::uint32_t n = options.num_pieces == 0 ? 1 : options.num_pieces;
        return Bitfield{std::string((n + 7) / 8, '\0'), n};
    };

    while (true) {
        auto left = remaining();
        if (left.count() == 0) return handshaken ? std::optional<Bitfield>(empty_field()) : std::nullopt;
        auto chunk = conn->receive(left);
        if (!chunk) return handshaken ? std::optional<Bitfield>(empty_field()) : std::nullopt;
        if (!handshaken) {
            buffer += *chunk;
            if (buffer.size() < handshake_size) continue;
            try {
                auto h = decode_handshake(buffer);
                if (h.infohash != infohash) return std::nullopt;
            } catch (const Error&) {
                return std::nullopt;
            }
            handshaken = true;
            reader.feed(std::string_view(buffer).substr(handshake_size));
        } else {
            reader.feed(*chunk);
        }
        while (auto msg = reader.next()) {
            if (auto* bf = std::get_if<BitfieldMessage>(&*msg)) {
                std::uint32_t n = options.num_pieces ? options.num_pieces : infer_piece_count(bf->payload);
                return Bitfield{bf->payload, n};
            }
        }
    }
}

}  // namespace tg::wire
