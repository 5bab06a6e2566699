#include "error.hpp"
#include "metainfo.hpp"
#include "peer_wire.hpp"

#include <doctest.h>

#include <deque>
#include <random>

using namespace tg;
using namespace tg::wire;

namespace {

std::string frame(std::uint8_t id, const std::string& payload) {
    std::uint32_t len = static_cast<std::uint32_t>(payload.size() + 1);
    std::string out{static_cast<char>(len >> 24), static_cast<char>(len >> 16), static_cast<char>(len >> 8),
                    static_cast<char>(len)};
    out.push_back(static_cast<char>(id));
    return out + payload;
}

Errc handshake_error(std::string_view bytes) {
    try {
        decode_handshake(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("decoded");
    return Errc::invalid_argument;
}

Errc completion_error(const Bitfield& b) {
    try {
        completion(b);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("accepted");
    return Errc::invalid_argument;
}

// Scripted peer: answers the handshake, then plays back canned bytes.
class ScriptedConnection : public Connection {
public:
    ScriptedConnection(std::deque<std::string> replies, bool close_after) : replies_(std::move(replies)), close_(close_after) {}
    bool send(std::string_view bytes) override {
        sent += bytes;
        return true;
    }
    std::optional<std::string> receive(std::chrono::milliseconds) override {
        if (replies_.empty()) return close_ ? std::nullopt : std::optional<std::string>(std::string());
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }
    std::string sent;

private:
    std::deque<std::string> replies_;
    bool close_;
};

}  // namespace

TEST_SUITE("peer_wire") {

TEST_CASE("handshake layout and round trip") {
    auto h = compute_infohash("x");
    std::string peer_id = "-TG0100-abcdefghijkl";
    std::string bytes = encode_handshake(h, peer_id);
    REQUIRE(bytes.size() == 68);
    CHECK(bytes[0] == 19);
    CHECK(bytes.substr(1, 19) == "BitTorrent protocol");
    CHECK(bytes.substr(28, 20) == h.bytes());
    CHECK(bytes.substr(48, 20) == peer_id);
    auto back = decode_handshake(bytes);
    CHECK(back.infohash == h);
    CHECK(back.peer_id == peer_id);
}

TEST_CASE("handshake errors") {
    std::string good = encode_handshake(compute_infohash("x"), std::string(20, 'p'));
    CHECK(handshake_error(good.substr(0, 67)) == Errc::truncated);
    std::string bad = good;
    bad[0] = 18;
    CHECK(handshake_error(bad) == Errc::bad_protocol_string);
    bad = good;
    bad[5] = 'X';
    CHECK(handshake_error(bad) == Errc::bad_protocol_string);
}

TEST_CASE("message framing") {
    CHECK(std::holds_alternative<KeepAlive>(parse_message(std::string(4, '\0')).message));
    auto m = parse_message(frame(5, "\xff\x80"));
    CHECK(std::get<BitfieldMessage>(m.message).payload == "\xff\x80");
    CHECK(m.consumed == 7);
    CHECK(std::get<OtherMessage>(parse_message(frame(4, "abcd")).message).id == 4);
    try {
        parse_message(frame(5, "\xff\x80").substr(0, 6));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::truncated);
    }
}

TEST_CASE("reader output is independent of chunking") {
    std::string stream = frame(4, "abcd") + std::string(4, '\0') + frame(5, "\xf0\x0f\xaa") + frame(1, "");
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        MessageReader reader;
        std::vector<Message> got;
        std::size_t pos = 0;
        while (pos < stream.size()) {
            std::size_t n = std::min<std::size_t>(stream.size() - pos, 1 + rng() % 6);
            reader.feed(std::string_view(stream).substr(pos, n));
            pos += n;
            while (auto msg = reader.next()) got.push_back(*msg);
        }
        REQUIRE(got.size() == 4);
        CHECK(std::get<OtherMessage>(got[0]).id == 4);
        CHECK(std::holds_alternative<KeepAlive>(got[1]));
        CHECK(std::get<BitfieldMessage>(got[2]).payload == "\xf0\x0f\xaa");
        CHECK(std::get<OtherMessage>(got[3]).id == 1);
    }
}

TEST_CASE("completion matches a brute-force popcount") {
    std::mt19937 rng(11);
    for (std::uint32_t pieces = 1; pieces <= 70; ++pieces) {
        for (int trial = 0; trial < 20; ++trial) {
            std::string bits((pieces + 7) / 8, '\0');
            std::uint32_t have = 0;
            for (std::uint32_t i = 0; i < pieces; ++i) {
                if (trial == 0 || rng() % 2) {
                    bits[i / 8] = static_cast<char>(bits[i / 8] | (0x80 >> (i % 8)));
                    ++have;
                }
            }
            auto c = completion({bits, pieces});
            CHECK(c.fraction == doctest::Approx(static_cast<double>(have) / pieces));
            CHECK(c.is_seeder == (have == pieces));
        }
    }
}

TEST_CASE("bitfield errors") {
    CHECK(completion_error({std::string("\xff\x01", 2), 10}) == Errc::spare_bit_set);
    CHECK(completion_error({std::string("\xff", 1), 10}) == Errc::length_mismatch);
    CHECK(completion_error({std::string("\xff\xc0\x00", 3), 10}) == Errc::length_mismatch);
    CHECK(completion_error({"", 0}) == Errc::length_mismatch);
}

TEST_CASE("probe over a scripted connection") {
    auto h = compute_infohash("probe");
    std::string reply = encode_handshake(h, std::string(20, 'r'));
    ProbeOptions opts;
    opts.num_pieces = 10;

    auto with = [&](std::deque<std::string> replies, bool close_after) -> Connector {
        return [replies, close_after](const PeerEndpoint&, std::chrono::milliseconds) -> std::unique_ptr<Connection> {
            return std::make_unique<ScriptedConnection>(replies, close_after);
        };
    };
    PeerEndpoint peer{"192.0.2.1", 6881};

    // Handshake and bitfield split awkwardly across reads.
    std::string all = reply + frame(5, "\xff\xc0");
    auto b = probe_peer(with({all.substr(0, 30), all.substr(30, 40), all.substr(70)}, true), peer, h, opts);
    REQUIRE(b);
    CHECK(completion(*b).is_seeder);

    auto silent = probe_peer(with({reply}, true), peer, h, opts);
    REQUIRE(silent);
    CHECK(completion(*silent).fraction == 0.0);

    auto wrong_hash = probe_peer(with({encode_handshake(compute_infohash("other"), std::string(20, 'r'))}, true), peer, h, opts);
    CHECK_FALSE(wrong_hash);

    auto refused = probe_peer([](const PeerEndpoint&, std::chrono::milliseconds) { return std::unique_ptr<Connection>(); },
                              peer, h, opts);
    CHECK_FALSE(refused);
}

}
