// Generated by tests/fixtures/make_fixtures.py; do not edit.
#pragma once

#include <array>
#include <string_view>

namespace fixture_oracle {

struct TorrentOracle {
    std::string_view file;
    std::string_view infohash;
};

inline constexpr std::array<TorrentOracle, 6> torrents = {{
    {"torrents/single_small.torrent", "9c420a3456da7738dbade8eed9839889dc41cbc1"},
    {"torrents/single_exact.torrent", "28bf0efe0a012f75b2491ce7f9fdd2a57f13a824"},
    {"torrents/multi_files.torrent", "22d6bee6588b4aecb6349b84202ec01ba514ec68"},
    {"torrents/private_flag.torrent", "6b41a1bcf0a2bbbfa4a8fe4ab0e867ab623d0b66"},
    {"torrents/utf8_name.torrent", "91173f834236788c63e3d5e41138290b83753975"},
    {"torrents/announce_list_only.torrent", "20e51bfe49befc4521480bfb5c622bca10e2605e"},
}};

// base32 of the first fixture's infohash
inline constexpr std::string_view first_base32 = "TRBAUNCW3J3TRW5N5DXNTA4YRHOEDS6B";

inline constexpr std::string_view alice_infohash = "ee25ed769887b7541a1ab7120a4d3007d7864ab4";
inline constexpr std::string_view bob_infohash = "25eaf43628f5232fb635d5559a9a4111cbd5a426";
inline constexpr std::string_view carol_infohash = "c4e0e6110fcd654d9d1c100bb974ed6c6e4b1e52";
inline constexpr std::string_view dave_infohash = "1b593ec99f9a5763027c2c0bfe28e20e67b0c06a";

}  // namespace fixture_oracle
