#pragma once

#include "peer_wire.hpp"
#include "tracker_client.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace tg {

struct Resolved {
    PeerEndpoint endpoint;
    bool operator==(const Resolved&) const = default;
};
struct Ambiguous {
    std::int64_t seeder_count = 0;
    bool operator==(const Ambiguous&) const = default;
};
enum class UnresolvedReason { empty_swarm, probe_failed, no_full_peer };
struct Unresolved {
    UnresolvedReason reason;
    bool operator==(const Unresolved&) const = default;
};
using SeederResolution = std::variant<Resolved, Ambiguous, Unresolved>;

const char* to_string(UnresolvedReason reason);
std::string describe(const SeederResolution& r);

/// nullopt means the probe could not reach the peer.
using BitfieldProbe = std::function<std::optional<wire::Bitfield>(const PeerEndpoint&)>;

struct ResolverOptions {
    std::size_t probe_cap = 16;
    std::size_t probe_parallelism = 8;
};

/// Identifies a newborn torrent's initial seeder from the first announce:
///  - one seeder, one peer: that peer, no probing;
///  - one seeder, several peers (up to probe_cap): the unique peer whose
///    bitfield is complete;
///  - several seeders: ambiguous, the swarm predates the announcement.
/// The tracker's seeder count selects the case; probe results only decide
/// within the second one.
SeederResolution resolve_initial_seeder(const AnnounceResponse& announce, const BitfieldProbe& probe,
                                        const ResolverOptions& options = {});

}  // namespace tg
