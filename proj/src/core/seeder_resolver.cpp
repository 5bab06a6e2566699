#include "seeder_resolver.hpp"

#include "error.hpp"
#include "parallel.hpp"

namespace tg {

const char* to_string(UnresolvedReason reason) {
    switch (reason) {
        case UnresolvedReason::empty_swarm: return "empty_swarm";
        case UnresolvedReason::probe_failed: return "probe_failed";
        case UnresolvedReason::no_full_peer: return "no_full_peer";
    }
    return "unknown";
}

std::string describe(const SeederResolution& r) {
    if (auto* p = std::get_if<Resolved>(&r)) return "resolved " + p->endpoint.to_string();
    if (auto* p = std::get_if<Ambiguous>(&r)) return "ambiguous (" + std::to_string(p->seeder_count) + " seeders)";
    return std::string("unresolved: ") + to_string(std::get<Unresolved>(r).reason);
}

SeederResolution resolve_initial_seeder(const AnnounceResponse& announce, const BitfieldProbe& probe,
                                        const ResolverOptions& options) {
    if (announce.seeders >= 2) return Ambiguous{announce.seeders};
    if (announce.seeders == 0 || announce.peers.empty()) return Unresolved{UnresolvedReason::empty_swarm};
    if (announce.peers.size() == 1) return Resolved{announce.peers.front()};
    if (announce.peers.size() > options.probe_cap) return Unresolved{UnresolvedReason::probe_failed};

    std::vector<char> full(announce.peers.size(), 0);
    bounded_parallel_for(announce.peers.size(), options.probe_parallelism, [&](std::size_t i) {
        try {
            auto bitfield = probe(announce.peers[i]);
            full[i] = bitfield && wire::completion(*bitfield).is_seeder;
        } catch (const std::exception&) {
            full[i] = 0;  // malformed bitfield or probe fault: not evidence of a seeder
        }
    });

    std::size_t count = 0;
    std::size_t index = 0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (full[i]) {
            ++count;
            index = i;
        }
    }
    if (count == 1) return Resolved{announce.peers[index]};
    if (count == 0) return Unresolved{UnresolvedReason::no_full_peer};
    return Ambiguous{static_cast<std::int64_t>(count)};
}

}  // namespace tg
