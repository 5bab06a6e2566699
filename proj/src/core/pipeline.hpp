#pragma once

#include "detection_core.hpp"
#include "peer_wire.hpp"
#include "portal_monitor.hpp"
#include "seeder_resolver.hpp"
#include "store.hpp"
#include "tracker_client.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tg {

struct PipelineConfig {
    MonitorConfig monitor;
    ResolverOptions resolver;
    /// Newly published torrents resolved concurrently.
    std::size_t resolve_parallelism = 4;
    /// 0 disables swarm sampling.
    Timestamp swarm_interval_s = 300;
    /// Fake torrents are sampled until this long after publication.
    Timestamp swarm_horizon_s = 14 * 86400;
    std::uint16_t listen_port = 6881;
    std::string peer_id = "-TG0100-000000000000";
};

/// Network seams: tracker HTTP and the bitfield probe.
struct PipelineIo {
    HttpFetch tracker_fetch;
    std::function<std::optional<wire::Bitfield>(const TorrentSource&, const PeerEndpoint&)> probe;
};

/// Real network: httplib announces and TCP peer-wire probes.
PipelineIo make_network_io(std::chrono::milliseconds http_timeout, std::chrono::milliseconds probe_timeout);

/// Offline tracker and peers for a fixture directory:
///   tracker/<hex>.bencode      announce response for that infohash; missing => unreachable
///   bitfields/<hex>/<ip>_<port> raw bitfield payload; missing => peer unreachable
PipelineIo make_fixture_io(const std::filesystem::path& dir);

struct TickSummary {
    std::size_t published = 0;
    std::size_t resolved = 0;
    std::size_t unresolved = 0;
    std::size_t removed = 0;
    std::size_t swarm_samples = 0;
    std::size_t flagged = 0;  // torrents newly classified fake

    TickSummary& operator+=(const TickSummary& o);
};

/// portal monitor -> seeder resolution -> event log -> engine. The log write
/// and engine update for an event happen under the engine's write lock, so
/// readers see the log and the state advance together.
class Pipeline {
public:
    Pipeline(std::shared_ptr<PortalAdapter> portal, PipelineIo io, PipelineConfig config, EventLog& log,
             SharedEngine& engine);

    TickSummary tick(Timestamp now);

    const PortalMonitor& monitor() const { return monitor_; }
    std::vector<std::string> take_warnings();

private:
    void commit(EventBody body, TickSummary& summary);
    SeederResolved resolve(const InfoHash& h, Timestamp now);
    void sample_swarms(Timestamp now, TickSummary& summary);

    PortalMonitor monitor_;
    PipelineIo io_;
    PipelineConfig config_;
    EventLog& log_;
    SharedEngine& engine_;
    std::optional<Timestamp> last_swarm_poll_;
    std::vector<std::string> warnings_;
};

}  // namespace tg
