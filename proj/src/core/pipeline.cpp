#include "pipeline.hpp"

#include "error.hpp"
#include "metainfo.hpp"
#include "parallel.hpp"

#include <fstream>
#include <iterator>
#include <set>

namespace tg {

TickSummary& TickSummary::operator+=(const TickSummary& o) {
    published += o.published;
    resolved += o.resolved;
    unresolved += o.unresolved;
    removed += o.removed;
    swarm_samples += o.swarm_samples;
    flagged += o.flagged;
    return *this;
}

PipelineIo make_network_io(std::chrono::milliseconds http_timeout, std::chrono::milliseconds probe_timeout) {
    PipelineIo io;
    io.tracker_fetch = make_http_fetch(http_timeout);
    io.probe = [connect = wire::make_tcp_connector(), probe_timeout](const TorrentSource& src,
                                                                      const PeerEndpoint& peer) {
        wire::ProbeOptions options;
        options.timeout = probe_timeout;
        options.num_pieces = src.num_pieces;
        return wire::probe_peer(connect, peer, src.infohash, options);
    };
    return io;
}

namespace {

std::optional<std::string> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

PipelineIo make_fixture_io(const std::filesystem::path& dir) {
    PipelineIo io;
    io.tracker_fetch = [dir](const std::string& url) -> FetchResult {
        auto q = url.find("info_hash=");
        if (q == std::string::npos) return {false, 0, {}, "no info_hash in request"};
        auto end = url.find('&', q);
        auto raw = percent_decode(url.substr(q + 10, end == std::string::npos ? std::string::npos : end - q - 10));
        auto h = InfoHash::from_bytes(raw);
        if (!h) return {false, 0, {}, "bad info_hash in request"};
        auto body = slurp(dir / "tracker" / (h->hex() + ".bencode"));
        if (!body) return {false, 0, {}, "fixture tracker has no response for " + h->hex()};
        return {true, 200, std::move(*body), {}};
    };
    io.probe = [dir](const TorrentSource& src, const PeerEndpoint& peer) -> std::optional<wire::Bitfield> {
        auto body = slurp(dir / "bitfields" / src.infohash.hex() / (peer.ip + "_" + std::to_string(peer.port)));
        if (!body) return std::nullopt;
        auto pieces = src.num_pieces ? src.num_pieces : static_cast<std::uint32_t>(body->size() * 8);
        return wire::Bitfield{std::move(*body), pieces};
    };
    return io;
}

Pipeline::Pipeline(std::shared_ptr<PortalAdapter> portal, PipelineIo io, PipelineConfig config, EventLog& log,
                   SharedEngine& engine)
    : monitor_(std::move(portal), config.monitor), io_(std::move(io)), config_(std::move(config)), log_(log),
      engine_(engine) {
    if (!io_.tracker_fetch || !io_.probe) fail(Errc::invalid_argument, "pipeline needs a tracker fetch and a probe");
}

std::vector<std::string> Pipeline::take_warnings() {
    std::vector<std::string> out = std::move(warnings_);
    warnings_.clear();
    for (const auto& w : monitor_.warnings()) out.push_back(w);
    monitor_.clear_warnings();
    return out;
}

void Pipeline::commit(EventBody body, TickSummary& summary) {
    auto changes = engine_.write([&](Engine& engine) {
        DetectionEvent ev{engine.last_seq() + 1, std::move(body)};
        auto c = engine.ingest(ev);
        log_.append(ev);
        return c;
    });
    for (const auto& c : changes) {
        if (c.kind == StateChange::Kind::torrent_classified) ++summary.flagged;
    }
}

SeederResolved Pipeline::resolve(const InfoHash& h, Timestamp now) {
    SeederResolved out{h, std::nullopt, {}, now};
    auto src = monitor_.source(h);
    if (!src || src->trackers.empty()) {
        out.failure = "no tracker known";
        return out;
    }
    AnnounceParams params;
    params.infohash = h;
    params.peer_id = config_.peer_id;
    params.listen_port = config_.listen_port;
    params.left = src->total_length ? src->total_length : 1;
    try {
        auto response = announce(io_.tracker_fetch, src->trackers, params);
        auto probe = [&](const PeerEndpoint& peer) { return io_.probe(*src, peer); };
        auto r = resolve_initial_seeder(response, probe, config_.resolver);
        if (auto* ok = std::get_if<Resolved>(&r)) {
            out.endpoint = ok->endpoint;
        } else {
            out.failure = describe(r);
        }
    } catch (const Error& e) {
        out.failure = std::string("announce failed: ") + e.what();
    }
    return out;
}

void Pipeline::sample_swarms(Timestamp now, TickSummary& summary) {
    if (config_.swarm_interval_s <= 0) return;
    if (last_swarm_poll_ && now - *last_swarm_poll_ < config_.swarm_interval_s) return;
    last_swarm_poll_ = now;

    std::vector<TorrentSource> targets;
    engine_.read([&](const Engine& e) {
        for (const auto& [h, t] : e.torrents()) {
            if (!is_fake(t.classification) || now - t.published_at > config_.swarm_horizon_s) continue;
            if (auto src = monitor_.source(h); src && !src->trackers.empty()) targets.push_back(*src);
        }
        return 0;
    });

    std::vector<std::optional<std::set<PeerEndpoint>>> samples(targets.size());
    bounded_parallel_for(targets.size(), config_.resolve_parallelism, [&](std::size_t i) {
        AnnounceParams params;
        params.infohash = targets[i].infohash;
        params.peer_id = config_.peer_id;
        params.listen_port = config_.listen_port;
        params.left = targets[i].total_length ? targets[i].total_length : 1;
        params.event = AnnounceEvent::none;
        try {
            auto r = announce(io_.tracker_fetch, targets[i].trackers, params);
            samples[i].emplace(r.peers.begin(), r.peers.end());
        } catch (const Error&) {
        }
    });
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!samples[i]) {
            warnings_.push_back("swarm sample failed for " + targets[i].infohash.hex());
            continue;
        }
        commit(SwarmSampled{targets[i].infohash, std::move(*samples[i]), now}, summary);
        ++summary.swarm_samples;
    }
}

TickSummary Pipeline::tick(Timestamp now) {
    TickSummary summary;
    auto events = monitor_.tick(now);

    std::vector<InfoHash> fresh;
    for (auto& ev : events) {
        if (auto* p = std::get_if<TorrentPublished>(&ev.body)) {
            fresh.push_back(p->infohash);
            ++summary.published;
            commit(std::move(ev.body), summary);
        }
    }

    std::vector<SeederResolved> resolutions(fresh.size());
    bounded_parallel_for(fresh.size(), config_.resolve_parallelism,
                         [&](std::size_t i) { resolutions[i] = resolve(fresh[i], now); });
    for (auto& r : resolutions) {
        ++(r.endpoint ? summary.resolved : summary.unresolved);
        commit(std::move(r), summary);
    }

    for (auto& ev : events) {
        if (std::holds_alternative<AccountRemoved>(ev.body)) {
            ++summary.removed;
            commit(std::move(ev.body), summary);
        }
    }

    sample_swarms(now, summary);
    return summary;
}

}  // namespace tg
