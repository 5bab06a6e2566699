#include "torrentguard.h"

#include "analytics.hpp"
#include "detection_core.hpp"
#include "ecosystem_sim.hpp"
#include "error.hpp"
#include "metainfo.hpp"
#include "pipeline.hpp"
#include "store.hpp"
#include "verdict_service.hpp"

#include <nlohmann/json.hpp>

#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <new>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

struct tg_engine {
    fs::path log_path;
    fs::path snapshot_path;
    tg::EngineConfig config;
    std::shared_ptr<tg::SharedEngine> shared;
    std::optional<tg::EventLog> log;  // writable engines only
    std::mutex follow_mutex;
    std::size_t follow_offset = 0;
};

struct tg_verdict {
    tg::Verdict verdict;
    std::string hex;
};

struct tg_server {
    std::unique_ptr<tg::HttpServer> http;
    int port = 0;
    std::mutex mutex;
    std::condition_variable wake;
    bool stopping = false;
    std::thread follower;
};

struct tg_monitor {
    tg_engine* engine = nullptr;
    std::shared_ptr<tg::sim::SimulatedPortal> sim;
    std::shared_ptr<const tg::sim::SimReport> report;
    std::unique_ptr<tg::Pipeline> pipeline;
};

namespace {

thread_local std::string last_error;

template <typename F>
tg_status guarded(F&& f) noexcept {
    try {
        f();
        last_error.clear();
        return TG_OK;
    } catch (const tg::Error& e) {
        last_error = e.what();
        return static_cast<tg_status>(e.code());
    } catch (const json::exception& e) {
        last_error = e.what();
        return TG_ERR_MALFORMED;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return TG_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TG_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return TG_ERR_INTERNAL;
    }
}

tg_status invalid(const char* what) {
    last_error = what;
    return TG_ERR_INVALID_ARGUMENT;
}

char* dup_buffer(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size());
    out[s.size()] = '\0';
    return out;
}

json parse_config(const char* text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        tg::fail(tg::Errc::invalid_config, std::string("simulation config is not valid JSON: ") + e.what());
    }
}

std::string dump(const json& j, int indent = -1) { return j.dump(indent, ' ', false, json::error_handler_t::replace); }

void make_verdict(const tg_engine* engine, const tg::InfoHash& h, tg_verdict** out) {
    auto v = std::make_unique<tg_verdict>();
    v->verdict = engine->shared->read([&](const tg::Engine& e) { return e.query_verdict(h); });
    v->hex = h.hex();
    *out = v.release();
}

std::size_t follow_log(tg_engine* engine) {
    std::lock_guard lock(engine->follow_mutex);
    auto r = tg::read_log(engine->log_path, engine->follow_offset);
    std::size_t applied = engine->shared->write([&](tg::Engine& e) {
        std::size_t n = 0;
        for (const auto& ev : r.events) {
            if (ev.seq <= e.last_seq()) continue;
            e.ingest(ev);
            ++n;
        }
        return n;
    });
    // A partially written final line is left for the next call.
    engine->follow_offset = r.end_offset;
    return applied;
}

json cdf_json(const tg::analytics::Cdf& cdf) {
    return json{{"median", cdf.median ? json(*cdf.median) : json(nullptr)}, {"points", tg::analytics::to_json(cdf.points)}};
}

json stats(const tg::Engine& e) {
    std::map<std::string, std::uint64_t> by_class;
    std::map<std::string, std::uint64_t> per_publisher;
    std::vector<double> savings;
    std::set<tg::InfoHash> fake;
    for (const auto& [h, t] : e.torrents()) {
        ++by_class[tg::to_string(t.classification)];
        if (!tg::is_fake(t.classification)) continue;
        fake.insert(h);
        ++per_publisher[t.ip ? *t.ip : "user:" + t.username];
        auto p = e.publishers().find(t.username);
        if (t.flagged_at && p != e.publishers().end() && p->second.removed_at && *p->second.removed_at > *t.flagged_at)
            savings.push_back(static_cast<double>(*p->second.removed_at - *t.flagged_at));
    }
    std::map<std::string, std::uint64_t> by_state;
    for (const auto& [_, ip] : e.ips()) ++by_state[tg::to_string(ip.state)];
    std::uint64_t removed = 0;
    for (const auto& [_, p] : e.publishers()) removed += p.status == tg::AccountStatus::removed;

    std::vector<tg::SwarmSampleLog> fake_logs;
    for (auto& log : e.swarm().logs())
        if (fake.contains(log.infohash)) fake_logs.push_back(std::move(log));

    json j{{"last_seq", e.last_seq()},
           {"threshold", e.config().threshold},
           {"torrents", {{"total", e.torrents().size()}, {"by_classification", by_class}}},
           {"publishers", {{"total", e.publishers().size()}, {"removed", removed}}},
           {"ips", {{"total", e.ips().size()}, {"by_state", by_state}}}};
    j["contribution_curve"] =
        per_publisher.empty() ? json(nullptr)
                              : tg::analytics::to_json(tg::analytics::contribution_curve(per_publisher).points);
    j["detection_savings_s"] = savings.empty() ? json(nullptr) : cdf_json(tg::analytics::detection_savings_cdf(savings));
    j["downloads_per_user"] = fake_logs.empty() ? json(nullptr) : cdf_json(tg::analytics::downloads_per_user_cdf(fake_logs));
    return j;
}

}  // namespace

extern "C" {

const char* tg_version(void) { return TG_VERSION; }

const char* tg_status_string(tg_status status) {
    switch (status) {
        case TG_OK: return "Ok";
        case TG_ERR_READ_ONLY: return "ReadOnly";
        case TG_ERR_INTERNAL: return "Internal";
        default: break;
    }
    if (status > 0 && status <= TG_ERR_NETWORK) return tg::errc_name(static_cast<tg::Errc>(status));
    return "UnknownStatus";
}

const char* tg_last_error_message(void) { return last_error.c_str(); }

void tg_buffer_free(char* buffer) { std::free(buffer); }

tg_status tg_engine_open(const char* data_dir, const tg_engine_options* opts, tg_engine** out) {
    if (!data_dir || !out) return invalid("data_dir and out are required");
    *out = nullptr;
    return guarded([&] {
        auto e = std::make_unique<tg_engine>();
        fs::path dir(data_dir);
        fs::create_directories(dir);
        e->log_path = dir / "events.jsonl";
        e->snapshot_path = dir / "snapshot.json";
        if (opts) {
            e->config.threshold = opts->threshold ? opts->threshold : 3;
            e->config.retroactive = !opts->no_retroactive;
        }
        e->shared = std::make_shared<tg::SharedEngine>(tg::restore(e->log_path, e->snapshot_path, e->config));
        if (opts && opts->writable)
            e->log.emplace(e->log_path, opts->no_fsync ? tg::Durability::flush : tg::Durability::fsync);
        *out = e.release();
    });
}

void tg_engine_close(tg_engine* engine) { delete engine; }

tg_status tg_engine_refresh(tg_engine* engine, size_t* applied) {
    if (!engine) return invalid("engine is null");
    return guarded([&] {
        std::size_t n = follow_log(engine);
        if (applied) *applied = n;
    });
}

tg_status tg_engine_snapshot(tg_engine* engine) {
    if (!engine) return invalid("engine is null");
    return guarded([&] {
        engine->shared->read([&](const tg::Engine& e) {
            tg::write_snapshot(engine->snapshot_path, e);
            return 0;
        });
    });
}

tg_status tg_engine_append_event(tg_engine* engine, const char* json_record, uint64_t* seq_out) {
    if (!engine || !json_record) return invalid("engine and record are required");
    if (!engine->log) {
        last_error = "engine was opened read-only";
        return TG_ERR_READ_ONLY;
    }
    return guarded([&] {
        json j = json::parse(json_record);
        if (!j.is_object()) tg::fail(tg::Errc::malformed, "event record must be a JSON object");
        j["seq"] = 1;
        if (!j.contains("v")) j["v"] = tg::event_format_version;
        tg::DetectionEvent parsed = tg::event_from_json(j);
        std::uint64_t seq = engine->shared->write([&](tg::Engine& e) {
            tg::DetectionEvent ev{e.last_seq() + 1, std::move(parsed.body)};
            e.ingest(ev);
            engine->log->append(ev);
            return ev.seq;
        });
        if (seq_out) *seq_out = seq;
    });
}

uint64_t tg_engine_last_seq(const tg_engine* engine) {
    if (!engine) return 0;
    return engine->shared->read([](const tg::Engine& e) { return e.last_seq(); });
}

tg_status tg_engine_state_hash(const tg_engine* engine, char** out) {
    if (!engine || !out) return invalid("engine and out are required");
    return guarded([&] { *out = dup_buffer(engine->shared->read([](const tg::Engine& e) { return e.state_hash(); })); });
}

tg_status tg_engine_check_hex(const tg_engine* engine, const char* infohash_hex, tg_verdict** out) {
    if (!engine || !infohash_hex || !out) return invalid("engine, infohash and out are required");
    return guarded([&] {
        auto h = tg::InfoHash::from_hex(infohash_hex);
        if (!h) tg::fail(tg::Errc::bad_length, "infohash must be 40 hexadecimal characters");
        make_verdict(engine, *h, out);
    });
}

tg_status tg_engine_check_magnet(const tg_engine* engine, const char* magnet_uri, tg_verdict** out) {
    if (!engine || !magnet_uri || !out) return invalid("engine, magnet and out are required");
    return guarded([&] { make_verdict(engine, tg::parse_magnet(magnet_uri).infohash, out); });
}

tg_status tg_engine_check_torrent(const tg_engine* engine, const void* data, size_t size, tg_verdict** out) {
    if (!engine || (!data && size) || !out) return invalid("engine, data and out are required");
    return guarded([&] {
        std::string_view bytes(static_cast<const char*>(data), size);
        make_verdict(engine, tg::parse_torrent(bytes).infohash, out);
    });
}

const char* tg_verdict_infohash(const tg_verdict* v) { return v ? v->hex.c_str() : nullptr; }
const char* tg_verdict_classification(const tg_verdict* v) { return v ? tg::to_string(v->verdict.classification) : nullptr; }
int tg_verdict_is_fake(const tg_verdict* v) { return v && tg::is_fake(v->verdict.classification); }
const char* tg_verdict_reason(const tg_verdict* v) { return v ? v->verdict.reason.c_str() : nullptr; }

const char* tg_verdict_publisher_username(const tg_verdict* v) {
    return v && v->verdict.publisher_username ? v->verdict.publisher_username->c_str() : nullptr;
}

const char* tg_verdict_publisher_ip(const tg_verdict* v) {
    return v && v->verdict.publisher_ip ? v->verdict.publisher_ip->c_str() : nullptr;
}

int tg_verdict_flagged_at(const tg_verdict* v, int64_t* unix_seconds) {
    if (!v || !v->verdict.flagged_at) return 0;
    if (unix_seconds) *unix_seconds = *v->verdict.flagged_at;
    return 1;
}

tg_status tg_verdict_to_json(const tg_verdict* v, char** out) {
    if (!v || !out) return invalid("verdict and out are required");
    return guarded([&] { *out = dup_buffer(dump(tg::verdict_to_json(v->verdict))); });
}

void tg_verdict_free(tg_verdict* v) { delete v; }

tg_status tg_engine_export_blacklist(const tg_engine* engine, tg_blacklist_kind kind, char** out, size_t* size) {
    if (!engine || !out) return invalid("engine and out are required");
    if (kind != TG_BLACKLIST_INFOHASHES && kind != TG_BLACKLIST_IPS) return invalid("unknown blacklist kind");
    return guarded([&] {
        auto text = engine->shared->read([&](const tg::Engine& e) {
            auto b = e.export_blacklists();
            return kind == TG_BLACKLIST_IPS ? tg::format_ip_blacklist(b) : tg::format_infohash_blacklist(b);
        });
        *out = dup_buffer(text);
        if (size) *size = text.size();
    });
}

tg_status tg_engine_stats_json(const tg_engine* engine, char** out) {
    if (!engine || !out) return invalid("engine and out are required");
    return guarded([&] { *out = dup_buffer(dump(engine->shared->read([](const tg::Engine& e) { return stats(e); }), 2)); });
}

tg_status tg_server_start(tg_engine* engine, const tg_server_options* opts, tg_server** out) {
    if (!engine || !out) return invalid("engine and out are required");
    *out = nullptr;
    return guarded([&] {
        tg::ServiceConfig config;
        std::string host = "127.0.0.1";
        std::string static_dir;
        int port = 0;
        unsigned refresh_ms = 0;
        if (opts) {
            if (opts->max_body_bytes) config.max_body_bytes = opts->max_body_bytes;
            if (opts->host && *opts->host) host = opts->host;
            if (opts->static_dir) static_dir = opts->static_dir;
            if (opts->port < 0 || opts->port > 65535) tg::fail(tg::Errc::invalid_argument, "port out of range");
            port = opts->port;
            refresh_ms = opts->refresh_interval_ms;
        }
        auto s = std::make_unique<tg_server>();
        auto service = std::make_shared<const tg::VerdictService>(engine->shared, config);
        s->http = std::make_unique<tg::HttpServer>(service, static_dir);
        s->port = s->http->start(host, port);
        if (refresh_ms) {
            s->follower = std::thread([srv = s.get(), engine, refresh_ms] {
                std::unique_lock lock(srv->mutex);
                while (!srv->wake.wait_for(lock, std::chrono::milliseconds(refresh_ms), [srv] { return srv->stopping; })) {
                    lock.unlock();
                    try {
                        follow_log(engine);
                    } catch (const std::exception&) {
                        // Keep serving the last good state; the next round retries.
                    }
                    lock.lock();
                }
            });
        }
        *out = s.release();
    });
}

int tg_server_port(const tg_server* server) { return server ? server->port : -1; }

void tg_server_stop(tg_server* server) {
    if (!server) return;
    {
        std::lock_guard lock(server->mutex);
        server->stopping = true;
    }
    server->wake.notify_all();
    if (server->follower.joinable()) server->follower.join();
    server->http->stop();
    delete server;
}

tg_status tg_monitor_create(tg_engine* engine, const tg_monitor_options* opts, tg_monitor** out) {
    if (!engine || !opts || !out) return invalid("engine, options and out are required");
    if (!engine->log) {
        last_error = "the monitor needs an engine opened writable";
        return TG_ERR_READ_ONLY;
    }
    *out = nullptr;
    return guarded([&] {
        tg::PipelineConfig config;
        if (opts->feed_interval_s < 0 || opts->account_interval_s < 0)
            tg::fail(tg::Errc::invalid_config, "poll intervals must be positive");
        if (opts->feed_interval_s) config.monitor.feed_interval_s = opts->feed_interval_s;
        if (opts->account_interval_s) config.monitor.account_interval_s = opts->account_interval_s;
        if (opts->swarm_interval_s) config.swarm_interval_s = opts->swarm_interval_s < 0 ? 0 : opts->swarm_interval_s;
        if (opts->probe_cap) config.resolver.probe_cap = opts->probe_cap;
        if (opts->parallelism) {
            config.resolve_parallelism = opts->parallelism;
            config.resolver.probe_parallelism = opts->parallelism;
            config.monitor.fetch_parallelism = opts->parallelism;
        }
        auto timeout = std::chrono::milliseconds(opts->timeout_ms ? opts->timeout_ms : 10'000);

        auto m = std::make_unique<tg_monitor>();
        m->engine = engine;
        std::shared_ptr<tg::PortalAdapter> portal;
        tg::PipelineIo io;
        if (opts->adapter == TG_ADAPTER_FIXTURE) {
            if (!opts->fixture_dir || !*opts->fixture_dir)
                tg::fail(tg::Errc::invalid_config, "fixture adapter needs a fixture directory");
            fs::path dir(opts->fixture_dir);
            if (!fs::is_directory(dir)) tg::fail(tg::Errc::invalid_config, "fixture directory not found: " + dir.string());
            portal = std::make_shared<tg::FixturePortal>(dir);
            io = fs::is_directory(dir / "tracker") ? tg::make_fixture_io(dir) : tg::make_network_io(timeout, timeout);
        } else if (opts->adapter == TG_ADAPTER_SIMULATOR) {
            tg::sim::SimConfig sc;
            if (opts->sim_config_json && *opts->sim_config_json) sc = tg::sim::config_from_json(parse_config(opts->sim_config_json));
            if (opts->has_sim_seed) sc.rng_seed = opts->sim_seed;
            m->report = std::make_shared<const tg::sim::SimReport>(tg::sim::run_simulation(sc));
            m->sim = std::make_shared<tg::sim::SimulatedPortal>(m->report);
            config.monitor.markers.profile = {"class=\"profile\""};
            io.tracker_fetch = [sim = m->sim](const std::string& url) { return sim->announce(url); };
            io.probe = [sim = m->sim](const tg::TorrentSource& src, const tg::PeerEndpoint& peer) {
                return sim->bitfield(src.infohash, peer);
            };
            portal = m->sim;
        } else {
            tg::fail(tg::Errc::invalid_config, "unknown portal adapter");
        }
        m->pipeline = std::make_unique<tg::Pipeline>(portal, std::move(io), config, *engine->log, *engine->shared);
        *out = m.release();
    });
}

namespace {

void add(tg_tick_summary* out, const tg::TickSummary& s) {
    out->published += s.published;
    out->resolved += s.resolved;
    out->unresolved += s.unresolved;
    out->removed += s.removed;
    out->swarm_samples += s.swarm_samples;
    out->flagged += s.flagged;
}

}  // namespace

tg_status tg_monitor_tick(tg_monitor* monitor, int64_t now, tg_tick_summary* summary) {
    if (!monitor) return invalid("monitor is null");
    return guarded([&] {
        if (monitor->sim) monitor->sim->set_now(now);
        auto s = monitor->pipeline->tick(now);
        if (summary) {
            *summary = {};
            add(summary, s);
        }
    });
}

tg_status tg_monitor_sim_window(const tg_monitor* monitor, int64_t* start, int64_t* end) {
    if (!monitor) return invalid("monitor is null");
    if (!monitor->report) return invalid("not a simulator monitor");
    if (start) *start = monitor->report->config.start_time;
    if (end) *end = monitor->report->config.start_time + monitor->report->config.duration_s;
    return TG_OK;
}

tg_status tg_monitor_run_simulated(tg_monitor* monitor, int64_t step_s, tg_tick_summary* summary) {
    if (!monitor) return invalid("monitor is null");
    if (!monitor->report) return invalid("not a simulator monitor");
    if (step_s <= 0) return invalid("step must be positive");
    return guarded([&] {
        tg_tick_summary total{};
        const auto& c = monitor->report->config;
        for (tg::Timestamp t = c.start_time; t <= c.start_time + c.duration_s; t += step_s) {
            monitor->sim->set_now(t);
            add(&total, monitor->pipeline->tick(t));
        }
        if (summary) *summary = total;
    });
}

tg_status tg_monitor_take_warnings(tg_monitor* monitor, char** out) {
    if (!monitor || !out) return invalid("monitor and out are required");
    return guarded([&] {
        std::string text;
        for (const auto& w : monitor->pipeline->take_warnings()) text += w + "\n";
        *out = dup_buffer(text);
    });
}

void tg_monitor_free(tg_monitor* monitor) { delete monitor; }

tg_status tg_simulate(const char* config_json, const uint64_t* seed, char** report_json, char** summary_text) {
    if (report_json) *report_json = nullptr;
    if (summary_text) *summary_text = nullptr;
    return guarded([&] {
        tg::sim::SimConfig config;
        if (config_json && *config_json) {
            config = tg::sim::config_from_json(parse_config(config_json));
        }
        if (seed) config.rng_seed = *seed;
        auto report = tg::sim::run_simulation(config);
        std::string r = report_json ? dump(tg::sim::report_to_json(report), 2) + "\n" : std::string();
        std::string s = summary_text ? tg::sim::summary_table(report) : std::string();
        if (report_json) *report_json = dup_buffer(r);
        if (summary_text) *summary_text = dup_buffer(s);
    });
}

tg_status tg_countermeasure_cost(double accounts_per_day, unsigned threshold, double* ips_per_day,
                                 double* ips_per_month) {
    return guarded([&] {
        auto c = tg::analytics::countermeasure_cost(accounts_per_day, threshold);
        if (ips_per_day) *ips_per_day = c.ips_per_day;
        if (ips_per_month) *ips_per_month = c.ips_per_month;
    });
}

}  // extern "C"
