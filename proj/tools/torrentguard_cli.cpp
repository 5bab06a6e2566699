// torrentguard: operator command line over the libtorrentguard C API.
#include "torrentguard.h"

#include <CLI11.hpp>

#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string data_dir = "torrentguard-data";
    unsigned threshold = 3;
    bool retroactive = true;
    bool fsync = true;
    unsigned probe_cap = 16;
    unsigned parallelism = 4;
    unsigned timeout_ms = 10'000;
    std::string listen = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    unsigned refresh_ms = 1000;
    std::uint64_t max_body_bytes = 8 * 1024 * 1024;
    std::int64_t feed_interval = 60;
    std::int64_t account_interval = 300;
    std::int64_t swarm_interval = 300;
    std::string adapter = "fixture";
    std::string fixture_dir;
    std::string sim_config;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw UsageError("invalid value '" + text + "' for " + key);
    return value;
}

bool parse_bool(const std::string& key, std::string text) {
    for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw UsageError("invalid boolean '" + text + "' for " + key);
}

struct Key {
    const char* name;
    const char* help;
    std::function<void(Settings&, const std::string&)> set;
};

template <typename T>
Key number_key(const char* name, const char* help, T Settings::*field) {
    return {name, help, [name, field](Settings& s, const std::string& v) { s.*field = parse_number<T>(name, v); }};
}

Key string_key(const char* name, const char* help, std::string Settings::*field) {
    return {name, help, [field](Settings& s, const std::string& v) { s.*field = v; }};
}

Key bool_key(const char* name, const char* help, bool Settings::*field) {
    return {name, help, [name, field](Settings& s, const std::string& v) { s.*field = parse_bool(name, v); }};
}

// One table drives the config file, TORRENTGUARD_* variables and flags.
const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        string_key("data_dir", "directory holding the event log and snapshot", &Settings::data_dir),
        number_key("threshold", "removed accounts before an IP is blacklisted (K)", &Settings::threshold),
        bool_key("retroactive", "flag a blacklisted IP's earlier torrents", &Settings::retroactive),
        bool_key("fsync", "fsync each event before acknowledging it", &Settings::fsync),
        number_key("probe_cap", "largest peer list probed for bitfields", &Settings::probe_cap),
        number_key("parallelism", "concurrent fetches and probes", &Settings::parallelism),
        number_key("timeout_ms", "network timeout", &Settings::timeout_ms),
        string_key("listen", "address the verdict service binds", &Settings::listen),
        number_key("port", "verdict service port", &Settings::port),
        string_key("static_dir", "directory served at / by the verdict service", &Settings::static_dir),
        number_key("refresh_ms", "how often serve picks up new log records", &Settings::refresh_ms),
        number_key("max_body_bytes", "largest accepted POST /v1/check body", &Settings::max_body_bytes),
        number_key("feed_interval", "seconds between feed polls", &Settings::feed_interval),
        number_key("account_interval", "seconds between publisher page polls", &Settings::account_interval),
        number_key("swarm_interval", "seconds between swarm samples of fake torrents", &Settings::swarm_interval),
        string_key("adapter", "portal adapter: fixture or simulator", &Settings::adapter),
        string_key("fixture_dir", "portal fixture directory for the fixture adapter", &Settings::fixture_dir),
        string_key("sim_config", "simulation config (JSON) for the simulator adapter", &Settings::sim_config),
    };
    return table;
}

std::string env_name(const std::string& key) {
    std::string out = "TORRENTGUARD_";
    for (char c : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
}

std::string flag_name(const std::string& key) {
    std::string out = "--";
    for (char c : key) out.push_back(c == '_' ? '-' : c);
    return out;
}

const Key* find_key(std::string name) {
    for (auto& c : name)
        if (c == '-') c = '_';
    for (const auto& k : keys())
        if (name == k.name) return &k;
    return nullptr;
}

void load_config_file(Settings& s, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::ParseError& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        const Key* k = item.parents.empty() ? find_key(item.name) : nullptr;
        if (!k) throw UsageError(path.string() + ": unknown key '" + item.fullname() + "'");
        if (item.inputs.size() != 1) throw UsageError(path.string() + ": '" + item.name + "' takes one value");
        k->set(s, item.inputs.front());
    }
}

void load_environment(Settings& s) {
    for (const auto& k : keys()) {
        if (const char* v = std::getenv(env_name(k.name).c_str())) k.set(s, v);
    }
}

std::string config_file_from(int argc, char** argv) {
    std::string path;
    if (const char* v = std::getenv("TORRENTGUARD_CONFIG_FILE")) path = v;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config-file" && i + 1 < argc) path = argv[i + 1];
        else if (a.rfind("--config-file=", 0) == 0) path = a.substr(14);
    }
    return path;
}

void validate(const Settings& s) {
    if (s.feed_interval <= 0 || s.account_interval <= 0 || s.swarm_interval <= 0)
        throw UsageError("poll intervals must be positive");
    if (s.threshold == 0) throw UsageError("threshold must be at least 1");
    if (s.port < 0 || s.port > 65535) throw UsageError("port out of range");
    if (s.adapter != "fixture" && s.adapter != "simulator") throw UsageError("adapter must be fixture or simulator");
}

// ---------------------------------------------------------------------------

struct ApiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(tg_status st, const std::string& what) {
    if (st != TG_OK)
        throw ApiError(what + ": " + tg_status_string(st) + ": " + tg_last_error_message());
}

struct Buffer {
    char* p = nullptr;
    ~Buffer() { tg_buffer_free(p); }
    std::string str() const { return p ? p : ""; }
};

using EnginePtr = std::unique_ptr<tg_engine, decltype(&tg_engine_close)>;

EnginePtr open_engine(const Settings& s, bool writable) {
    tg_engine_options opts{};
    opts.threshold = s.threshold;
    opts.no_retroactive = !s.retroactive;
    opts.writable = writable;
    opts.no_fsync = !s.fsync;
    tg_engine* e = nullptr;
    check(tg_engine_open(s.data_dir.c_str(), &opts, &e), "opening " + s.data_dir);
    return {e, &tg_engine_close};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw ApiError("cannot write " + out_path);
}

bool is_hex40(const std::string& s) {
    if (s.size() != 40) return false;
    for (char c : s)
        if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

void install_signal_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

int run_check(const Settings& s, const std::string& input, bool as_json) {
    auto engine = open_engine(s, false);
    tg_verdict* v = nullptr;
    tg_status st;
    std::error_code ec;
    if (input.rfind("magnet:", 0) == 0) {
        st = tg_engine_check_magnet(engine.get(), input.c_str(), &v);
    } else if (fs::is_regular_file(input, ec)) {
        std::string bytes = read_file(input);
        st = tg_engine_check_torrent(engine.get(), bytes.data(), bytes.size(), &v);
    } else if (is_hex40(input)) {
        st = tg_engine_check_hex(engine.get(), input.c_str(), &v);
    } else {
        throw UsageError("'" + input + "' is not a .torrent file, magnet URI or 40-character hex infohash");
    }
    if (st != TG_OK) throw UsageError(std::string("cannot read ") + input + ": " + tg_last_error_message());
    std::unique_ptr<tg_verdict, decltype(&tg_verdict_free)> guard(v, &tg_verdict_free);

    if (as_json) {
        Buffer b;
        check(tg_verdict_to_json(v, &b.p), "rendering verdict");
        std::cout << b.str() << "\n";
    } else {
        std::cout << tg_verdict_classification(v) << "\n";
        std::cout << "  infohash   " << tg_verdict_infohash(v) << "\n";
        std::cout << "  reason     " << tg_verdict_reason(v) << "\n";
        if (const char* u = tg_verdict_publisher_username(v)) std::cout << "  publisher  " << u << "\n";
        if (const char* ip = tg_verdict_publisher_ip(v)) std::cout << "  seeder ip  " << ip << "\n";
        std::int64_t at = 0;
        if (tg_verdict_flagged_at(v, &at)) std::cout << "  flagged at " << at << "\n";
    }
    return tg_verdict_is_fake(v) ? 2 : 0;
}

tg_server* start_server(const Settings& s, tg_engine* engine, unsigned refresh_ms) {
    tg_server_options opts{};
    opts.host = s.listen.c_str();
    opts.port = s.port;
    opts.max_body_bytes = s.max_body_bytes;
    opts.static_dir = s.static_dir.empty() ? nullptr : s.static_dir.c_str();
    opts.refresh_interval_ms = refresh_ms;
    tg_server* server = nullptr;
    check(tg_server_start(engine, &opts, &server), "starting verdict service on " + s.listen);
    std::cerr << "verdict service listening on " << s.listen << ":" << tg_server_port(server) << std::endl;
    return server;
}

int run_serve(const Settings& s) {
    auto engine = open_engine(s, false);
    install_signal_handlers();
    tg_server* server = start_server(s, engine.get(), s.refresh_ms);
    while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    tg_server_stop(server);
    return 0;
}

void print_summary(const tg_tick_summary& t) {
    std::cout << "published " << t.published << ", resolved " << t.resolved << ", unresolved " << t.unresolved
              << ", removed accounts " << t.removed << ", swarm samples " << t.swarm_samples << ", newly flagged "
              << t.flagged << "\n";
}

struct MonitorFlags {
    std::int64_t ticks = 0;  // 0: until interrupted
    std::int64_t now = 0;    // 0: wall clock
    std::int64_t step = 0;   // 0: the smaller poll interval
    bool serve = false;
};

int run_monitor(const Settings& s, const MonitorFlags& f) {
    auto engine = open_engine(s, true);
    tg_monitor_options opts{};
    std::string sim_json;
    if (s.adapter == "simulator") {
        opts.adapter = TG_ADAPTER_SIMULATOR;
        if (!s.sim_config.empty()) sim_json = read_file(s.sim_config);
        opts.sim_config_json = sim_json.c_str();
    } else {
        opts.adapter = TG_ADAPTER_FIXTURE;
        if (s.fixture_dir.empty()) throw UsageError("the fixture adapter needs fixture_dir");
        opts.fixture_dir = s.fixture_dir.c_str();
    }
    opts.feed_interval_s = s.feed_interval;
    opts.account_interval_s = s.account_interval;
    opts.swarm_interval_s = s.swarm_interval;
    opts.probe_cap = s.probe_cap;
    opts.parallelism = s.parallelism;
    opts.timeout_ms = s.timeout_ms;
    tg_monitor* raw = nullptr;
    check(tg_monitor_create(engine.get(), &opts, &raw), "starting monitor");
    std::unique_ptr<tg_monitor, decltype(&tg_monitor_free)> monitor(raw, &tg_monitor_free);

    install_signal_handlers();
    tg_server* server = f.serve ? start_server(s, engine.get(), 0) : nullptr;
    const std::int64_t step = f.step > 0 ? f.step : std::min(s.feed_interval, s.account_interval);
    tg_tick_summary total{};
    auto flush_warnings = [&] {
        Buffer w;
        if (tg_monitor_take_warnings(monitor.get(), &w.p) == TG_OK && !w.str().empty()) std::cerr << w.str();
    };

    if (s.adapter == "simulator" && f.ticks == 0) {
        check(tg_monitor_run_simulated(monitor.get(), step, &total), "simulated monitor run");
        flush_warnings();
    } else {
        std::int64_t now = f.now;
        if (now == 0 && s.adapter == "simulator") check(tg_monitor_sim_window(monitor.get(), &now, nullptr), "sim window");
        const bool wall_clock = now == 0;
        for (std::int64_t i = 0; (f.ticks == 0 || i < f.ticks) && !interrupted; ++i) {
            if (wall_clock) now = static_cast<std::int64_t>(std::time(nullptr));
            tg_tick_summary t{};
            check(tg_monitor_tick(monitor.get(), now, &t), "monitor tick");
            flush_warnings();
            total.published += t.published;
            total.resolved += t.resolved;
            total.unresolved += t.unresolved;
            total.removed += t.removed;
            total.swarm_samples += t.swarm_samples;
            total.flagged += t.flagged;
            if (f.ticks != 0 && i + 1 == f.ticks) break;
            if (wall_clock) {
                for (std::int64_t ms = 0; ms < step * 1000 && !interrupted; ms += 200)
                    std::this_thread::sleep_for(std::chrono::milliseconds(200));
            } else {
                now += step;
            }
        }
    }
    check(tg_engine_snapshot(engine.get()), "writing snapshot");
    print_summary(total);
    if (server) {
        while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
        tg_server_stop(server);
    }
    return 0;
}

int run_simulate(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::string& out) {
    std::string config = config_path.empty() ? std::string() : read_file(config_path);
    Buffer report, summary;
    std::uint64_t seed_value = seed.value_or(0);
    check(tg_simulate(config.c_str(), seed ? &seed_value : nullptr, &report.p, &summary.p), "simulation");
    write_output(out, report.str());
    (out.empty() || out == "-" ? std::cerr : std::cout) << summary.str();
    return 0;
}

int run_stats(const Settings& s, const std::optional<double>& accounts_per_day) {
    auto engine = open_engine(s, false);
    Buffer b;
    check(tg_engine_stats_json(engine.get(), &b.p), "computing statistics");
    std::cout << b.str() << "\n";
    if (accounts_per_day) {
        double day = 0, month = 0;
        check(tg_countermeasure_cost(*accounts_per_day, s.threshold, &day, &month), "countermeasure cost");
        std::printf("countermeasure cost at K=%u: %.4f IPs/day, %.2f IPs/month\n", s.threshold, day, month);
    }
    return 0;
}

int run_export(const Settings& s, const std::string& kind, const std::string& out) {
    auto engine = open_engine(s, false);
    Buffer b;
    std::size_t size = 0;
    check(tg_engine_export_blacklist(engine.get(), kind == "ips" ? TG_BLACKLIST_IPS : TG_BLACKLIST_INFOHASHES, &b.p,
                                     &size),
          "exporting blacklist");
    write_output(out, std::string(b.p, size));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Settings settings;
    CLI::App app{"TorrentGuard: fake-content detection for BitTorrent portals"};
    app.require_subcommand(1);
    // Subcommands inherit this; it lets global settings follow the subcommand.
    app.fallthrough();
    app.set_version_flag("--version", std::string(tg_version()));
    std::string config_file;
    app.add_option("--config-file", config_file,
                   "key = value settings file (env TORRENTGUARD_CONFIG_FILE); flags beat TORRENTGUARD_* variables, "
                   "which beat the file");
    for (const auto& k : keys()) {
        app.add_option_function<std::string>(
               flag_name(k.name), [&settings, &k](const std::string& v) { k.set(settings, v); },
               std::string(k.help) + " [" + env_name(k.name) + "]")
            ->configurable(false);
    }

    std::string check_input;
    bool check_json = false;
    auto* check_cmd = app.add_subcommand("check", "print the verdict for a .torrent file, magnet URI or hex infohash");
    check_cmd->add_option("input", check_input, "path, magnet URI or 40-character hex infohash")->required();
    check_cmd->add_flag("--json", check_json, "print the HTTP API's JSON instead");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP verdict service over the data directory");

    MonitorFlags mflags;
    auto* monitor_cmd = app.add_subcommand("monitor", "poll the portal adapter and feed detections into the store");
    monitor_cmd->add_option("--ticks", mflags.ticks, "stop after this many polling rounds");
    monitor_cmd->add_option("--now", mflags.now, "unix time of the first round instead of the wall clock");
    monitor_cmd->add_option("--step", mflags.step, "seconds between rounds");
    monitor_cmd->add_flag("--serve", mflags.serve, "also run the verdict service in this process");

    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    auto* simulate_cmd = app.add_subcommand("simulate", "run the ecosystem simulation and write its report");
    simulate_cmd->add_option("--config", sim_config, "simulation config (JSON); defaults when omitted");
    simulate_cmd->add_option("--seed", sim_seed, "overrides the config's rng_seed");
    simulate_cmd->add_option("--out", sim_out, "report path; stdout when omitted");

    std::optional<double> accounts_per_day;
    auto* stats_cmd = app.add_subcommand("stats", "print analytics over the store");
    stats_cmd->add_option("--accounts-per-day", accounts_per_day,
                          "also print the multi-IP countermeasure cost for this account burn rate");

    std::string export_kind, export_out;
    auto* export_cmd = app.add_subcommand("export-blacklist", "print the infohash or IP blacklist");
    export_cmd->add_option("kind", export_kind, "infohashes or ips")
        ->required()
        ->check(CLI::IsMember({"infohashes", "ips"}));
    export_cmd->add_option("--out", export_out, "output path; stdout when omitted");

    try {
        std::string file = config_file_from(argc, argv);
        if (!file.empty()) load_config_file(settings, file);
        load_environment(settings);
        app.parse(argc, argv);
        validate(settings);

        if (*check_cmd) return run_check(settings, check_input, check_json);
        if (*serve_cmd) return run_serve(settings);
        if (*monitor_cmd) return run_monitor(settings, mflags);
        if (*simulate_cmd) return run_simulate(sim_config, sim_seed, sim_out);
        if (*stats_cmd) return run_stats(settings, accounts_per_day);
        if (*export_cmd) return run_export(settings, export_kind, export_out);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "torrentguard: " << e.what() << "\n";
        return 1;
    } catch (const ApiError& e) {
        std::cerr << "torrentguard: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "torrentguard: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
