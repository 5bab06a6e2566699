#include "ecosystem_sim.hpp"

#include "bencode.hpp"
#include "error.hpp"
#include "metainfo.hpp"
#include "seeder_resolver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <random>
#include <sstream>

namespace tg::sim {

using nlohmann::json;

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::burst: return "burst";
        case Strategy::conservative: return "conservative";
        case Strategy::legit: return "legit";
    }
    return "legit";
}

// ---------------------------------------------------------------------------
// configuration

void SimConfig::validate() const {
    auto bad = [](const std::string& what) { fail(Errc::invalid_config, "simulation config: " + what); };
    auto probability = [&](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) bad(std::string(name) + " must be in [0, 1]");
    };
    auto non_negative = [&](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) bad(std::string(name) + " must be a finite non-negative number");
    };
    if (duration_s <= 0) bad("duration_s must be positive");
    probability(seeder_resolution_probability, "seeder_resolution_probability");
    probability(probe_case_probability, "probe_case_probability");
    if (threshold == 0) bad("threshold must be at least 1");
    if (victim_pool == 0) bad("victim_pool must be at least 1");
    non_negative(download_decay_mean_s, "download_decay_mean_s");
    non_negative(burst_gap_max_s, "burst_gap_max_s");

    non_negative(burst.removal_delay_mean_s, "burst.removal_delay_mean_s");
    non_negative(burst.downloaders_per_torrent_mean, "burst.downloaders_per_torrent_mean");
    if (burst.count > 0 && !(burst.accounts_per_day > 0)) bad("burst.accounts_per_day must be positive");
    if (burst.torrents_per_account == 0) bad("burst.torrents_per_account must be at least 1");

    non_negative(conservative.removal_delay_mean_s, "conservative.removal_delay_mean_s");
    non_negative(conservative.downloaders_per_torrent_mean, "conservative.downloaders_per_torrent_mean");
    if (conservative.count > 0 && !(conservative.accounts_per_day > 0))
        bad("conservative.accounts_per_day must be positive");
    if (conservative.torrents_per_account_min == 0 ||
        conservative.torrents_per_account_min > conservative.torrents_per_account_max)
        bad("conservative torrents_per_account range is empty");

    non_negative(legit.torrents_per_day, "legit.torrents_per_day");
    non_negative(legit.downloaders_per_torrent_mean, "legit.downloaders_per_torrent_mean");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) fail(Errc::invalid_config, "simulation config: " + where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(Errc::invalid_config, "simulation config: unknown key '" + where + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(Errc::invalid_config, std::string("simulation config: '") + key + "' must be a boolean");
        out = v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(Errc::invalid_config, std::string("simulation config: '") + key + "' must be a number");
        out = v.get<T>();
    } else {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
            fail(Errc::invalid_config, std::string("simulation config: '") + key + "' must be a non-negative integer");
        out = v.get<T>();
    }
}

}  // namespace

SimConfig config_from_json(const json& j) {
    SimConfig c;
    check_keys(j,
               {"rng_seed", "start_time", "duration_s", "burst", "conservative", "legit",
                "seeder_resolution_probability", "probe_case_probability", "threshold", "retroactive",
                "fresh_ip_every_accounts", "download_decay_mean_s", "victim_pool", "burst_gap_max_s"},
               "");
    read(j, "rng_seed", c.rng_seed);
    read(j, "start_time", c.start_time);
    read(j, "duration_s", c.duration_s);
    read(j, "seeder_resolution_probability", c.seeder_resolution_probability);
    read(j, "probe_case_probability", c.probe_case_probability);
    read(j, "threshold", c.threshold);
    read(j, "retroactive", c.retroactive);
    read(j, "fresh_ip_every_accounts", c.fresh_ip_every_accounts);
    read(j, "download_decay_mean_s", c.download_decay_mean_s);
    read(j, "victim_pool", c.victim_pool);
    read(j, "burst_gap_max_s", c.burst_gap_max_s);
    if (j.contains("burst")) {
        const auto& b = j.at("burst");
        check_keys(b, {"count", "torrents_per_account", "accounts_per_day", "removal_delay_mean_s",
                       "downloaders_per_torrent_mean"},
                   "burst.");
        read(b, "count", c.burst.count);
        read(b, "torrents_per_account", c.burst.torrents_per_account);
        read(b, "accounts_per_day", c.burst.accounts_per_day);
        read(b, "removal_delay_mean_s", c.burst.removal_delay_mean_s);
        read(b, "downloaders_per_torrent_mean", c.burst.downloaders_per_torrent_mean);
    }
    if (j.contains("conservative")) {
        const auto& b = j.at("conservative");
        check_keys(b, {"count", "torrents_per_account_min", "torrents_per_account_max", "accounts_per_day",
                       "removal_delay_mean_s", "downloaders_per_torrent_mean"},
                   "conservative.");
        read(b, "count", c.conservative.count);
        read(b, "torrents_per_account_min", c.conservative.torrents_per_account_min);
        read(b, "torrents_per_account_max", c.conservative.torrents_per_account_max);
        read(b, "accounts_per_day", c.conservative.accounts_per_day);
        read(b, "removal_delay_mean_s", c.conservative.removal_delay_mean_s);
        read(b, "downloaders_per_torrent_mean", c.conservative.downloaders_per_torrent_mean);
    }
    if (j.contains("legit")) {
        const auto& b = j.at("legit");
        check_keys(b, {"count", "torrents_per_day", "downloaders_per_torrent_mean"}, "legit.");
        read(b, "count", c.legit.count);
        read(b, "torrents_per_day", c.legit.torrents_per_day);
        read(b, "downloaders_per_torrent_mean", c.legit.downloaders_per_torrent_mean);
    }
    c.validate();
    return c;
}

json config_to_json(const SimConfig& c) {
    return json{{"rng_seed", c.rng_seed},
                {"start_time", c.start_time},
                {"duration_s", c.duration_s},
                {"burst",
                 {{"count", c.burst.count},
                  {"torrents_per_account", c.burst.torrents_per_account},
                  {"accounts_per_day", c.burst.accounts_per_day},
                  {"removal_delay_mean_s", c.burst.removal_delay_mean_s},
                  {"downloaders_per_torrent_mean", c.burst.downloaders_per_torrent_mean}}},
                {"conservative",
                 {{"count", c.conservative.count},
                  {"torrents_per_account_min", c.conservative.torrents_per_account_min},
                  {"torrents_per_account_max", c.conservative.torrents_per_account_max},
                  {"accounts_per_day", c.conservative.accounts_per_day},
                  {"removal_delay_mean_s", c.conservative.removal_delay_mean_s},
                  {"downloaders_per_torrent_mean", c.conservative.downloaders_per_torrent_mean}}},
                {"legit",
                 {{"count", c.legit.count},
                  {"torrents_per_day", c.legit.torrents_per_day},
                  {"downloaders_per_torrent_mean", c.legit.downloaders_per_torrent_mean}}},
                {"seeder_resolution_probability", c.seeder_resolution_probability},
                {"probe_case_probability", c.probe_case_probability},
                {"threshold", c.threshold},
                {"retroactive", c.retroactive},
                {"fresh_ip_every_accounts", c.fresh_ip_every_accounts},
                {"download_decay_mean_s", c.download_decay_mean_s},
                {"victim_pool", c.victim_pool},
                {"burst_gap_max_s", c.burst_gap_max_s}};
}

// ---------------------------------------------------------------------------
// generation

namespace {

constexpr std::uint32_t fake_ip_base = (198u << 24) | (18u << 16) | 1u;   // 198.18.0.1
constexpr std::uint32_t legit_ip_base = (100u << 24) | (64u << 16) | 1u;  // 100.64.0.1
constexpr std::uint32_t victim_ip_base = (10u << 24) | 1u;                // 10.0.0.1
constexpr std::uint16_t victim_port = 51413;

std::string ipv4(std::uint32_t v) {
    return std::to_string(v >> 24) + "." + std::to_string((v >> 16) & 0xff) + "." + std::to_string((v >> 8) & 0xff) +
           "." + std::to_string(v & 0xff);
}

PeerEndpoint victim(std::uint32_t index) { return {ipv4(victim_ip_base + index), victim_port}; }

class Rng {
public:
    Rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, index};
        engine_.seed(seq);
    }

    double exponential(double mean) {
        if (mean <= 0) return 0.0;
        return std::exponential_distribution<double>(1.0 / mean)(engine_);
    }
    std::uint64_t poisson(double mean) {
        if (mean <= 0) return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(engine_);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }

private:
    std::mt19937_64 engine_;
};

enum class Priority { publish = 0, resolve = 1, remove = 2 };

struct Pending {
    Timestamp at;
    Priority priority;
    std::size_t order;
    EventBody body;
};

class Generator {
public:
    explicit Generator(const SimConfig& c) : c_(c), end_(c.start_time + c.duration_s) {}

    void run(SimReport& report) {
        std::uint32_t ip_counter = 0;
        for (unsigned j = 0; j < c_.burst.count; ++j)
            fake_publisher(report, Strategy::burst, j, ip_counter);
        for (unsigned j = 0; j < c_.conservative.count; ++j)
            fake_publisher(report, Strategy::conservative, j, ip_counter);
        for (unsigned j = 0; j < c_.legit.count; ++j) legit_publisher(report, j);
    }

    std::vector<Pending> take_events() { return std::move(pending_); }

private:
    void fake_publisher(SimReport& report, Strategy strategy, unsigned index, std::uint32_t& ip_counter) {
        const bool burst = strategy == Strategy::burst;
        Rng rng(c_.rng_seed, burst ? 1 : 2, index);
        const std::string publisher = std::string(burst ? "burst-" : "cons-") + std::to_string(index);
        const double per_day = burst ? c_.burst.accounts_per_day : c_.conservative.accounts_per_day;
        const double removal_mean = burst ? c_.burst.removal_delay_mean_s : c_.conservative.removal_delay_mean_s;
        const double downloads_mean =
            burst ? c_.burst.downloaders_per_torrent_mean : c_.conservative.downloaders_per_torrent_mean;
        const double cycle = 86400.0 / per_day;
        const double idle_mean = std::max(0.0, cycle - removal_mean);
        const auto port = static_cast<std::uint16_t>(6881 + index % 1000);

        std::string ip = ipv4(fake_ip_base + ip_counter++);
        double t = static_cast<double>(c_.start_time) + rng.uniform(0.0, cycle);
        for (unsigned account = 0; t < static_cast<double>(end_); ++account) {
            if (c_.fresh_ip_every_accounts > 0 && account > 0 && account % c_.fresh_ip_every_accounts == 0)
                ip = ipv4(fake_ip_base + ip_counter++);
            AccountOutcome acct;
            acct.publisher = publisher;
            acct.username = publisher + "-a" + std::to_string(account);
            acct.strategy = strategy;
            acct.ip = ip;
            acct.created_at = static_cast<Timestamp>(t);
            acct.removal_delay_s = rng.exponential(removal_mean);
            Timestamp removal = acct.created_at + static_cast<Timestamp>(std::llround(acct.removal_delay_s));
            if (removal <= end_) acct.removed_at = removal;

            unsigned n = burst ? c_.burst.torrents_per_account
                               : static_cast<unsigned>(rng.uniform_int(c_.conservative.torrents_per_account_min,
                                                                       c_.conservative.torrents_per_account_max));
            double pub = static_cast<double>(acct.created_at);
            for (unsigned i = 0; i < n; ++i) {
                if (i > 0 && burst) pub += rng.uniform(0.0, c_.burst_gap_max_s);
                auto at = static_cast<Timestamp>(pub);
                if (at >= end_) break;
                if (acct.removed_at && at >= *acct.removed_at) break;
                torrent(report, rng, acct, port, i, at, downloads_mean);
            }
            if (acct.removed_at) push(*acct.removed_at, Priority::remove, AccountRemoved{acct.username, *acct.removed_at});
            report.accounts.push_back(acct);
            t = static_cast<double>(removal) + rng.exponential(idle_mean);
        }
    }

    void legit_publisher(SimReport& report, unsigned index) {
        Rng rng(c_.rng_seed, 3, index);
        AccountOutcome acct;
        acct.publisher = "legit-" + std::to_string(index);
        acct.username = acct.publisher;
        acct.strategy = Strategy::legit;
        acct.ip = ipv4(legit_ip_base + index);
        acct.created_at = c_.start_time;
        const auto port = static_cast<std::uint16_t>(6881 + index % 1000);
        if (c_.legit.torrents_per_day > 0) {
            double mean_gap = 86400.0 / c_.legit.torrents_per_day;
            double t = static_cast<double>(c_.start_time) + rng.exponential(mean_gap);
            for (unsigned i = 0; t < static_cast<double>(end_); ++i) {
                torrent(report, rng, acct, port, i, static_cast<Timestamp>(t), c_.legit.downloaders_per_torrent_mean);
                t += rng.exponential(mean_gap);
            }
        }
        report.accounts.push_back(acct);
    }

    void torrent(SimReport& report, Rng& rng, const AccountOutcome& acct, std::uint16_t port, unsigned i,
                 Timestamp at, double downloads_mean) {
        TorrentOutcome t;
        t.infohash = compute_infohash("sim:" + std::to_string(c_.rng_seed) + ":" + acct.username + ":" + std::to_string(i));
        t.title = acct.publisher + " release " + std::to_string(i) + " (" + acct.username + ")";
        t.publisher = acct.publisher;
        t.username = acct.username;
        t.strategy = acct.strategy;
        t.ip = acct.ip;
        t.port = port;
        t.published_at = at;
        t.removed_at = acct.removed_at;

        const PeerEndpoint seeder{acct.ip, port};
        AnnounceResponse& a = t.birth_announce;
        a.interval_s = 1800;
        if (rng.bernoulli(c_.seeder_resolution_probability)) {
            a.seeders = 1;
            a.peers.push_back(seeder);
            if (rng.bernoulli(c_.probe_case_probability)) {
                auto leechers = rng.uniform_int(1, 3);
                for (std::uint64_t k = 0; k < leechers; ++k)
                    a.peers.push_back(victim(static_cast<std::uint32_t>(rng.uniform_int(0, c_.victim_pool - 1))));
                a.leechers = static_cast<std::int64_t>(leechers);
                std::swap(a.peers.front(), a.peers[rng.uniform_int(0, a.peers.size() - 1)]);
            }
        } else {
            // The swarm formed before the feed announced it: several seeders.
            a.seeders = static_cast<std::int64_t>(rng.uniform_int(2, 5));
            a.peers.push_back(seeder);
            for (std::int64_t k = 1; k < a.seeders; ++k)
                a.peers.push_back(victim(static_cast<std::uint32_t>(rng.uniform_int(0, c_.victim_pool - 1))));
        }

        auto probe = [&](const PeerEndpoint& p) -> std::optional<wire::Bitfield> {
            std::string bits(SimulatedPortal::piece_count / 8, p == seeder ? '\xff' : '\xf0');
            return wire::Bitfield{bits, SimulatedPortal::piece_count};
        };
        auto resolution = resolve_initial_seeder(a, probe, ResolverOptions{16, 1});
        SeederResolved resolved{t.infohash, std::nullopt, {}, at};
        if (auto* r = std::get_if<Resolved>(&resolution)) {
            resolved.endpoint = r->endpoint;
            t.seeder_resolved = true;
        } else {
            resolved.failure = describe(resolution);
        }

        std::uint64_t n = rng.poisson(downloads_mean);
        std::vector<std::pair<Timestamp, std::uint32_t>> downloads;
        for (std::uint64_t k = 0; k < n; ++k) {
            auto when = at + static_cast<Timestamp>(rng.exponential(c_.download_decay_mean_s));
            auto who = static_cast<std::uint32_t>(rng.uniform_int(0, c_.victim_pool - 1));
            if (when <= end_) downloads.emplace_back(when, who);
        }
        std::sort(downloads.begin(), downloads.end());
        for (const auto& [when, who] : downloads) {
            t.downloads.push_back(when);
            t.downloaders.push_back(who);
        }

        push(at, Priority::publish, TorrentPublished{t.infohash, t.title, t.username, "sim", at});
        push(at, Priority::resolve, std::move(resolved));
        report.torrents.push_back(std::move(t));
    }

    void push(Timestamp at, Priority p, EventBody body) { pending_.push_back({at, p, pending_.size(), std::move(body)}); }

    const SimConfig& c_;
    Timestamp end_;
    std::vector<Pending> pending_;
};

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

}  // namespace

SimReport run_simulation(const SimConfig& config) {
    config.validate();
    SimReport report;
    report.config = config;

    Generator gen(config);
    gen.run(report);
    auto pending = gen.take_events();
    std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        return std::tie(a.at, a.priority, a.order) < std::tie(b.at, b.priority, b.order);
    });

    Engine engine(EngineConfig{config.threshold, config.retroactive});
    report.events.reserve(pending.size());
    std::uint64_t seq = 0;
    for (auto& p : pending) {
        DetectionEvent ev{++seq, std::move(p.body)};
        engine.ingest(ev);
        report.events.push_back(std::move(ev));
    }
    report.blacklists = engine.export_blacklists();

    auto& agg = report.aggregates;
    for (auto& t : report.torrents) {
        const auto& rec = engine.torrents().at(t.infohash);
        t.classification = rec.classification;
        t.flagged_at = rec.flagged_at;
        if (t.fake()) {
            ++agg.fake_torrents;
            ++agg.fake_torrents_per_publisher[t.publisher];
            if (t.classification == Classification::fake_at_birth) ++agg.flagged_at_birth;
            if (!t.flagged_at) ++agg.false_negatives;
            if (t.flagged_at && t.removed_at && *t.flagged_at < *t.removed_at)
                agg.detection_time_saving_s.push_back(static_cast<double>(*t.removed_at - *t.flagged_at));
        } else {
            ++agg.legit_torrents;
            if (is_fake(t.classification)) ++agg.false_positives;
        }
    }
    agg.flagged_at_birth_fraction =
        agg.fake_torrents ? static_cast<double>(agg.flagged_at_birth) / static_cast<double>(agg.fake_torrents) : 0.0;
    if (!agg.detection_time_saving_s.empty()) agg.median_saving_s = median_of(agg.detection_time_saving_s);

    std::map<std::string, std::pair<double, std::size_t>> lifetimes;
    for (const auto& a : report.accounts) {
        if (a.strategy == Strategy::legit) continue;
        auto& [sum, n] = lifetimes[to_string(a.strategy)];
        sum += a.removal_delay_s;
        ++n;
    }
    for (const auto& [name, v] : lifetimes) agg.mean_account_lifetime_s[name] = v.first / static_cast<double>(v.second);

    auto policy = evaluate_policies(report);
    agg.prevented_downloads_vs_portal = policy.avoided_before_removal;
    agg.prevented_downloads_post_removal = policy.avoided_after_removal;
    agg.prevented_downloads_total = policy.avoided_total;
    agg.fake_downloads = policy.total_fake_downloads;
    agg.fake_ips = report.blacklists.fake_ips.size();
    return report;
}

PolicyComparison evaluate_policies(const SimReport& report) {
    PolicyComparison out;
    out.per_torrent.resize(report.torrents.size());
    for (std::size_t i = 0; i < report.torrents.size(); ++i) {
        const auto& t = report.torrents[i];
        if (!t.fake()) continue;
        auto& p = out.per_torrent[i];
        const auto& d = t.downloads;
        auto before = [&](Timestamp x) {
            return static_cast<std::size_t>(std::lower_bound(d.begin(), d.end(), x) - d.begin());
        };
        p.total = d.size();
        if (!t.flagged_at) {
            p.not_avoided = p.total;
        } else {
            const Timestamp flag = *t.flagged_at;
            p.not_avoided = before(flag);
            if (!t.removed_at) {
                p.avoided_before_removal = p.total - p.not_avoided;
            } else if (*t.removed_at > flag) {
                p.avoided_before_removal = before(*t.removed_at) - p.not_avoided;
                p.avoided_after_removal = p.total - before(*t.removed_at);
            } else {
                p.avoided_after_removal = p.total - p.not_avoided;
            }
        }
        out.avoided_before_removal += p.avoided_before_removal;
        out.avoided_after_removal += p.avoided_after_removal;
        out.not_avoided += p.not_avoided;
        out.total_fake_downloads += p.total;
    }
    out.avoided_total = out.avoided_before_removal + out.avoided_after_removal;
    return out;
}

json report_to_json(const SimReport& report) {
    const auto& agg = report.aggregates;
    auto policy = evaluate_policies(report);
    json torrents = json::array();
    for (std::size_t i = 0; i < report.torrents.size(); ++i) {
        const auto& t = report.torrents[i];
        const auto& p = policy.per_torrent[i];
        json o{{"infohash", t.infohash.hex()},
               {"publisher", t.publisher},
               {"username", t.username},
               {"strategy", to_string(t.strategy)},
               {"ip", t.ip},
               {"published_at", t.published_at},
               {"removed_at", t.removed_at ? json(*t.removed_at) : json(nullptr)},
               {"flagged_at", t.flagged_at ? json(*t.flagged_at) : json(nullptr)},
               {"classification", to_string(t.classification)},
               {"seeder_resolved", t.seeder_resolved},
               {"downloads_total", t.downloads.size()}};
        if (t.fake()) {
            o["downloads_before_flag"] = p.not_avoided;
            o["downloads_avoided_before_removal"] = p.avoided_before_removal;
            o["downloads_avoided_after_removal"] = p.avoided_after_removal;
        }
        torrents.push_back(std::move(o));
    }
    std::map<std::string, std::size_t> accounts_by_strategy;
    for (const auto& a : report.accounts) ++accounts_by_strategy[to_string(a.strategy)];

    json aggregates{{"fake_torrents", agg.fake_torrents},
                    {"legit_torrents", agg.legit_torrents},
                    {"flagged_at_birth", agg.flagged_at_birth},
                    {"flagged_at_birth_fraction", agg.flagged_at_birth_fraction},
                    {"detection_time_saving_s", agg.detection_time_saving_s},
                    {"median_saving_s", agg.median_saving_s ? json(*agg.median_saving_s) : json(nullptr)},
                    {"prevented_downloads_vs_portal", agg.prevented_downloads_vs_portal},
                    {"prevented_downloads_post_removal", agg.prevented_downloads_post_removal},
                    {"prevented_downloads_total", agg.prevented_downloads_total},
                    {"fake_downloads", agg.fake_downloads},
                    {"false_positives", agg.false_positives},
                    {"false_negatives", agg.false_negatives},
                    {"fake_torrents_per_publisher", agg.fake_torrents_per_publisher},
                    {"mean_account_lifetime_s", agg.mean_account_lifetime_s},
                    {"accounts", accounts_by_strategy},
                    {"fake_ips", agg.fake_ips}};
    return json{{"format_version", 1},
                {"metadata",
                 {{"removal_delay_distribution", "exponential"},
                  {"downloader_arrivals", "poisson, exponentially decaying intensity"},
                  {"account_creation", "after previous account removal plus exponential idle time"}}},
                {"config", config_to_json(report.config)},
                {"aggregates", std::move(aggregates)},
                {"blacklists",
                 {{"infohashes", format_infohash_blacklist(report.blacklists)},
                  {"ips", format_ip_blacklist(report.blacklists)}}},
                {"torrents", std::move(torrents)}};
}

std::string summary_table(const SimReport& report) {
    const auto& a = report.aggregates;
    std::ostringstream out;
    char buf[160];
    auto row = [&](const char* label, const std::string& value) {
        std::snprintf(buf, sizeof buf, "%-42s %s\n", label, value.c_str());
        out << buf;
    };
    auto num = [](double v, int prec = 3) {
        char b[64];
        std::snprintf(b, sizeof b, "%.*f", prec, v);
        return std::string(b);
    };
    row("seed", std::to_string(report.config.rng_seed));
    row("simulated days", num(static_cast<double>(report.config.duration_s) / 86400.0, 2));
    row("fake torrents", std::to_string(a.fake_torrents));
    row("legit torrents", std::to_string(a.legit_torrents));
    row("flagged at birth", std::to_string(a.flagged_at_birth) + " (" + num(100.0 * a.flagged_at_birth_fraction, 1) + "%)");
    row("median detection time saving (min)", a.median_saving_s ? num(*a.median_saving_s / 60.0, 1) : "n/a");
    row("fake downloads", std::to_string(a.fake_downloads));
    row("prevented vs portal (before removal)", std::to_string(a.prevented_downloads_vs_portal));
    row("prevented after portal removal", std::to_string(a.prevented_downloads_post_removal));
    row("prevented total", std::to_string(a.prevented_downloads_total));
    row("false positives", std::to_string(a.false_positives));
    row("false negatives", std::to_string(a.false_negatives));
    row("blacklisted IPs", std::to_string(a.fake_ips));
    for (const auto& [name, mean] : a.mean_account_lifetime_s)
        row(("mean account lifetime, " + name + " (min)").c_str(), num(mean / 60.0, 1));
    return out.str();
}

// ---------------------------------------------------------------------------
// replay adapter

SimulatedPortal::SimulatedPortal(std::shared_ptr<const SimReport> report, std::size_t feed_window)
    : report_(std::move(report)), feed_window_(feed_window) {
    by_publish_.resize(report_->torrents.size());
    std::iota(by_publish_.begin(), by_publish_.end(), std::size_t{0});
    std::stable_sort(by_publish_.begin(), by_publish_.end(), [&](std::size_t a, std::size_t b) {
        return report_->torrents[a].published_at < report_->torrents[b].published_at;
    });
    for (std::size_t i = 0; i < report_->torrents.size(); ++i) by_hash_[report_->torrents[i].infohash] = i;
    for (const auto& a : report_->accounts) removal_[a.username] = a.removed_at;
    now_ = report_->config.start_time;
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string rfc822(Timestamp t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    static const char* days[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
    static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s, %02d %s %04d %02d:%02d:%02d GMT", days[tm.tm_wday], tm.tm_mday,
                  months[tm.tm_mon], tm.tm_year + 1900, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace

FetchResult SimulatedPortal::fetch_feed() {
    auto end = std::upper_bound(by_publish_.begin(), by_publish_.end(), now_, [&](Timestamp now, std::size_t i) {
        return now < report_->torrents[i].published_at;
    });
    auto begin = end - static_cast<std::ptrdiff_t>(std::min<std::size_t>(feed_window_, static_cast<std::size_t>(end - by_publish_.begin())));
    std::string xml =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<rss version=\"2.0\" xmlns:dc=\"http://purl.org/dc/elements/1.1/\">\n<channel>\n<title>sim portal</title>\n";
    for (auto it = end; it != begin;) {
        const auto& t = report_->torrents[*--it];
        if (t.removed_at && *t.removed_at <= now_) continue;
        MagnetLink m{t.infohash, t.title, {tracker_url}};
        xml += "<item><title>" + xml_escape(t.title) + "</title><link>" + xml_escape(render_magnet(m)) +
               "</link><dc:creator>" + xml_escape(t.username) + "</dc:creator><pubDate>" + rfc822(t.published_at) +
               "</pubDate></item>\n";
    }
    xml += "</channel>\n</rss>\n";
    return {true, 200, std::move(xml), {}};
}

FetchResult SimulatedPortal::fetch_user_page(const std::string& username) {
    auto it = removal_.find(username);
    if (it == removal_.end() || (it->second && *it->second <= now_)) return {true, 404, "<html>not found</html>", {}};
    return {true, 200, "<html><body><div class=\"profile\">" + xml_escape(username) + "</div></body></html>", {}};
}

FetchResult SimulatedPortal::fetch_torrent(const std::string&) { return {true, 404, {}, {}}; }

FetchResult SimulatedPortal::announce(const std::string& url) const {
    auto q = url.find("info_hash=");
    if (url.rfind(tracker_url, 0) != 0 || q == std::string::npos) return {false, 0, {}, "unknown tracker"};
    auto end = url.find('&', q);
    auto raw = percent_decode(url.substr(q + 10, end == std::string::npos ? std::string::npos : end - q - 10));
    auto h = InfoHash::from_bytes(raw);
    auto it = h ? by_hash_.find(*h) : by_hash_.end();
    if (it == by_hash_.end())
        return {true, 200, bencode::encode(bencode::Dict{{"failure reason", "torrent not registered"}}), {}};
    const auto& t = report_->torrents[it->second];

    AnnounceResponse a;
    if (now_ - t.published_at <= birth_window) {
        a = t.birth_announce;
    } else {
        a.interval_s = 1800;
        a.seeders = 1;
        a.peers.push_back({t.ip, t.port});
        auto lo = std::lower_bound(t.downloads.begin(), t.downloads.end(), now_ - sample_window);
        auto hi = std::upper_bound(t.downloads.begin(), t.downloads.end(), now_);
        for (auto d = lo; d != hi; ++d)
            a.peers.push_back(victim(t.downloaders[static_cast<std::size_t>(d - t.downloads.begin())]));
        a.leechers = static_cast<std::int64_t>(a.peers.size() - 1);
    }
    bencode::Dict body{{"complete", a.seeders},
                       {"incomplete", a.leechers},
                       {"interval", a.interval_s},
                       {"peers", encode_compact_peers(a.peers)}};
    return {true, 200, bencode::encode(body), {}};
}

std::optional<wire::Bitfield> SimulatedPortal::bitfield(const InfoHash& h, const PeerEndpoint& peer) const {
    auto it = by_hash_.find(h);
    if (it == by_hash_.end()) return std::nullopt;
    const auto& t = report_->torrents[it->second];
    bool seeder = peer.ip == t.ip && peer.port == t.port;
    if (!seeder) {
        const auto& birth = t.birth_announce.peers;
        bool known = std::find(birth.begin(), birth.end(), peer) != birth.end();
        for (std::size_t i = 0; !known && i < t.downloaders.size(); ++i) known = victim(t.downloaders[i]) == peer;
        if (!known) return std::nullopt;
    }
    return wire::Bitfield{std::string(piece_count / 8, seeder ? '\xff' : '\xf0'), piece_count};
}

}  // namespace tg::sim
