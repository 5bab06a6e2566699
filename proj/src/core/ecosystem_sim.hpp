#pragma once

#include "detection_core.hpp"
#include "events.hpp"
#include "peer_wire.hpp"
#include "portal_monitor.hpp"
#include "tracker_client.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tg::sim {

enum class Strategy { burst, conservative, legit };
const char* to_string(Strategy s);

struct BurstSpec {
    unsigned count = 8;
    unsigned torrents_per_account = 10;
    double accounts_per_day = 4.0;
    double removal_delay_mean_s = 5520;  // 92 min
    double downloaders_per_torrent_mean = 84;
};

struct ConservativeSpec {
    unsigned count = 8;
    unsigned torrents_per_account_min = 1;
    unsigned torrents_per_account_max = 2;
    double accounts_per_day = 4.0;
    double removal_delay_mean_s = 15180;  // 253 min
    double downloaders_per_torrent_mean = 47;
};

struct LegitSpec {
    unsigned count = 40;
    double torrents_per_day = 2.0;
    double downloaders_per_torrent_mean = 84;
};

struct SimConfig {
    std::uint64_t rng_seed = 1;
    Timestamp start_time = 1'300'000'000;
    Timestamp duration_s = 14 * 86400;
    BurstSpec burst;
    ConservativeSpec conservative;
    LegitSpec legit;
    double seeder_resolution_probability = 0.5;
    /// Of the resolvable torrents, the share whose first announce also lists
    /// leechers, so the seeder must be found by probing bitfields.
    double probe_case_probability = 0.3;
    unsigned threshold = 3;
    bool retroactive = true;
    /// 0: each fake publisher keeps one static IP. N: fresh IP every N accounts.
    unsigned fresh_ip_every_accounts = 0;
    /// Mean of the exponential delay between a torrent's birth and each download.
    double download_decay_mean_s = 21600;
    unsigned victim_pool = 50'000;
    /// Publishing gap between consecutive torrents of one burst account.
    double burst_gap_max_s = 5;

    /// Throws Errc::invalid_config.
    void validate() const;
};

SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& c);

struct AccountOutcome {
    std::string publisher;
    std::string username;
    Strategy strategy = Strategy::burst;
    std::string ip;
    Timestamp created_at = 0;
    double removal_delay_s = 0;        // drawn lifetime, whether or not it ends inside the run
    std::optional<Timestamp> removed_at;  // set when removal falls inside the run
};

struct TorrentOutcome {
    InfoHash infohash;
    std::string title;
    std::string publisher;
    std::string username;
    Strategy strategy = Strategy::burst;
    std::string ip;
    std::uint16_t port = 0;
    Timestamp published_at = 0;
    std::optional<Timestamp> removed_at;  // portal removal (account deletion)
    std::optional<Timestamp> flagged_at;
    Classification classification = Classification::unknown;
    bool seeder_resolved = false;
    AnnounceResponse birth_announce;
    std::vector<Timestamp> downloads;        // sorted, inside the observation window
    std::vector<std::uint32_t> downloaders;  // victim index per download, same order

    bool fake() const { return strategy != Strategy::legit; }
};

struct PolicyTorrent {
    std::size_t total = 0;
    std::size_t avoided_before_removal = 0;  // flagged <= t < portal removal
    std::size_t avoided_after_removal = 0;   // t >= portal removal and t >= flag
    std::size_t not_avoided = 0;             // t < flag, or never flagged
};

struct PolicyComparison {
    std::vector<PolicyTorrent> per_torrent;  // aligned with SimReport::torrents; legit entries are zero
    std::size_t avoided_before_removal = 0;
    std::size_t avoided_after_removal = 0;
    std::size_t avoided_total = 0;
    std::size_t not_avoided = 0;
    std::size_t total_fake_downloads = 0;
};

struct Aggregates {
    std::size_t fake_torrents = 0;
    std::size_t legit_torrents = 0;
    std::size_t flagged_at_birth = 0;
    double flagged_at_birth_fraction = 0;
    std::vector<double> detection_time_saving_s;  // portal removal - flag, for fakes flagged earlier
    std::optional<double> median_saving_s;
    std::size_t prevented_downloads_vs_portal = 0;
    std::size_t prevented_downloads_post_removal = 0;
    std::size_t prevented_downloads_total = 0;
    std::size_t fake_downloads = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::map<std::string, std::uint64_t> fake_torrents_per_publisher;
    std::map<std::string, double> mean_account_lifetime_s;  // by strategy name
    std::size_t fake_ips = 0;
};

struct SimReport {
    SimConfig config;
    std::vector<AccountOutcome> accounts;
    std::vector<TorrentOutcome> torrents;
    std::vector<DetectionEvent> events;  // exactly what the engine consumed
    Blacklists blacklists;
    Aggregates aggregates;
};

/// Deterministic for a given config: the same config yields a byte-identical
/// report_to_json() dump.
SimReport run_simulation(const SimConfig& config);

/// Splits each fake torrent's downloads by the flag and portal-removal instants.
PolicyComparison evaluate_policies(const SimReport& report);

/// Per-torrent records carry download counts, not individual times.
nlohmann::json report_to_json(const SimReport& report);
std::string summary_table(const SimReport& report);

/// A portal, tracker and swarm driven by a finished simulation, replayed at
/// whatever instant set_now() selects. Lets the monitor pipeline run against
/// synthetic data end to end.
class SimulatedPortal final : public PortalAdapter {
public:
    explicit SimulatedPortal(std::shared_ptr<const SimReport> report, std::size_t feed_window = 200);

    void set_now(Timestamp now) { now_ = now; }
    Timestamp now() const { return now_; }

    FetchResult fetch_feed() override;
    FetchResult fetch_user_page(const std::string& username) override;
    FetchResult fetch_torrent(const std::string& url) override;
    std::string portal_id() const override { return "sim"; }

    /// Tracker for announce URLs naming http://tracker.sim/announce. Within
    /// birth_window of publication it returns the recorded birth response;
    /// later it lists the seeder plus downloaders from the last sample window.
    FetchResult announce(const std::string& url) const;
    /// Complete bitfield for the torrent's seeder, a partial one for anyone
    /// else in its swarm, nullopt for strangers.
    std::optional<wire::Bitfield> bitfield(const InfoHash& h, const PeerEndpoint& peer) const;

    static constexpr const char* tracker_url = "http://tracker.sim/announce";
    static constexpr std::uint32_t piece_count = 64;
    static constexpr Timestamp birth_window = 300;
    static constexpr Timestamp sample_window = 600;

private:
    std::shared_ptr<const SimReport> report_;
    std::size_t feed_window_;
    Timestamp now_ = 0;
    std::vector<std::size_t> by_publish_;  // torrent indices sorted by publish time
    std::map<InfoHash, std::size_t> by_hash_;
    std::map<std::string, std::optional<Timestamp>> removal_;
};

}  // namespace tg::sim
