#pragma once

#include "events.hpp"
#include "swarm_observer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace tg {

enum class AccountStatus { active, removed, unknown };

enum class Classification { unknown, fake_by_account_removal, fake_at_birth, fake_retroactive };
const char* to_string(Classification c);
std::optional<Classification> classification_from_string(std::string_view s);
inline bool is_fake(Classification c) { return c != Classification::unknown; }

enum class IpState { clean, potential, fake };
const char* to_string(IpState s);

struct TorrentRecord {
    InfoHash infohash;
    std::string title;
    std::string username;
    Timestamp published_at = 0;
    std::optional<std::string> ip;  // initial seeder, first successful resolution wins
    Classification classification = Classification::unknown;
    std::optional<Timestamp> flagged_at;
    bool operator==(const TorrentRecord&) const = default;
};

struct PublisherRecord {
    std::string username;
    std::string portal;
    AccountStatus status = AccountStatus::active;
    std::optional<Timestamp> removed_at;
    std::set<std::string> ips;
    std::set<InfoHash> torrents;
    bool operator==(const PublisherRecord&) const = default;
};

struct IpReputation {
    std::string ip;
    IpState state = IpState::clean;
    std::set<std::string> removed_usernames;
    std::optional<Timestamp> fake_since;

    std::size_t removed_accounts() const { return removed_usernames.size(); }
    bool operator==(const IpReputation&) const = default;
};

struct Verdict {
    InfoHash infohash;
    Classification classification = Classification::unknown;
    std::string reason;
    std::optional<std::string> publisher_username;
    std::optional<std::string> publisher_ip;
    std::optional<Timestamp> flagged_at;
    bool operator==(const Verdict&) const = default;
};

struct StateChange {
    enum class Kind { torrent_classified, ip_state_changed, account_removed, ip_attributed };
    Kind kind;
    std::string subject;  // infohash hex, IP or username
    std::string detail;   // new classification / state
    Timestamp at = 0;
    bool operator==(const StateChange&) const = default;
};

struct Blacklists {
    std::vector<InfoHash> fake_infohashes;  // sorted by hex
    std::vector<std::string> fake_ips;      // sorted numerically
    bool operator==(const Blacklists&) const = default;
};

// Line formats served by the blacklist endpoints and CLI export.
std::string format_infohash_blacklist(const Blacklists& b);
std::string format_ip_blacklist(const Blacklists& b);

struct EngineConfig {
    /// Distinct removed accounts attributed to an IP before it is declared fake.
    unsigned threshold = 3;
    /// When an IP turns fake, also flag its still-unknown earlier torrents.
    bool retroactive = true;
};

/// Publisher/IP reputation state machine. Its state is a pure fold over the
/// ordered event log: Clean -> Potential(n) -> Fake once n >= threshold, and
/// every Fake* torrent classification is terminal.
class Engine {
public:
    explicit Engine(EngineConfig config = {});

    /// Applies one event atomically: on error nothing changes.
    /// Errors: out_of_order, unknown_torrent, time_regression.
    std::vector<StateChange> ingest(const DetectionEvent& event);

    Verdict query_verdict(const InfoHash& infohash) const;
    Blacklists export_blacklists() const;

    const EngineConfig& config() const { return config_; }
    std::uint64_t last_seq() const { return last_seq_; }
    const std::map<InfoHash, TorrentRecord>& torrents() const { return torrents_; }
    const std::map<std::string, PublisherRecord>& publishers() const { return publishers_; }
    const std::map<std::string, IpReputation>& ips() const { return ips_; }
    const SwarmObserver& swarm() const { return swarm_; }

    nlohmann::json to_json() const;
    static Engine from_json(const nlohmann::json& j);
    /// Hex SHA-1 of the canonical JSON state.
    std::string state_hash() const;

private:
    void attribute(const std::string& username, const std::string& ip, Timestamp at, std::vector<StateChange>& out);
    void classify(TorrentRecord& t, Classification c, Timestamp at, std::vector<StateChange>& out);

    EngineConfig config_;
    std::uint64_t last_seq_ = 0;
    std::map<InfoHash, TorrentRecord> torrents_;
    std::map<std::string, PublisherRecord> publishers_;
    std::map<std::string, IpReputation> ips_;
    std::map<std::string, std::set<InfoHash>> torrents_by_ip_;
    SwarmObserver swarm_;
};

/// Single writer, many readers. Readers never observe a half-applied event.
class SharedEngine {
public:
    explicit SharedEngine(Engine engine) : engine_(std::move(engine)) {}

    std::vector<StateChange> ingest(const DetectionEvent& event) {
        std::unique_lock lock(mutex_);
        return engine_.ingest(event);
    }

    template <typename F>
    auto read(F&& f) const {
        std::shared_lock lock(mutex_);
        return f(static_cast<const Engine&>(engine_));
    }

    template <typename F>
    auto write(F&& f) {
        std::unique_lock lock(mutex_);
        return f(engine_);
    }

private:
    mutable std::shared_mutex mutex_;
    Engine engine_;
};

}  // namespace tg
