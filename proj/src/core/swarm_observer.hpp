#pragma once

#include "types.hpp"

#include <map>
#include <mutex>
#include <set>
#include <vector>

namespace tg {

struct SwarmSample {
    Timestamp at = 0;
    std::set<PeerEndpoint> endpoints;
    bool operator==(const SwarmSample&) const = default;
};

struct SwarmSampleLog {
    InfoHash infohash;
    std::vector<SwarmSample> samples;  // non-decreasing timestamps

    /// Throws Errc::time_regression if `at` precedes the last sample.
    void record(std::set<PeerEndpoint> endpoints, Timestamp at);
    bool operator==(const SwarmSampleLog&) const = default;
};

/// Distinct downloader IPs (ports ignored) across samples taken at or before `until`.
std::size_t unique_downloads(const SwarmSampleLog& log, Timestamp until);

struct DownloadCounts {
    std::size_t until_removal = 0;
    std::size_t until_end = 0;
};

/// Per-infohash sample logs. Appends to one infohash are serialized.
class SwarmObserver {
public:
    SwarmObserver() = default;
    SwarmObserver(const SwarmObserver& other);
    SwarmObserver& operator=(const SwarmObserver& other);

    void record_sample(const InfoHash& infohash, std::set<PeerEndpoint> endpoints, Timestamp at);
    /// Validates without recording.
    void check_sample(const InfoHash& infohash, Timestamp at) const;

    std::size_t unique_downloads(const InfoHash& infohash, Timestamp until) const;
    DownloadCounts cut_points(const InfoHash& infohash, Timestamp removed_at, Timestamp observation_end) const;

    std::vector<SwarmSampleLog> logs() const;

private:
    mutable std::mutex mutex_;
    std::map<InfoHash, SwarmSampleLog> logs_;
};

}  // namespace tg
