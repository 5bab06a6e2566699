#include "swarm_observer.hpp"

#include "error.hpp"

namespace tg {

void SwarmSampleLog::record(std::set<PeerEndpoint> endpoints, Timestamp at) {
    if (!samples.empty() && at < samples.back().at)
        fail(Errc::time_regression, "swarm sample at " + std::to_string(at) + " precedes last sample at " +
                                        std::to_string(samples.back().at));
    samples.push_back({at, std::move(endpoints)});
}

std::size_t unique_downloads(const SwarmSampleLog& log, Timestamp until) {
    std::set<std::string> ips;
    for (const auto& s : log.samples) {
        if (s.at > until) break;
        for (const auto& e : s.endpoints) ips.insert(e.ip);
    }
    return ips.size();
}

SwarmObserver::SwarmObserver(const SwarmObserver& other) {
    std::lock_guard lock(other.mutex_);
    logs_ = other.logs_;
}

SwarmObserver& SwarmObserver::operator=(const SwarmObserver& other) {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        logs_ = other.logs_;
    }
    return *this;
}

void SwarmObserver::check_sample(const InfoHash& infohash, Timestamp at) const {
    std::lock_guard lock(mutex_);
    auto it = logs_.find(infohash);
    if (it != logs_.end() && !it->second.samples.empty() && at < it->second.samples.back().at)
        fail(Errc::time_regression, "swarm sample for " + infohash.hex() + " goes back in time");
}

void SwarmObserver::record_sample(const InfoHash& infohash, std::set<PeerEndpoint> endpoints, Timestamp at) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = logs_.try_emplace(infohash);
    if (inserted) it->second.infohash = infohash;
    it->second.record(std::move(endpoints), at);
}

std::size_t SwarmObserver::unique_downloads(const InfoHash& infohash, Timestamp until) const {
    std::lock_guard lock(mutex_);
    auto it = logs_.find(infohash);
    return it == logs_.end() ? 0 : tg::unique_downloads(it->second, until);
}

DownloadCounts SwarmObserver::cut_points(const InfoHash& infohash, Timestamp removed_at,
                                         Timestamp observation_end) const {
    return {unique_downloads(infohash, removed_at), unique_downloads(infohash, observation_end)};
}

std::vector<SwarmSampleLog> SwarmObserver::logs() const {
    std::lock_guard lock(mutex_);
    std::vector<SwarmSampleLog> out;
    out.reserve(logs_.size());
    for (const auto& [_, log] : logs_) out.push_back(log);
    return out;
}

}  // namespace tg
