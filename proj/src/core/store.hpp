#pragma once

#include "detection_core.hpp"
#include "events.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tg {

enum class Durability {
    fsync,  // fsync before acknowledging each append
    flush,  // write(2) only; survives process crashes, not power loss
};

/// Append-only event log, one JSON record per line.
class EventLog {
public:
    /// Opens or creates the log, scanning it to find the last sequence number.
    /// A corrupt record anywhere fails the open with Errc::corrupt_record.
    explicit EventLog(std::filesystem::path path, Durability durability = Durability::fsync);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;
    EventLog(EventLog&& other) noexcept;
    EventLog& operator=(EventLog&& other) noexcept;

    /// Returns once the record is durable. Errors: sequence_violation, io_error.
    void append(const DetectionEvent& event);

    std::uint64_t last_seq() const { return last_seq_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    Durability durability_;
    int fd_ = -1;
    std::uint64_t last_seq_ = 0;
};

struct LogReadResult {
    std::vector<DetectionEvent> events;
    // Set when reading stopped at a record that failed to parse.
    std::optional<std::size_t> corrupt_line;    // 1-based
    std::optional<std::size_t> corrupt_offset;  // byte offset of that line
    std::string corrupt_detail;
    std::size_t end_offset = 0;  // just past the last well-formed record
};

/// Reads every well-formed record from `from_offset` on, stopping at the
/// first corrupt one. Line numbers count from the starting offset.
LogReadResult read_log(const std::filesystem::path& path, std::size_t from_offset = 0);

/// Events with seq > after_seq. Throws Errc::corrupt_record (with the
/// position in the message) if the log has a bad line.
std::vector<DetectionEvent> read_events(const std::filesystem::path& path, std::uint64_t after_seq = 0);

/// Feeds the log into `engine`. Throws Errc::corrupt_record at the first bad
/// line; events before it have already been applied.
void replay(const std::filesystem::path& log_path, Engine& engine);

inline constexpr int snapshot_format_version = 1;

/// Written to a temporary file and renamed into place.
void write_snapshot(const std::filesystem::path& path, const Engine& engine);
Engine read_snapshot(const std::filesystem::path& path);

/// Snapshot (when present and readable) plus the log suffix after it. The
/// log is authoritative: an unreadable snapshot falls back to full replay.
Engine restore(const std::filesystem::path& log_path, const std::filesystem::path& snapshot_path,
               EngineConfig config);

}  // namespace tg
