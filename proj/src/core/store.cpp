#include "store.hpp"

#include "error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void io_fail(const std::string& what) { fail(Errc::io_error, what + ": " + std::strerror(errno)); }

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("write " + path.string());
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

}  // namespace

LogReadResult read_log(const fs::path& path, std::size_t from_offset) {
    LogReadResult out;
    out.end_offset = from_offset;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) return out;
        fail(Errc::io_error, "cannot open " + path.string());
    }
    in.seekg(static_cast<std::streamoff>(from_offset));
    if (!in) return out;
    std::string line;
    std::size_t offset = from_offset;
    std::size_t lineno = 0;
    std::uint64_t last = 0;
    while (true) {
        std::size_t start = offset;
        if (!std::getline(in, line)) break;
        ++lineno;
        bool terminated = !in.eof();
        offset += line.size() + (terminated ? 1 : 0);
        if (line.empty() && terminated) {
            out.end_offset = offset;
            continue;
        }
        try {
            if (!terminated) fail(Errc::corrupt_record, "unterminated final record");
            auto ev = event_from_line(line);
            if (ev.seq <= last) fail(Errc::corrupt_record, "sequence " + std::to_string(ev.seq) + " not increasing");
            last = ev.seq;
            out.events.push_back(std::move(ev));
            out.end_offset = offset;
        } catch (const Error& e) {
            out.corrupt_line = lineno;
            out.corrupt_offset = start;
            out.corrupt_detail = e.what();
            break;
        }
    }
    return out;
}

std::vector<DetectionEvent> read_events(const fs::path& path, std::uint64_t after_seq) {
    auto r = read_log(path);
    if (r.corrupt_line)
        fail(Errc::corrupt_record, path.string() + ": corrupt record at line " + std::to_string(*r.corrupt_line) +
                                       " (offset " + std::to_string(*r.corrupt_offset) + "): " + r.corrupt_detail);
    std::vector<DetectionEvent> out;
    for (auto& ev : r.events)
        if (ev.seq > after_seq) out.push_back(std::move(ev));
    return out;
}

EventLog::EventLog(fs::path path, Durability durability) : path_(std::move(path)), durability_(durability) {
    auto existing = read_events(path_);
    if (!existing.empty()) last_seq_ = existing.back().seq;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) io_fail("open " + path_.string());
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

EventLog::EventLog(EventLog&& other) noexcept
    : path_(std::move(other.path_)), durability_(other.durability_), fd_(other.fd_), last_seq_(other.last_seq_) {
    other.fd_ = -1;
}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        durability_ = other.durability_;
        fd_ = other.fd_;
        last_seq_ = other.last_seq_;
        other.fd_ = -1;
    }
    return *this;
}

void EventLog::append(const DetectionEvent& event) {
    if (event.seq <= last_seq_)
        fail(Errc::sequence_violation, "append: sequence " + std::to_string(event.seq) + " does not exceed " +
                                           std::to_string(last_seq_));
    write_all(fd_, event_to_line(event) + "\n", path_);
    if (durability_ == Durability::fsync && ::fsync(fd_) != 0) io_fail("fsync " + path_.string());
    last_seq_ = event.seq;
}

void replay(const fs::path& log_path, Engine& engine) {
    auto r = read_log(log_path);
    for (const auto& ev : r.events)
        if (ev.seq > engine.last_seq()) engine.ingest(ev);
    if (r.corrupt_line)
        fail(Errc::corrupt_record, log_path.string() + ": corrupt record at line " + std::to_string(*r.corrupt_line) +
                                       " (offset " + std::to_string(*r.corrupt_offset) + "): " + r.corrupt_detail);
}

void write_snapshot(const fs::path& path, const Engine& engine) {
    json j{{"format_version", snapshot_format_version}, {"last_seq", engine.last_seq()}, {"state", engine.to_json()}};
    fs::path tmp = path;
    tmp += ".tmp";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("open " + tmp.string());
    try {
        write_all(fd, j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n", tmp);
        if (::fsync(fd) != 0) io_fail("fsync " + tmp.string());
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(Errc::io_error, "rename " + tmp.string() + ": " + ec.message());
}

Engine read_snapshot(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(Errc::corrupt_record, path.string() + ": snapshot is not JSON");
    if (j.value("format_version", 0) != snapshot_format_version)
        fail(Errc::corrupt_record, path.string() + ": unsupported snapshot version");
    return Engine::from_json(j.at("state"));
}

Engine restore(const fs::path& log_path, const fs::path& snapshot_path, EngineConfig config) {
    auto log = read_log(log_path);
    std::uint64_t log_last = log.events.empty() ? 0 : log.events.back().seq;
    std::optional<Engine> engine;
    if (!snapshot_path.empty() && fs::exists(snapshot_path)) {
        try {
            Engine snap = read_snapshot(snapshot_path);
            // A snapshot ahead of the log describes events the log never made durable.
            if (snap.config().threshold == config.threshold && snap.config().retroactive == config.retroactive &&
                snap.last_seq() <= log_last)
                engine = std::move(snap);
        } catch (const Error&) {
        }
    }
    if (!engine) engine.emplace(config);
    for (const auto& ev : log.events)
        if (ev.seq > engine->last_seq()) engine->ingest(ev);
    if (log.corrupt_line)
        fail(Errc::corrupt_record, log_path.string() + ": corrupt record at line " +
                                       std::to_string(*log.corrupt_line) + ": " + log.corrupt_detail);
    return std::move(*engine);
}

}  // namespace tg
