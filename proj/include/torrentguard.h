/* torrentguard.h - C interface to the TorrentGuard detection engine.
 *
 * Every function returning tg_status reports failure through the code and
 * leaves a message retrievable with tg_last_error_message() on the calling
 * thread. Strings returned through char** are heap buffers released with
 * tg_buffer_free(); const char* results borrowed from a handle live as long
 * as that handle.
 */
#ifndef TORRENTGUARD_H
#define TORRENTGUARD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TG_API __declspec(dllexport)
#else
#define TG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tg_status {
    TG_OK = 0,
    TG_ERR_INVALID_ARGUMENT = 1,
    TG_ERR_TRUNCATED = 2,
    TG_ERR_MALFORMED = 3,
    TG_ERR_DUPLICATE_KEY = 4,
    TG_ERR_MISSING_FIELD = 5,
    TG_ERR_BAD_PIECES = 6,
    TG_ERR_NO_INFOHASH = 7,
    TG_ERR_BAD_LENGTH = 8,
    TG_ERR_UNSUPPORTED_SCHEME = 9,
    TG_ERR_TRACKER_FAILURE = 10,
    TG_ERR_BAD_COMPACT_LENGTH = 11,
    TG_ERR_BAD_PROTOCOL_STRING = 12,
    TG_ERR_SPARE_BIT_SET = 13,
    TG_ERR_LENGTH_MISMATCH = 14,
    TG_ERR_MALFORMED_XML = 15,
    TG_ERR_OUT_OF_ORDER = 16,
    TG_ERR_UNKNOWN_TORRENT = 17,
    TG_ERR_TIME_REGRESSION = 18,
    TG_ERR_IO = 19,
    TG_ERR_SEQUENCE_VIOLATION = 20,
    TG_ERR_CORRUPT_RECORD = 21,
    TG_ERR_INVALID_CONFIG = 22,
    TG_ERR_EMPTY_INPUT = 23,
    TG_ERR_ZERO_THRESHOLD = 24,
    TG_ERR_NETWORK = 25,
    TG_ERR_READ_ONLY = 90,
    TG_ERR_INTERNAL = 99
} tg_status;

TG_API const char* tg_version(void);
/* Stable identifier such as "Malformed" or "Ok". */
TG_API const char* tg_status_string(tg_status status);
/* Detail for the last failure on this thread; "" after a success. */
TG_API const char* tg_last_error_message(void);
TG_API void tg_buffer_free(char* buffer);

/* ---- engine: detection state backed by a data directory ---------------- */

typedef struct tg_engine tg_engine;

typedef struct tg_engine_options {
    unsigned threshold;  /* K; 0 selects the default of 3 */
    int no_retroactive;  /* nonzero: never flag torrents published before the IP turned fake */
    int writable;        /* nonzero: open the event log for appending (one writer per directory) */
    int no_fsync;        /* nonzero: skip fsync on append */
} tg_engine_options;

/* Creates data_dir if needed and restores state from the snapshot and event
 * log in it. opts may be NULL. */
TG_API tg_status tg_engine_open(const char* data_dir, const tg_engine_options* opts, tg_engine** out);
TG_API void tg_engine_close(tg_engine* engine);

/* Applies records another process appended to the log since the last call. */
TG_API tg_status tg_engine_refresh(tg_engine* engine, size_t* applied);
/* Writes a snapshot of the current state next to the log. */
TG_API tg_status tg_engine_snapshot(tg_engine* engine);
/* Appends one event given as a JSON log record; its seq is replaced by the
 * next sequence number. Writable engines only. */
TG_API tg_status tg_engine_append_event(tg_engine* engine, const char* json_record, uint64_t* seq_out);
TG_API uint64_t tg_engine_last_seq(const tg_engine* engine);
/* Hex SHA-1 of the canonical state. */
TG_API tg_status tg_engine_state_hash(const tg_engine* engine, char** out);

/* ---- verdicts ----------------------------------------------------------- */

typedef struct tg_verdict tg_verdict;

TG_API tg_status tg_engine_check_hex(const tg_engine* engine, const char* infohash_hex, tg_verdict** out);
TG_API tg_status tg_engine_check_magnet(const tg_engine* engine, const char* magnet_uri, tg_verdict** out);
TG_API tg_status tg_engine_check_torrent(const tg_engine* engine, const void* data, size_t size, tg_verdict** out);

TG_API const char* tg_verdict_infohash(const tg_verdict* v);
/* unknown | fake_by_account_removal | fake_at_birth | fake_retroactive */
TG_API const char* tg_verdict_classification(const tg_verdict* v);
TG_API int tg_verdict_is_fake(const tg_verdict* v);
TG_API const char* tg_verdict_reason(const tg_verdict* v);
/* NULL when not known. */
TG_API const char* tg_verdict_publisher_username(const tg_verdict* v);
TG_API const char* tg_verdict_publisher_ip(const tg_verdict* v);
/* Returns 0 when the torrent was never flagged. */
TG_API int tg_verdict_flagged_at(const tg_verdict* v, int64_t* unix_seconds);
/* The HTTP API's JSON rendering of the verdict. */
TG_API tg_status tg_verdict_to_json(const tg_verdict* v, char** out);
TG_API void tg_verdict_free(tg_verdict* v);

/* ---- blacklists and statistics ------------------------------------------ */

typedef enum tg_blacklist_kind { TG_BLACKLIST_INFOHASHES = 0, TG_BLACKLIST_IPS = 1 } tg_blacklist_kind;

/* One entry per line, newline terminated; empty when nothing is listed. */
TG_API tg_status tg_engine_export_blacklist(const tg_engine* engine, tg_blacklist_kind kind, char** out, size_t* size);
/* JSON: counts, contribution curve, detection savings and per-user download CDFs. */
TG_API tg_status tg_engine_stats_json(const tg_engine* engine, char** out);

/* ---- HTTP verdict service ----------------------------------------------- */

typedef struct tg_server tg_server;

typedef struct tg_server_options {
    const char* host;           /* NULL: 127.0.0.1 */
    int port;                   /* 0: ephemeral */
    size_t max_body_bytes;      /* 0: 8 MiB */
    const char* static_dir;     /* optional directory served at / */
    unsigned refresh_interval_ms; /* 0: no log following */
} tg_server_options;

/* The server reads the engine; with a refresh interval it also follows the
 * log for records written by a separate monitor process. The engine must
 * outlive the server. */
TG_API tg_status tg_server_start(tg_engine* engine, const tg_server_options* opts, tg_server** out);
TG_API int tg_server_port(const tg_server* server);
TG_API void tg_server_stop(tg_server* server);

/* ---- portal monitor pipeline ------------------------------------------- */

typedef struct tg_monitor tg_monitor;

typedef enum tg_adapter { TG_ADAPTER_FIXTURE = 0, TG_ADAPTER_SIMULATOR = 1 } tg_adapter;

typedef struct tg_monitor_options {
    tg_adapter adapter;
    const char* fixture_dir;      /* TG_ADAPTER_FIXTURE */
    const char* sim_config_json;  /* TG_ADAPTER_SIMULATOR; NULL or "" for defaults */
    uint64_t sim_seed;            /* used when has_sim_seed */
    int has_sim_seed;
    int64_t feed_interval_s;      /* 0: 60 */
    int64_t account_interval_s;   /* 0: 300 */
    int64_t swarm_interval_s;     /* 0: 300; negative disables sampling */
    unsigned probe_cap;           /* 0: 16 */
    unsigned parallelism;         /* 0: 4 */
    unsigned timeout_ms;          /* network timeouts, 0: 10000 */
} tg_monitor_options;

typedef struct tg_tick_summary {
    uint64_t published;
    uint64_t resolved;
    uint64_t unresolved;
    uint64_t removed;
    uint64_t swarm_samples;
    uint64_t flagged;
} tg_tick_summary;

/* engine must be writable and outlive the monitor. */
TG_API tg_status tg_monitor_create(tg_engine* engine, const tg_monitor_options* opts, tg_monitor** out);
/* One polling round at `now` (unix seconds). */
TG_API tg_status tg_monitor_tick(tg_monitor* monitor, int64_t now, tg_tick_summary* summary);
/* Simulator adapter only: ticks every step_s seconds across the simulated
 * run, accumulating into summary. */
TG_API tg_status tg_monitor_run_simulated(tg_monitor* monitor, int64_t step_s, tg_tick_summary* summary);
/* Start and end of the simulated run; fails for the fixture adapter. */
TG_API tg_status tg_monitor_sim_window(const tg_monitor* monitor, int64_t* start, int64_t* end);
/* Newline-separated warnings collected since the last call. */
TG_API tg_status tg_monitor_take_warnings(tg_monitor* monitor, char** out);
TG_API void tg_monitor_free(tg_monitor* monitor);

/* ---- simulator ----------------------------------------------------------- */

/* config_json may be NULL for defaults; a seed overrides the config's. Either
 * output pointer may be NULL. */
TG_API tg_status tg_simulate(const char* config_json, const uint64_t* seed, char** report_json, char** summary_text);

/* ---- analytics ----------------------------------------------------------- */

TG_API tg_status tg_countermeasure_cost(double accounts_per_day, unsigned threshold, double* ips_per_day,
                                        double* ips_per_month);

#ifdef __cplusplus
}
#endif

#endif
