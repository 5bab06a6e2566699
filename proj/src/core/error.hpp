#pragma once

#include <stdexcept>
#include <string>

namespace tg {

// Every failure the core can report. The C API maps these one-to-one onto
// tg_status values, so append new codes at the end.
enum class Errc {
    invalid_argument = 1,
    truncated,
    malformed,
    duplicate_key,
    missing_field,
    bad_pieces,
    no_infohash,
    bad_length,
    unsupported_scheme,
    tracker_failure,
    bad_compact_length,
    bad_protocol_string,
    spare_bit_set,
    length_mismatch,
    malformed_xml,
    out_of_order,
    unknown_torrent,
    time_regression,
    io_error,
    sequence_violation,
    corrupt_record,
    invalid_config,
    empty_input,
    zero_threshold,
    network_error,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace tg
