#pragma once

#include <stdexcept>
#include <string>

namespace cdt {

// Contract violations surfaced by the library. Codes are stable identifiers
// so callers (and tests) can dispatch without parsing messages.
enum class errc {
    empty_keyword_set,
    persona_formation_failure,
    config_invalid,
    unknown_setup,
    snapshot_malformed,
    single_class_training,
    insufficient_samples,
    wrong_model_kind,
    schema_mismatch,
    incomplete_stage,
    stage_overrun,
    ecosystem_unavailable,
    io_failure,
};

const char* errc_name(errc code);

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what_arg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what_arg), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

} // namespace cdt
