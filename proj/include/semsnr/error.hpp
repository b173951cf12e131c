#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semsnr {

/// Failure categories shared by every module. Estimators map these onto
/// per-method statuses; the CLI maps them onto exit codes.
enum class Errc {
    domain,
    parse,
    size_mismatch,
    io,
    degenerate,
    nonpositive_signal,
    nonpositive_correlation,
    no_peak,
    log_domain,
    non_stationary,
    singular,
    inconsistent_currents,
    config,
    manifest,
};

inline std::string_view to_string(Errc c) {
    switch (c) {
    case Errc::domain: return "domain";
    case Errc::parse: return "parse";
    case Errc::size_mismatch: return "size_mismatch";
    case Errc::io: return "io";
    case Errc::degenerate: return "degenerate";
    case Errc::nonpositive_signal: return "nonpositive_signal";
    case Errc::nonpositive_correlation: return "nonpositive_correlation";
    case Errc::no_peak: return "no_peak";
    case Errc::log_domain: return "log_domain";
    case Errc::non_stationary: return "non_stationary";
    case Errc::singular: return "singular";
    case Errc::inconsistent_currents: return "inconsistent_currents";
    case Errc::config: return "config";
    case Errc::manifest: return "manifest";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace semsnr
