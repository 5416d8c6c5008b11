#ifndef SPADSIM_TIME_PS_HPP
#define SPADSIM_TIME_PS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace spadsim {

// Simulation time is kept in integer picoseconds. Event ordering is then a
// plain integer comparison, so merged streams and reruns are bit-stable.
// All external interfaces (configs, CSV files) speak seconds.
using picos = std::int64_t;

inline constexpr picos kPicosPerSecond = 1'000'000'000'000LL;
inline constexpr picos kPicosPerNanosecond = 1'000LL;

inline picos seconds_to_picos(double s) {
    return static_cast<picos>(std::llround(s * static_cast<double>(kPicosPerSecond)));
}

inline constexpr double picos_to_seconds(picos t) {
    return static_cast<double>(t) / static_cast<double>(kPicosPerSecond);
}

inline constexpr double picos_to_nanoseconds(picos t) {
    return static_cast<double>(t) / static_cast<double>(kPicosPerNanosecond);
}

/// Exact decimal rendering of a picosecond timestamp as seconds
/// ("0.000000123456"). Used by the log writers so that output files are
/// byte-identical across reruns.
inline std::string format_seconds(picos t) {
    const bool neg = t < 0;
    const picos abs = neg ? -t : t;
    const picos whole = abs / kPicosPerSecond;
    const picos frac = abs % kPicosPerSecond;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%lld.%012lld", neg ? "-" : "",
                  static_cast<long long>(whole), static_cast<long long>(frac));
    return buf;
}

} // namespace spadsim

#endif
