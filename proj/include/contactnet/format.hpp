#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace contactnet {

/// Shortest decimal string that round-trips the double. Used for CSV output
/// so emitted files are platform-stable and diff-friendly.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace contactnet
