#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace toss2d {

/// Shortest round-trip decimal representation of a double. Locale-free and
/// deterministic, so serialized outputs are byte-stable.
inline std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace toss2d
