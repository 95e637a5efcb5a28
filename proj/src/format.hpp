#pragma once

#include <charconv>
#include <string>

namespace debm {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace debm
