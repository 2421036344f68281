// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_FORMAT_HPP
#define FACETRACK_FORMAT_HPP

#include <cstdio>
#include <string>
#include <string_view>

namespace facetrack {

/// Fixed 9-significant-digit rendering shared by every file writer, so output
/// bytes depend only on the values.
inline void append_number(std::string& out, double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

/// Appends `text` as a quoted, escaped JSON string.
void append_json_string(std::string& out, std::string_view text);

inline std::string format_number(double v) {
    std::string s;
    append_number(s, v);
    return s;
}

}  // namespace facetrack

#endif  // FACETRACK_FORMAT_HPP
