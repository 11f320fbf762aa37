// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bagpilot {

/// Integer nanoseconds since the Unix epoch.
using TimeNs = std::int64_t;

inline constexpr TimeNs kNsPerSec = 1'000'000'000;

/// Converts fractional Unix seconds to nanoseconds. The integral part is split
/// off first so the conversion does not lose the sub-microsecond digits that a
/// plain `sec * 1e9` would.
TimeNs seconds_to_ns(double seconds);
double ns_to_seconds(TimeNs ns);

/// Spacing, in nanoseconds, between `seconds` and the next representable
/// double. Inclusive windows given in seconds are widened by this much so
/// that a message time printed as seconds and sent back still selects it.
TimeNs seconds_resolution_ns(double seconds);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(InvalidArgument) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase copy.
std::string to_lower(std::string_view text);

}  // namespace bagpilot
