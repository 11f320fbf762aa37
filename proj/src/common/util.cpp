// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "bagpilot/error.hpp"

namespace bagpilot {

TimeNs seconds_to_ns(double seconds) {
  const double whole = std::floor(seconds);
  const double frac = seconds - whole;
  return static_cast<TimeNs>(whole) * kNsPerSec + std::llround(frac * 1e9);
}

double ns_to_seconds(TimeNs ns) {
  TimeNs whole = ns / kNsPerSec;
  TimeNs rem = ns % kNsPerSec;
  if (rem < 0) {
    rem += kNsPerSec;
    --whole;
  }
  return static_cast<double>(whole) + static_cast<double>(rem) * 1e-9;
}

TimeNs seconds_resolution_ns(double seconds) {
  const double a = std::abs(seconds);
  const double ulp = std::nextafter(a, INFINITY) - a;
  return static_cast<TimeNs>(std::ceil(ulp * 1e9));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.empty()) return {};
  if (clean.size() % 4 != 0) {
    throw Error(Errc::InvalidArgument, "base64 text length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(Errc::InvalidArgument, "malformed base64 text");
  // EVP_DecodeBlock does not account for padding.
  std::size_t size = static_cast<std::size_t>(n);
  if (clean.back() == '=') --size;
  if (clean.size() >= 2 && clean[clean.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace bagpilot
