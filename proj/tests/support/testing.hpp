// SPDX-License-Identifier: Apache-2.0
// Shared helpers for unit and acceptance tests: temp directories, a random
// message-definition generator with an independent byte writer, and random
// bag inputs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bagpilot/bag/format.hpp"

namespace bagpilot::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct GenField {
  std::string name;
  std::string prim;    // primitive name as written, empty for nested
  std::string nested;  // full type name when prim is empty
  int array = 0;       // 0 none, 1 fixed, 2 variable
  std::size_t length = 0;
};

struct GenType {
  std::string name;
  std::vector<GenField> fields;
};

/// A random acyclic type family. types[0] is the root.
struct RandomCase {
  std::vector<GenType> types;
  std::string definition;
  const std::string& root_type() const { return types.front().name; }
};

RandomCase random_case(std::mt19937_64& rng);

/// Serializes a random value of the root type by hand, without the codec.
std::vector<std::uint8_t> random_payload(const RandomCase& c, std::mt19937_64& rng);

struct RandomBag {
  std::vector<bag::ConnectionRecord> connections;
  std::vector<bag::RawMessage> messages;  // sorted by time
};

/// Up to `max_messages` messages over 1-4 connections, opaque payloads.
RandomBag random_bag(std::mt19937_64& rng, std::size_t max_messages);

/// Overwrites the index_pos value of the bag header record with zero.
void zero_index_pos(const std::filesystem::path& bag);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Structural PNG check: signature, chunk CRCs, IHDR first, IEND last.
struct PngInfo {
  bool valid = false;
  std::string problem;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

PngInfo inspect_png(std::span<const std::uint8_t> bytes);

}  // namespace bagpilot::testing
