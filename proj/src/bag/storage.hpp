// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "bagpilot/bag/format.hpp"

namespace bagpilot::bag {

/// Backing bytes of an open bag.
class Storage {
 public:
  virtual ~Storage() = default;
  virtual std::span<const std::uint8_t> payload(const MessageLocator& locator) const = 0;
};

/// Read-only memory map of a whole file.
class MappedFile {
 public:
  explicit MappedFile(const std::filesystem::path& path);
  ~MappedFile();
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  std::span<const std::uint8_t> bytes() const noexcept { return {data_, size_}; }

 private:
  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
};

class Ros1Storage final : public Storage {
 public:
  explicit Ros1Storage(const std::filesystem::path& path) : file_(path) {}

  std::span<const std::uint8_t> bytes() const noexcept { return file_.bytes(); }
  void set_chunk_data(std::uint64_t chunk_pos, std::uint64_t data_pos, std::uint64_t data_size) {
    chunk_data_[chunk_pos] = {data_pos, data_size};
  }
  std::span<const std::uint8_t> payload(const MessageLocator& locator) const override;

 private:
  MappedFile file_;
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> chunk_data_;
};

/// Decoded-then-reencoded payloads of a JSONL debug file; locators use
/// chunk_pos 0 and the message ordinal as offset.
class MemoryStorage final : public Storage {
 public:
  std::vector<std::vector<std::uint8_t>> payloads;

  std::span<const std::uint8_t> payload(const MessageLocator& locator) const override {
    return payloads.at(locator.offset);
  }
};

}  // namespace bagpilot::bag
