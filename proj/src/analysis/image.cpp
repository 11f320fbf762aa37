// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <fmt/format.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::analysis {

namespace {

std::string mime_for(std::string_view format, std::span<const std::uint8_t> data) {
  const auto f = to_lower(format);
  if (f.find("png") != std::string::npos) return "image/png";
  if (f.find("jpeg") != std::string::npos || f.find("jpg") != std::string::npos) return "image/jpeg";
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G'};
  if (data.size() >= 4 && std::equal(data.begin(), data.begin() + 4, kPng)) return "image/png";
  if (data.size() >= 3 && data[0] == 0xFF && data[1] == 0xD8 && data[2] == 0xFF) return "image/jpeg";
  return {};
}

}  // namespace

ImageResult get_image_at_time(const bag::BagHandle& bag, std::string_view topic_name, double time,
                              double tolerance) {
  const auto topic = store::resolve_topic(bag, topic_name);
  for (const auto* c : bag.connections_for_topic(topic)) {
    if (c->type_name == msg::kImage) {
      throw Error(Errc::UnsupportedImageEncoding,
                  fmt::format("'{}' carries raw sensor_msgs/Image; only sensor_msgs/CompressedImage (JPEG or PNG) "
                              "topics can be extracted",
                              topic));
    }
    if (c->type_name != msg::kCompressedImage) {
      throw Error(Errc::UnsupportedImageEncoding,
                  fmt::format("'{}' carries {}, not sensor_msgs/CompressedImage", topic, c->type_name));
    }
  }
  const auto m = store::message_at_time(bag, topic, time, tolerance);
  ImageResult r;
  r.topic = topic;
  r.time_ns = m.message.time_ns;
  r.requested_time = time;
  r.delta = m.delta;
  const auto& v = m.message.value;
  if (const auto* f = v.find("format"); f && f->is<std::string>()) r.format = f->as<std::string>();
  if (const auto* h = v.find("header")) {
    if (const auto* id = h->find("frame_id"); id && id->is<std::string>()) r.frame_id = id->as<std::string>();
  }
  for (const auto& b : msg::get_field(v, msg::FieldPath::parse("data")).as<msg::Array>()) {
    r.data.push_back(static_cast<std::uint8_t>(*msg::to_real(b)));
  }
  r.mime_type = mime_for(r.format, r.data);
  if (r.mime_type.empty()) {
    throw Error(Errc::UnsupportedImageEncoding,
                fmt::format("image format '{}' on '{}' is neither JPEG nor PNG", r.format, topic));
  }
  return r;
}

nlohmann::json to_json(const ImageResult& r) {
  return {{"image_topic", r.topic},     {"requested_time", r.requested_time}, {"actual_time", ns_to_seconds(r.time_ns)},
          {"delta", r.delta},           {"frame_id", r.frame_id},             {"format", r.format},
          {"mime_type", r.mime_type},   {"size_bytes", r.data.size()}};
}

}  // namespace bagpilot::analysis
