// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bagpilot/msg/schema.hpp"
#include "bagpilot/msg/value.hpp"

namespace bagpilot::msg {

/// A message type shipped with verified schemas.
struct BuiltinType {
  std::string type_name;
  std::string md5sum;
  /// Full embedded definition text, dependency blocks included, in the layout
  /// recorders write into connection headers.
  std::string definition;
};

/// nullopt if `type_name` is not one of the built-in types.
std::optional<BuiltinType> find_builtin(std::string_view type_name);
/// Throws Error(UnresolvedNestedType) for unknown names.
const BuiltinType& builtin(std::string_view type_name);
/// Parsed schemas, cached. Throws like builtin().
const SchemaSet& builtin_schema(std::string_view type_name);
std::vector<std::string> builtin_type_names();

inline constexpr std::string_view kOdometry = "nav_msgs/Odometry";
inline constexpr std::string_view kTwist = "geometry_msgs/Twist";
inline constexpr std::string_view kTwistStamped = "geometry_msgs/TwistStamped";
inline constexpr std::string_view kPoseStamped = "geometry_msgs/PoseStamped";
inline constexpr std::string_view kPoseWithCovarianceStamped = "geometry_msgs/PoseWithCovarianceStamped";
inline constexpr std::string_view kLaserScan = "sensor_msgs/LaserScan";
inline constexpr std::string_view kCompressedImage = "sensor_msgs/CompressedImage";
inline constexpr std::string_view kImage = "sensor_msgs/Image";
inline constexpr std::string_view kTfMessage = "tf2_msgs/TFMessage";
inline constexpr std::string_view kTransformStamped = "geometry_msgs/TransformStamped";
inline constexpr std::string_view kLog = "rosgraph_msgs/Log";
inline constexpr std::string_view kHeader = "std_msgs/Header";

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Yaw of a quaternion, normalising it first. Zero for a zero quaternion.
double quaternion_yaw(double x, double y, double z, double w) noexcept;

/// True for types whose planar pose can be read by extract_pose2d.
bool is_pose_type(std::string_view type_name) noexcept;

/// Planar pose of an Odometry (pose.pose), PoseStamped (pose) or
/// PoseWithCovarianceStamped (pose.pose) message; nullopt for other types.
std::optional<Pose2D> extract_pose2d(std::string_view type_name, const Value& message);

/// rosgraph_msgs/Log severities.
enum class LogLevel : std::uint8_t { Debug = 1, Info = 2, Warn = 4, Error = 8, Fatal = 16 };

/// "DEBUG", "INFO", ...; "LEVEL<n>" for values outside the enum.
std::string log_level_name(int level);
/// Case-insensitive name or numeric value; nullopt when unknown.
std::optional<LogLevel> parse_log_level(std::string_view text);

}  // namespace bagpilot::msg
