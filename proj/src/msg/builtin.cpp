// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/msg/builtin.hpp"

#include <cmath>
#include <fmt/format.h>
#include <map>
#include <mutex>
#include <set>

#include "bagpilot/error.hpp"
#include "bagpilot/util.hpp"

namespace bagpilot::msg {

namespace {

struct Component {
  std::string_view text;
  std::vector<std::string_view> deps;
};

// Field text for every type we ship, with the direct dependencies in the
// order genmsg emits them.
const std::map<std::string_view, Component>& components() {
  static const std::map<std::string_view, Component> table = {
      {"std_msgs/Header",
       {"# Standard metadata for higher-level stamped data types.\n"
        "uint32 seq\n"
        "time stamp\n"
        "string frame_id\n",
        {}}},
      {"geometry_msgs/Point", {"float64 x\nfloat64 y\nfloat64 z\n", {}}},
      {"geometry_msgs/Quaternion", {"float64 x\nfloat64 y\nfloat64 z\nfloat64 w\n", {}}},
      {"geometry_msgs/Vector3", {"float64 x\nfloat64 y\nfloat64 z\n", {}}},
      {"geometry_msgs/Pose",
       {"# A representation of pose in free space, composed of position and orientation.\n"
        "Point position\n"
        "Quaternion orientation\n",
        {"geometry_msgs/Point", "geometry_msgs/Quaternion"}}},
      {"geometry_msgs/PoseWithCovariance",
       {"Pose pose\n"
        "# Row-major 6x6 covariance matrix\n"
        "float64[36] covariance\n",
        {"geometry_msgs/Pose"}}},
      {"geometry_msgs/Twist",
       {"# This expresses velocity in free space broken into its linear and angular parts.\n"
        "Vector3  linear\n"
        "Vector3  angular\n",
        {"geometry_msgs/Vector3"}}},
      {"geometry_msgs/TwistWithCovariance",
       {"Twist twist\n"
        "float64[36] covariance\n",
        {"geometry_msgs/Twist"}}},
      {"geometry_msgs/TwistStamped", {"Header header\nTwist twist\n", {"std_msgs/Header", "geometry_msgs/Twist"}}},
      {"geometry_msgs/PoseStamped", {"Header header\nPose pose\n", {"std_msgs/Header", "geometry_msgs/Pose"}}},
      {"geometry_msgs/PoseWithCovarianceStamped",
       {"Header header\nPoseWithCovariance pose\n", {"std_msgs/Header", "geometry_msgs/PoseWithCovariance"}}},
      {"geometry_msgs/Transform",
       {"Vector3 translation\nQuaternion rotation\n", {"geometry_msgs/Vector3", "geometry_msgs/Quaternion"}}},
      {"geometry_msgs/TransformStamped",
       {"Header header\n"
        "string child_frame_id # the frame id of the child frame\n"
        "Transform transform\n",
        {"std_msgs/Header", "geometry_msgs/Transform"}}},
      {"tf2_msgs/TFMessage", {"geometry_msgs/TransformStamped[] transforms\n", {"geometry_msgs/TransformStamped"}}},
      {"nav_msgs/Odometry",
       {"# This represents an estimate of a position and velocity in free space.\n"
        "Header header\n"
        "string child_frame_id\n"
        "geometry_msgs/PoseWithCovariance pose\n"
        "geometry_msgs/TwistWithCovariance twist\n",
        {"std_msgs/Header", "geometry_msgs/PoseWithCovariance", "geometry_msgs/TwistWithCovariance"}}},
      {"sensor_msgs/LaserScan",
       {"Header header            # timestamp in the header is the acquisition time of the first ray\n"
        "float32 angle_min        # start angle of the scan [rad]\n"
        "float32 angle_max        # end angle of the scan [rad]\n"
        "float32 angle_increment  # angular distance between measurements [rad]\n"
        "float32 time_increment   # time between measurements [seconds]\n"
        "float32 scan_time        # time between scans [seconds]\n"
        "float32 range_min        # minimum range value [m]\n"
        "float32 range_max        # maximum range value [m]\n"
        "float32[] ranges         # range data [m]\n"
        "float32[] intensities    # intensity data [device-specific units]\n",
        {"std_msgs/Header"}}},
      {"sensor_msgs/CompressedImage",
       {"Header header\n"
        "string format\n"
        "uint8[] data\n",
        {"std_msgs/Header"}}},
      {"sensor_msgs/Image",
       {"Header header\n"
        "uint32 height\n"
        "uint32 width\n"
        "string encoding\n"
        "uint8 is_bigendian\n"
        "uint32 step\n"
        "uint8[] data\n",
        {"std_msgs/Header"}}},
      {"rosgraph_msgs/Log",
       {"##\n"
        "## Severity level constants\n"
        "##\n"
        "byte DEBUG=1 #debug level\n"
        "byte INFO=2  #general level\n"
        "byte WARN=4  #warning level\n"
        "byte ERROR=8 #error level\n"
        "byte FATAL=16 #fatal/critical level\n"
        "##\n"
        "## Fields\n"
        "##\n"
        "Header header\n"
        "byte level\n"
        "string name # name of the node\n"
        "string msg # message \n"
        "string file # file the message came from\n"
        "string function # function the message came from\n"
        "uint32 line # line the message came from\n"
        "string[] topics # topic names that the node publishes\n",
        {"std_msgs/Header"}}},
  };
  return table;
}

const std::map<std::string_view, std::string_view>& md5sums() {
  static const std::map<std::string_view, std::string_view> table = {
      {"std_msgs/Header", "2176decaecbce78abc3b96ef049fabed"},
      {"geometry_msgs/Twist", "9f195f881246fdfa2798d1d3eebca84a"},
      {"geometry_msgs/TwistStamped", "98d34b0043a2093cf9d9345ab6eef12e"},
      {"geometry_msgs/PoseStamped", "d3812c3cbc69362b77dc0b19b345f8f5"},
      {"geometry_msgs/PoseWithCovarianceStamped", "953b798c0f514ff060a53a3498ce6246"},
      {"geometry_msgs/TransformStamped", "b5764a33bfeb3588febc2682852579b0"},
      {"tf2_msgs/TFMessage", "94810edda583a504dfda3829e70d7eec"},
      {"nav_msgs/Odometry", "cd5e73d190d741a2f92e81eda573aca7"},
      {"sensor_msgs/LaserScan", "90c7ef2dc6895d81024acba2ac42f369"},
      {"sensor_msgs/CompressedImage", "8f7a12909da2c9d3332d540a0977563f"},
      {"sensor_msgs/Image", "060021388200f6f0f447d0fcd9c64743"},
      {"rosgraph_msgs/Log", "acffd30cd6b6de30f120938c17c593fb"},
  };
  return table;
}

void collect_deps(std::string_view type, std::vector<std::string_view>& order, std::set<std::string_view>& seen) {
  for (auto dep : components().at(type).deps) {
    if (seen.insert(dep).second) {
      order.push_back(dep);
      collect_deps(dep, order, seen);
    }
  }
}

std::string compose_definition(std::string_view type) {
  std::string text(components().at(type).text);
  std::vector<std::string_view> order;
  std::set<std::string_view> seen;
  collect_deps(type, order, seen);
  for (auto dep : order) {
    text += kDefinitionSeparator;
    text += fmt::format("\nMSG: {}\n", dep);
    text += components().at(dep).text;
  }
  return text;
}

}  // namespace

std::optional<BuiltinType> find_builtin(std::string_view type_name) {
  const auto it = md5sums().find(type_name);
  if (it == md5sums().end()) return std::nullopt;
  return BuiltinType{std::string(type_name), std::string(it->second), compose_definition(type_name)};
}

const BuiltinType& builtin(std::string_view type_name) {
  static std::mutex mu;
  static std::map<std::string, BuiltinType, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(type_name); it != cache.end()) return it->second;
  auto found = find_builtin(type_name);
  if (!found) {
    throw Error(Errc::UnresolvedNestedType, fmt::format("'{}' is not a built-in message type", type_name));
  }
  return cache.emplace(std::string(type_name), std::move(*found)).first->second;
}

const SchemaSet& builtin_schema(std::string_view type_name) {
  static std::mutex mu;
  static std::map<std::string, SchemaSet, std::less<>> cache;
  const auto& def = builtin(type_name);
  std::lock_guard lock(mu);
  if (auto it = cache.find(type_name); it != cache.end()) return it->second;
  return cache.emplace(std::string(type_name), parse_definition(def.definition, type_name)).first->second;
}

std::vector<std::string> builtin_type_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : md5sums()) names.emplace_back(name);
  return names;
}

double quaternion_yaw(double x, double y, double z, double w) noexcept {
  const double norm = std::sqrt(x * x + y * y + z * z + w * w);
  if (norm == 0.0 || !std::isfinite(norm)) return 0.0;
  x /= norm;
  y /= norm;
  z /= norm;
  w /= norm;
  return std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
}

bool is_pose_type(std::string_view type_name) noexcept {
  return type_name == kOdometry || type_name == kPoseStamped || type_name == kPoseWithCovarianceStamped;
}

std::optional<Pose2D> extract_pose2d(std::string_view type_name, const Value& message) {
  const Value* pose = nullptr;
  if (type_name == kOdometry || type_name == kPoseWithCovarianceStamped) {
    pose = &get_field(message, FieldPath{{"pose", "pose"}});
  } else if (type_name == kPoseStamped) {
    pose = &get_field(message, FieldPath{{"pose"}});
  } else {
    return std::nullopt;
  }
  const auto& p = get_field(*pose, FieldPath{{"position"}});
  const auto& q = get_field(*pose, FieldPath{{"orientation"}});
  auto num = [](const Value& parent, std::string_view name) {
    const auto* v = parent.find(name);
    return v ? to_real(*v).value_or(0.0) : 0.0;
  };
  return Pose2D{num(p, "x"), num(p, "y"),
                quaternion_yaw(num(q, "x"), num(q, "y"), num(q, "z"), num(q, "w"))};
}

std::string log_level_name(int level) {
  switch (level) {
    case 1: return "DEBUG";
    case 2: return "INFO";
    case 4: return "WARN";
    case 8: return "ERROR";
    case 16: return "FATAL";
    default: return fmt::format("LEVEL{}", level);
  }
}

std::optional<LogLevel> parse_log_level(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "debug" || t == "1") return LogLevel::Debug;
  if (t == "info" || t == "2") return LogLevel::Info;
  if (t == "warn" || t == "warning" || t == "4") return LogLevel::Warn;
  if (t == "error" || t == "8") return LogLevel::Error;
  if (t == "fatal" || t == "16") return LogLevel::Fatal;
  return std::nullopt;
}

}  // namespace bagpilot::msg
