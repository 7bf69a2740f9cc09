#pragma once

// Camera conventions: right-handed world, camera looks along -z with +y up
// and +x right. Poses are camera-to-world (rotation = orientation, translation
// = camera center). Pixel u grows right, v grows down; integer pixel
// coordinates address pixel centers.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace worldwalk {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

  constexpr Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double determinant() const;
  constexpr bool operator==(const Mat3&) const = default;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies in the image.
  void validate() const;

  /// Pinhole intrinsics with square pixels and a centered principal point.
  static CameraIntrinsics centered(int width, int height, double focal);

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Unit quaternion rotation.
class Rotation {
 public:
  constexpr Rotation() = default;

  /// Normalizes (w, x, y, z); throws InvalidArgument on a zero or non-finite quaternion.
  static Rotation from_quaternion(double w, double x, double y, double z);
  /// Accepts an orthonormal, det +1 matrix (tolerance 1e-6).
  static Rotation from_matrix(const Mat3& m);
  static Rotation identity() { return {}; }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Mat3 matrix() const;
  Vec3 rotate(const Vec3& v) const { return matrix() * v; }
  Rotation operator*(const Rotation& o) const;
  Rotation inverse() const;
  double dot(const Rotation& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

  /// Rotation angle in [0, pi] of this^-1 * other.
  double angle_to(const Rotation& other) const;

  bool operator==(const Rotation&) const = default;

 private:
  constexpr Rotation(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

struct CameraPose {
  Rotation rotation;  // camera-to-world
  Vec3 translation;   // camera center in world

  static CameraPose identity() { return {}; }
  CameraPose inverse() const;
  /// (this * other)(X) = this(other(X)).
  CameraPose compose(const CameraPose& other) const;
  bool operator==(const CameraPose&) const = default;
};

Vec3 camera_to_world(const CameraPose& pose, const Vec3& point_camera);
Vec3 world_to_camera(const CameraPose& pose, const Vec3& point_world);

/// Negative third column of the rotation matrix: the camera's viewing direction.
Vec3 forward_vector(const CameraPose& pose);

/// Rotation about +y by the given angle in degrees.
Rotation rotation_y(double theta_deg);

/// Shortest-path spherical interpolation. Angles below 1e-8 rad fall back to
/// normalized linear interpolation.
Rotation slerp(const Rotation& a, const Rotation& b, double u);

// ---------------------------------------------------------------------------
// Actions and trajectories

enum class Key : std::uint8_t { W = 1, A = 2, S = 4, D = 8 };

/// Subset of {W, A, S, D}; empty means idle.
class KeySet {
 public:
  constexpr KeySet() = default;
  constexpr KeySet(std::initializer_list<Key> keys) {
    for (Key k : keys) bits_ |= static_cast<std::uint8_t>(k);
  }
  /// Parses characters from "WASD" (case-insensitive); "" and "IDLE" give the
  /// empty set. Throws InvalidArgument on any other character.
  static KeySet parse(std::string_view text);

  constexpr bool has(Key k) const { return (bits_ & static_cast<std::uint8_t>(k)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  /// Canonical "WASD"-ordered string; "" when idle.
  std::string str() const;
  constexpr bool operator==(const KeySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ActionParams {
  static constexpr double kDefaultEta = 0.05;
  static constexpr double kDefaultThetaDeg = 30.0;
  static constexpr int kDefaultFrames = 33;

  double eta = kDefaultEta;            // world units per frame
  double theta_deg = kDefaultThetaDeg;  // total yaw per interaction
  int frames = kDefaultFrames;          // f

  /// Geometry-level checks: eta >= 0, theta in [0, 180], frames >= 1.
  void validate_motion() const;
  /// Full session-level checks: motion checks plus frames >= 2 and frames = 1 (mod 4).
  void validate() const;
  bool operator==(const ActionParams&) const = default;
};

struct Action {
  KeySet keys;
  ActionParams params;
  bool operator==(const Action&) const = default;
};

struct Trajectory {
  std::vector<CameraPose> poses;  // f + 1 poses, index 0 is the initial pose

  int frames() const { return static_cast<int>(poses.size()) - 1; }
  const CameraPose& initial() const { return poses.front(); }
  const CameraPose& final() const { return poses.back(); }
};

/// Maps an action to f + 1 poses starting at `initial` (kept bit-exactly).
/// Per frame the rotation is the slerp towards initial * R_y(+-theta) and the
/// translation advances by +-eta along the forward vector of that frame's
/// rotation. Opposite keys cancel.
Trajectory action_to_trajectory(const Action& action, const CameraPose& initial);

}  // namespace worldwalk
